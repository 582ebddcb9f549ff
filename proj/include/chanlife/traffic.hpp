#pragma once

#include <cstdint>
#include <iosfwd>
#include <functional>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "chanlife/graph.hpp"

namespace chanlife {

/// Funds assigned to every generated channel. The default is a balanced
/// 2.4 Msat channel.
struct FundPolicy {
    Satoshi fund_a = 1'200'000;
    Satoshi fund_b = 1'200'000;
};

/// G(n, p): every unordered pair gets a channel independently with
/// probability edge_prob.
PaymentGraph random_network(std::size_t n, double edge_prob, std::uint64_t seed, FundPolicy funds = {});

/// Preferential-attachment graph: starts from a clique on m+1 nodes and
/// attaches every further node to m distinct existing nodes chosen with
/// probability proportional to degree. Gives the hub-heavy centrality
/// profile of real channel graphs.
PaymentGraph preferential_attachment_network(std::size_t n, std::size_t m, std::uint64_t seed,
                                             FundPolicy funds = {});

struct MRatesConfig {
    std::size_t n = 50;
    double sparse_coefficient = 0.0;  // SC
    double skew = 1.0;                // SK
    double base_rate = 1.0;           // payments/day
    std::uint64_t seed = 0;

    void validate() const;
};

/// For every unordered pair s < t: with probability SC both entries stay 0;
/// otherwise MRates[s][t] = base_rate and MRates[t][s] = base_rate / SK.
RatesMatrix generate_mrates(const MRatesConfig& config);

struct PaymentEvent {
    double time = 0.0;  // days
    NodeId source = 0;
    NodeId destination = 0;
    Satoshi amount = 0;

    friend bool operator==(const PaymentEvent&, const PaymentEvent&) = default;
};

/// Lazily generated merge of independent Poisson processes, one per
/// ordered pair with a positive rate. Events come out in time order.
class PaymentStream {
public:
    PaymentStream(const RatesMatrix& rates, Satoshi omega, std::uint64_t seed,
                  std::optional<double> horizon = std::nullopt);

    /// Next event, or nullopt past the horizon or when every rate is 0.
    std::optional<PaymentEvent> next();
    double total_rate() const { return total_rate_; }

private:
    struct Source {
        NodeId from;
        NodeId to;
        double rate;
    };
    using Arrival = std::pair<double, std::size_t>;  // (time, source index)

    std::vector<Source> sources_;
    std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> pending_;
    std::exponential_distribution<double> unit_gap_{1.0};
    std::mt19937_64 rng_;
    Satoshi omega_;
    std::optional<double> horizon_;
    double total_rate_ = 0.0;
};

std::vector<PaymentEvent> generate_payment_stream(const RatesMatrix& rates, double horizon, Satoshi omega,
                                                  std::uint64_t seed);

/// CSV event log with header `time_days,source,destination,amount_sat`.
/// Node columns hold node indices.
void write_event_log(std::ostream& out, const std::vector<PaymentEvent>& events);
std::vector<PaymentEvent> read_event_log(std::istream& in);

}  // namespace chanlife
