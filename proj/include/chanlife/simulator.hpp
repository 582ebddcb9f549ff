#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "chanlife/graph.hpp"
#include "chanlife/traffic.hpp"

namespace chanlife {

struct ChannelState {
    Satoshi fund_a = 0;
    Satoshi fund_b = 0;
    Satoshi capacity = 0;
    std::optional<double> first_unbalance_time;
    /// Successful payments through this channel up to and including the
    /// one that unbalanced it; one walk step per payment.
    std::optional<std::uint64_t> first_unbalance_step;
    std::uint64_t attempts = 0;
    std::uint64_t successes = 0;

    bool unbalanced(Satoshi omega) const { return fund_a < omega || fund_b < omega; }
};

/// All-pairs hop distances and shortest-path counts, used to draw a
/// uniformly random shortest path without enumerating paths.
class RouteTable {
public:
    explicit RouteTable(const PaymentGraph& graph);

    std::size_t node_count() const { return n_; }
    /// -1 when t is unreachable from s.
    int distance(NodeId s, NodeId t) const { return dist_[index(s, t)]; }
    double path_count(NodeId s, NodeId t) const { return sigma_[index(s, t)]; }

    /// Writes the edges of a uniformly drawn shortest s->t path into `path`
    /// (in travel order). Returns false when t is unreachable.
    bool sample_path(NodeId s, NodeId t, std::mt19937_64& rng, std::vector<EdgeId>& path) const;

private:
    std::size_t index(NodeId s, NodeId t) const { return std::size_t{s} * n_ + t; }

    const PaymentGraph* graph_;
    std::size_t n_;
    std::vector<int> dist_;
    std::vector<double> sigma_;
};

struct RouteOutcome {
    bool success = false;
    bool reachable = false;
    std::vector<EdgeId> path;
};

/// Balance-tracking payment router. Each payment takes one uniformly drawn
/// shortest path and either moves omega across every hop or changes nothing.
class Simulator {
public:
    Simulator(const PaymentGraph& graph, const RouteTable& routes, Satoshi omega);

    RouteOutcome route_payment(const PaymentEvent& event, std::mt19937_64& rng);

    /// Moves all funds of channel c to one endpoint.
    void drain(ChannelId c, bool toward_a);

    std::span<const ChannelState> states() const { return states_; }
    std::uint64_t attempts() const { return attempts_; }
    std::uint64_t successes() const { return successes_; }
    std::size_t unbalanced_count() const { return unbalanced_; }
    Satoshi omega() const { return omega_; }

private:
    const PaymentGraph* graph_;
    const RouteTable* routes_;
    Satoshi omega_;
    std::vector<ChannelState> states_;
    std::uint64_t attempts_ = 0;
    std::uint64_t successes_ = 0;
    std::size_t unbalanced_ = 0;
};

struct SimResult {
    std::vector<ChannelState> channels;
    std::uint64_t network_attempts = 0;
    std::uint64_t network_successes = 0;

    double success_rate() const {
        return network_attempts ? static_cast<double>(network_successes) / static_cast<double>(network_attempts)
                                : 0.0;
    }
};

/// Replays `events` in order. Every event amount must equal omega.
SimResult run_simulation(const PaymentGraph& graph, std::span<const PaymentEvent> events, Satoshi omega,
                         std::uint64_t seed);

struct SingleChannelResult {
    double failure_rate = 0.0;
    std::uint64_t unbalance_step = 0;  // 1-based payment index
    std::uint64_t attempts_after = 0;
    std::uint64_t failures_after = 0;
};

/// A lone balanced channel receives n_payments payments, each A->B with
/// probability p. Reports the failure rate over payments after the first
/// unbalance; throws NoUnbalanceError when no such payment exists.
SingleChannelResult single_channel_experiment(double p, Satoshi capacity, Satoshi omega, std::uint64_t n_payments,
                                              std::uint64_t seed);

struct RandomSelection {
    double fraction = 0.0;
};
struct TopBetweennessSelection {
    double fraction = 0.0;
};
/// Channels ranked [start_rank, start_rank + width) by betweenness.
struct WindowSelection {
    std::size_t start_rank = 0;
    std::size_t width = 0;
};
using ChannelSelection = std::variant<RandomSelection, TopBetweennessSelection, WindowSelection>;

/// Forces a selection of channels fully one-sided, then routes payments
/// between uniformly drawn node pairs and measures the network success rate.
class UnbalanceExperiment {
public:
    UnbalanceExperiment(const PaymentGraph& graph, Satoshi omega);

    double run(const ChannelSelection& selection, std::uint64_t n_payments, std::uint64_t seed) const;
    std::vector<ChannelId> select(const ChannelSelection& selection, std::mt19937_64& rng) const;
    /// Channels by undirected betweenness, most central first.
    const std::vector<ChannelId>& centrality_ranking() const { return ranking_; }

private:
    const PaymentGraph* graph_;
    Satoshi omega_;
    RouteTable routes_;
    std::vector<ChannelId> ranking_;
};

double unbalance_experiment(const PaymentGraph& graph, const ChannelSelection& selection, std::uint64_t n_payments,
                            std::uint64_t seed, Satoshi omega);

/// Per-channel CSV: channel_id,node_a,node_b,capacity_sat,fund_a_sat,fund_b_sat,
/// first_unbalance_step_payments,first_unbalance_time_days,attempts,successes
void write_channel_results(std::ostream& out, const PaymentGraph& graph, const SimResult& result);
void write_run_summary(std::ostream& out, const SimResult& result, Satoshi omega);

}  // namespace chanlife
