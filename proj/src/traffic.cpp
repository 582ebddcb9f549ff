#include "chanlife/traffic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "chanlife/csv.hpp"

namespace chanlife {

PaymentGraph random_network(std::size_t n, double edge_prob, std::uint64_t seed, FundPolicy funds) {
    if (n < 2) throw ParameterError("a network needs at least two nodes");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw ParameterError("edge probability must lie in [0, 1]");

    PaymentGraph graph(n);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution link(edge_prob);
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
            if (link(rng)) graph.add_channel(i, j, funds.fund_a, funds.fund_b);
    return graph;
}

PaymentGraph preferential_attachment_network(std::size_t n, std::size_t m, std::uint64_t seed, FundPolicy funds) {
    if (m < 1) throw ParameterError("attachment count must be at least 1");
    if (n <= m) throw ParameterError("node count must exceed the attachment count");

    PaymentGraph graph(n);
    std::mt19937_64 rng(seed);
    // each node appears once per incident channel
    std::vector<NodeId> endpoints;
    for (NodeId i = 0; i <= m; ++i) {
        for (NodeId j = i + 1; j <= m; ++j) {
            graph.add_channel(i, j, funds.fund_a, funds.fund_b);
            endpoints.push_back(i);
            endpoints.push_back(j);
        }
    }
    if (endpoints.empty()) endpoints.push_back(0);

    std::vector<NodeId> targets;
    for (auto v = static_cast<NodeId>(m + 1); v < n; ++v) {
        targets.clear();
        std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
        while (targets.size() < m) {
            const NodeId u = endpoints[pick(rng)];
            if (std::find(targets.begin(), targets.end(), u) == targets.end()) targets.push_back(u);
        }
        for (NodeId u : targets) {
            graph.add_channel(u, v, funds.fund_a, funds.fund_b);
            endpoints.push_back(u);
            endpoints.push_back(v);
        }
    }
    return graph;
}

void MRatesConfig::validate() const {
    if (!(sparse_coefficient >= 0.0 && sparse_coefficient <= 1.0))
        throw ParameterError("sparse coefficient SC must lie in [0, 1]");
    if (!(skew >= 1.0) || !std::isfinite(skew)) throw ParameterError("skew SK must be >= 1");
    if (!(base_rate > 0.0) || !std::isfinite(base_rate)) throw ParameterError("base rate must be positive");
}

RatesMatrix generate_mrates(const MRatesConfig& config) {
    config.validate();
    RatesMatrix rates(config.n);
    std::mt19937_64 rng(config.seed);
    std::bernoulli_distribution sparse(config.sparse_coefficient);
    for (NodeId s = 0; s < config.n; ++s) {
        for (NodeId t = s + 1; t < config.n; ++t) {
            if (sparse(rng)) continue;
            rates.set(s, t, config.base_rate);
            rates.set(t, s, config.base_rate / config.skew);
        }
    }
    return rates;
}

PaymentStream::PaymentStream(const RatesMatrix& rates, Satoshi omega, std::uint64_t seed,
                             std::optional<double> horizon)
    : rng_(seed), omega_(omega), horizon_(horizon) {
    if (omega <= 0) throw ParameterError("payment size must be positive");
    if (horizon && !(*horizon > 0.0)) throw ParameterError("horizon must be positive");

    for (NodeId s = 0; s < rates.size(); ++s) {
        for (NodeId t = 0; t < rates.size(); ++t) {
            const double r = rates.at(s, t);
            if (r <= 0.0) continue;
            pending_.emplace(unit_gap_(rng_) / r, sources_.size());
            sources_.push_back({s, t, r});
            total_rate_ += r;
        }
    }
}

std::optional<PaymentEvent> PaymentStream::next() {
    if (pending_.empty()) return std::nullopt;
    const auto [time, index] = pending_.top();
    if (horizon_ && time > *horizon_) return std::nullopt;
    pending_.pop();
    const Source& src = sources_[index];
    pending_.emplace(time + unit_gap_(rng_) / src.rate, index);
    return PaymentEvent{time, src.from, src.to, omega_};
}

std::vector<PaymentEvent> generate_payment_stream(const RatesMatrix& rates, double horizon, Satoshi omega,
                                                  std::uint64_t seed) {
    PaymentStream stream(rates, omega, seed, horizon);
    std::vector<PaymentEvent> events;
    events.reserve(static_cast<std::size_t>(stream.total_rate() * horizon * 1.05) + 16);
    while (auto e = stream.next()) events.push_back(*e);
    return events;
}

void write_event_log(std::ostream& out, const std::vector<PaymentEvent>& events) {
    out << "time_days,source,destination,amount_sat\n";
    for (const auto& e : events)
        out << csv::format_double(e.time) << ',' << e.source << ',' << e.destination << ',' << e.amount << '\n';
}

std::vector<PaymentEvent> read_event_log(std::istream& in) {
    std::vector<PaymentEvent> events;
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line != "time_days,source,destination,amount_sat")
                throw ParseError("unexpected event log header '" + line + "'", line_no);
            continue;
        }
        const auto fields = csv::split(line);
        if (fields.size() != 4) throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
        PaymentEvent e;
        e.time = csv::parse_double(fields[0], "time_days", line_no);
        e.source = csv::parse_integer<NodeId>(fields[1], "source", line_no);
        e.destination = csv::parse_integer<NodeId>(fields[2], "destination", line_no);
        e.amount = csv::parse_integer<Satoshi>(fields[3], "amount_sat", line_no);
        if (!(e.time >= 0.0)) throw ParseError("event time must be non-negative", line_no);
        if (e.source == e.destination) throw ParseError("source and destination coincide", line_no);
        if (e.amount <= 0) throw ParseError("amount must be positive", line_no);
        if (!events.empty() && e.time < events.back().time) throw ParseError("events are not time-sorted", line_no);
        events.push_back(e);
    }
    return events;
}

}  // namespace chanlife
