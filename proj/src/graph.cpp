#include "chanlife/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chanlife/walk.hpp"
#include "parallel.hpp"

namespace chanlife {

PaymentGraph::PaymentGraph(std::size_t node_count) {
    for (std::size_t i = 0; i < node_count; ++i) add_node();
}

NodeId PaymentGraph::add_node(std::string label) {
    const auto id = static_cast<NodeId>(out_.size());
    if (label.empty()) label = std::to_string(id);
    if (!by_label_.emplace(label, id).second) throw ParameterError("duplicate node label '" + label + "'");
    labels_.push_back(std::move(label));
    out_.emplace_back();
    in_.emplace_back();
    return id;
}

ChannelId PaymentGraph::add_channel(NodeId a, NodeId b, Satoshi fund_a, Satoshi fund_b) {
    if (a >= node_count() || b >= node_count()) throw ParameterError("channel endpoint is not a node of the graph");
    if (a == b) throw ParameterError("self-loop channel on node " + labels_[a]);
    if (fund_a < 0 || fund_b < 0) throw ParameterError("channel funds must be non-negative");
    if (edge_index_.contains(key(a, b)))
        throw ParameterError("channel " + labels_[a] + " - " + labels_[b] + " already exists");

    const auto c = static_cast<ChannelId>(channels_.size());
    channels_.push_back({a, b, fund_a, fund_b});
    const EdgeId fwd = forward_edge(c);
    const EdgeId bwd = backward_edge(c);
    out_[a].push_back({b, fwd});
    in_[b].push_back({a, fwd});
    out_[b].push_back({a, bwd});
    in_[a].push_back({b, bwd});
    edge_index_.emplace(key(a, b), fwd);
    edge_index_.emplace(key(b, a), bwd);
    return c;
}

void PaymentGraph::set_funds(ChannelId c, Satoshi fund_a, Satoshi fund_b) {
    if (fund_a < 0 || fund_b < 0) throw ParameterError("channel funds must be non-negative");
    auto& ch = channels_.at(c);
    ch.fund_a = fund_a;
    ch.fund_b = fund_b;
}

DirectedEdge PaymentGraph::edge(EdgeId e) const {
    const Channel& ch = channels_.at(channel_of(e));
    return (e & 1U) ? DirectedEdge{ch.node_b, ch.node_a} : DirectedEdge{ch.node_a, ch.node_b};
}

std::optional<EdgeId> PaymentGraph::find_edge(NodeId from, NodeId to) const {
    if (auto it = edge_index_.find(key(from, to)); it != edge_index_.end()) return it->second;
    return std::nullopt;
}

std::optional<NodeId> PaymentGraph::find_node(std::string_view label) const {
    if (auto it = by_label_.find(std::string(label)); it != by_label_.end()) return it->second;
    return std::nullopt;
}

RatesMatrix RatesMatrix::uniform(std::size_t n, double rate) {
    RatesMatrix m(n);
    for (NodeId s = 0; s < n; ++s)
        for (NodeId t = 0; t < n; ++t)
            if (s != t) m.set(s, t, rate);
    return m;
}

std::size_t RatesMatrix::index(NodeId s, NodeId t) const {
    if (s >= n_ || t >= n_) throw ParameterError("rates matrix index out of range");
    return std::size_t{s} * n_ + t;
}

void RatesMatrix::set(NodeId s, NodeId t, double rate) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw ParameterError("payment rates must be finite and non-negative");
    if (s == t && rate != 0.0) throw ParameterError("diagonal payment rates must be zero");
    rates_[index(s, t)] = rate;
}

bool RatesMatrix::is_symmetric() const {
    for (NodeId s = 0; s < n_; ++s)
        for (NodeId t = s + 1; t < n_; ++t)
            if (at(s, t) != at(t, s)) return false;
    return true;
}

double RatesMatrix::total() const {
    double sum = 0.0;
    for (double r : rates_) sum += r;
    return sum;
}

RatesMatrix RatesMatrix::scaled(double factor) const {
    if (!(factor >= 0.0)) throw ParameterError("scale factor must be non-negative");
    RatesMatrix m(*this);
    for (double& r : m.rates_) r *= factor;
    return m;
}

namespace {

// Sources are split into a fixed number of chunks so the floating-point
// reduction order does not depend on the worker count.
constexpr std::size_t kSourceChunks = 32;

// Brandes-style accumulation on the directed graph. For a source s the
// dependency of edge (v,w) is sigma(v)/sigma(w) * (weight(s,w) + delta(w)).
template <typename Weight>
std::vector<double> accumulate_flow(const PaymentGraph& graph, Weight&& weight) {
    const std::size_t n = graph.node_count();
    const std::size_t chunks = std::min(kSourceChunks, std::max<std::size_t>(n, 1));
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(graph.edge_count(), 0.0));

    detail::parallel_for(chunks, [&](std::size_t chunk) {
        std::vector<double>& flow = partial[chunk];
        std::vector<int> dist(n);
        std::vector<double> sigma(n);
        std::vector<double> delta(n);
        std::vector<NodeId> order;
        order.reserve(n);

        for (std::size_t src = chunk; src < n; src += chunks) {
            const auto s = static_cast<NodeId>(src);
            std::fill(dist.begin(), dist.end(), -1);
            std::fill(sigma.begin(), sigma.end(), 0.0);
            std::fill(delta.begin(), delta.end(), 0.0);
            order.clear();

            dist[s] = 0;
            sigma[s] = 1.0;
            order.push_back(s);
            for (std::size_t head = 0; head < order.size(); ++head) {
                const NodeId v = order[head];
                for (const Arc& arc : graph.out_arcs(v)) {
                    if (dist[arc.node] < 0) {
                        dist[arc.node] = dist[v] + 1;
                        order.push_back(arc.node);
                    }
                    if (dist[arc.node] == dist[v] + 1) sigma[arc.node] += sigma[v];
                }
            }

            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                const NodeId w = *it;
                if (w == s) continue;
                const double demand = weight(s, w) + delta[w];
                if (demand == 0.0) continue;
                for (const Arc& arc : graph.in_arcs(w)) {
                    if (dist[arc.node] != dist[w] - 1) continue;
                    const double share = sigma[arc.node] / sigma[w] * demand;
                    flow[arc.edge] += share;
                    delta[arc.node] += share;
                }
            }
        }
    });

    std::vector<double> total(graph.edge_count(), 0.0);
    for (const auto& flow : partial)
        for (std::size_t e = 0; e < total.size(); ++e) total[e] += flow[e];
    return total;
}

}  // namespace

EdgeBetweenness edge_betweenness(const PaymentGraph& graph) {
    return {accumulate_flow(graph, [](NodeId, NodeId) { return 1.0; })};
}

std::vector<double> undirected_edge_betweenness(const PaymentGraph& graph) {
    const std::size_t n = graph.node_count();
    std::vector<std::vector<std::pair<NodeId, ChannelId>>> adjacency(n);
    for (ChannelId c = 0; c < graph.channel_count(); ++c) {
        const Channel& ch = graph.channel(c);
        adjacency[ch.node_a].emplace_back(ch.node_b, c);
        adjacency[ch.node_b].emplace_back(ch.node_a, c);
    }

    const std::size_t chunks = std::min(kSourceChunks, std::max<std::size_t>(n, 1));
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(graph.channel_count(), 0.0));
    detail::parallel_for(chunks, [&](std::size_t chunk) {
        std::vector<double>& ebc = partial[chunk];
        std::vector<int> dist(n);
        std::vector<double> sigma(n);
        std::vector<double> delta(n);
        std::vector<NodeId> order;
        for (std::size_t s = chunk; s < n; s += chunks) {
            std::fill(dist.begin(), dist.end(), -1);
            std::fill(sigma.begin(), sigma.end(), 0.0);
            std::fill(delta.begin(), delta.end(), 0.0);
            order.assign(1, static_cast<NodeId>(s));
            dist[s] = 0;
            sigma[s] = 1.0;
            for (std::size_t head = 0; head < order.size(); ++head) {
                const NodeId v = order[head];
                for (auto [u, c] : adjacency[v]) {
                    if (dist[u] < 0) {
                        dist[u] = dist[v] + 1;
                        order.push_back(u);
                    }
                    if (dist[u] == dist[v] + 1) sigma[u] += sigma[v];
                }
            }
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                const NodeId w = *it;
                if (w == s) continue;
                for (auto [v, c] : adjacency[w]) {
                    if (dist[v] != dist[w] - 1) continue;
                    const double share = sigma[v] / sigma[w] * (1.0 + delta[w]);
                    ebc[c] += share;
                    delta[v] += share;
                }
            }
        }
    });

    std::vector<double> total(graph.channel_count(), 0.0);
    for (const auto& ebc : partial)
        for (std::size_t c = 0; c < total.size(); ++c) total[c] += ebc[c];
    // every unordered pair was visited once from each endpoint
    for (double& v : total) v /= 2.0;
    return total;
}

std::vector<double> edge_payment_rates(const PaymentGraph& graph, const RatesMatrix& rates) {
    if (rates.size() != graph.node_count()) throw ParameterError("rates matrix size does not match the graph");
    return accumulate_flow(graph, [&](NodeId s, NodeId t) { return rates.at(s, t); });
}

double edge_payment_rate(const PaymentGraph& graph, const RatesMatrix& rates, EdgeId edge) {
    if (edge >= graph.edge_count()) throw ParameterError("edge is not part of the graph");
    return edge_payment_rates(graph, rates)[edge];
}

double channel_direction_probability(const PaymentGraph& graph, const RatesMatrix& rates, ChannelId c) {
    if (c >= graph.channel_count()) throw ParameterError("channel is not part of the graph");
    const auto lambda = edge_payment_rates(graph, rates);
    return direction_probability(lambda[PaymentGraph::forward_edge(c)], lambda[PaymentGraph::backward_edge(c)]);
}

SymmetryReport verify_symmetric_rates(const PaymentGraph& graph, const RatesMatrix& rates, double tolerance) {
    if (!rates.is_symmetric()) throw ParameterError("rates matrix is not symmetric");
    const auto lambda = edge_payment_rates(graph, rates);

    SymmetryReport report;
    for (ChannelId c = 0; c < graph.channel_count(); ++c) {
        const double fwd = lambda[PaymentGraph::forward_edge(c)];
        const double bwd = lambda[PaymentGraph::backward_edge(c)];
        const double scale = std::max(fwd, bwd);
        const double deviation = scale > 0.0 ? std::abs(fwd - bwd) / scale : 0.0;
        if (deviation > report.max_relative_deviation || !report.worst_channel) {
            report.max_relative_deviation = deviation;
            report.worst_channel = c;
        }
    }
    if (report.max_relative_deviation > tolerance) {
        const Channel& ch = graph.channel(*report.worst_channel);
        std::ostringstream msg;
        msg << "directional rates differ on channel " << *report.worst_channel << " (" << graph.label(ch.node_a)
            << " - " << graph.label(ch.node_b) << "): relative deviation " << report.max_relative_deviation;
        throw InvariantViolation(msg.str());
    }
    return report;
}

}  // namespace chanlife
