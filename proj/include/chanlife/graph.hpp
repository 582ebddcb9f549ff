#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chanlife/errors.hpp"

namespace chanlife {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;
using ChannelId = std::uint32_t;

struct Channel {
    NodeId node_a = 0;
    NodeId node_b = 0;
    Satoshi fund_a = 0;
    Satoshi fund_b = 0;

    Satoshi capacity() const { return fund_a + fund_b; }
};

struct DirectedEdge {
    NodeId from = 0;
    NodeId to = 0;
};

struct Arc {
    NodeId node = 0;  // head for out-arcs, tail for in-arcs
    EdgeId edge = 0;
};

/// Payment network. Every channel contributes the two directed edges
/// a->b (id 2c) and b->a (id 2c+1), so the edge set is always closed under
/// reversal. Self-loops and parallel channels are rejected.
class PaymentGraph {
public:
    PaymentGraph() = default;
    explicit PaymentGraph(std::size_t node_count);

    NodeId add_node(std::string label = {});
    ChannelId add_channel(NodeId a, NodeId b, Satoshi fund_a, Satoshi fund_b);

    std::size_t node_count() const { return out_.size(); }
    std::size_t channel_count() const { return channels_.size(); }
    std::size_t edge_count() const { return 2 * channels_.size(); }

    const Channel& channel(ChannelId c) const { return channels_.at(c); }
    std::span<const Channel> channels() const { return channels_; }
    void set_funds(ChannelId c, Satoshi fund_a, Satoshi fund_b);

    DirectedEdge edge(EdgeId e) const;
    static ChannelId channel_of(EdgeId e) { return e / 2; }
    static EdgeId forward_edge(ChannelId c) { return 2 * c; }
    static EdgeId backward_edge(ChannelId c) { return 2 * c + 1; }
    static EdgeId reverse(EdgeId e) { return e ^ 1U; }

    std::optional<EdgeId> find_edge(NodeId from, NodeId to) const;
    std::span<const Arc> out_arcs(NodeId v) const { return out_.at(v); }
    std::span<const Arc> in_arcs(NodeId v) const { return in_.at(v); }

    const std::string& label(NodeId v) const { return labels_.at(v); }
    std::optional<NodeId> find_node(std::string_view label) const;

private:
    static std::uint64_t key(NodeId from, NodeId to) { return (std::uint64_t{from} << 32) | to; }

    std::vector<Channel> channels_;
    std::vector<std::vector<Arc>> out_;
    std::vector<std::vector<Arc>> in_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, NodeId> by_label_;
    std::unordered_map<std::uint64_t, EdgeId> edge_index_;
};

/// Dense matrix of per-ordered-pair payment rates (payments/day).
class RatesMatrix {
public:
    RatesMatrix() = default;
    explicit RatesMatrix(std::size_t n) : n_(n), rates_(n * n, 0.0) {}

    /// Every off-diagonal entry equal to `rate`.
    static RatesMatrix uniform(std::size_t n, double rate);

    std::size_t size() const { return n_; }
    double at(NodeId s, NodeId t) const { return rates_[index(s, t)]; }
    void set(NodeId s, NodeId t, double rate);
    bool is_symmetric() const;
    /// Sum of all entries.
    double total() const;
    RatesMatrix scaled(double factor) const;

private:
    std::size_t index(NodeId s, NodeId t) const;

    std::size_t n_ = 0;
    std::vector<double> rates_;
};

/// Per directed edge: sum over ordered pairs (s,t), s != t, of the fraction
/// of hop-count shortest s->t paths that use the edge.
struct EdgeBetweenness {
    std::vector<double> values;

    double operator[](EdgeId e) const { return values.at(e); }
};

EdgeBetweenness edge_betweenness(const PaymentGraph& graph);

/// Betweenness of each channel in the undirected graph, summed over
/// unordered node pairs. Equals edge_betweenness of either direction.
std::vector<double> undirected_edge_betweenness(const PaymentGraph& graph);

/// Payment rate carried by every directed edge: sum over ordered pairs of
/// the shortest-path fraction through the edge times MRates[s][t].
std::vector<double> edge_payment_rates(const PaymentGraph& graph, const RatesMatrix& rates);
double edge_payment_rate(const PaymentGraph& graph, const RatesMatrix& rates, EdgeId edge);

/// Probability that a payment on channel c flows node_a -> node_b.
double channel_direction_probability(const PaymentGraph& graph, const RatesMatrix& rates, ChannelId c);

struct SymmetryReport {
    double max_relative_deviation = 0.0;
    std::optional<ChannelId> worst_channel;
};

inline constexpr double kSymmetryTolerance = 1e-12;

/// Checks that symmetric rates give equal directional rates on every
/// channel. Throws ParameterError for asymmetric input and
/// InvariantViolation naming the channel when a deviation exceeds the
/// tolerance.
SymmetryReport verify_symmetric_rates(const PaymentGraph& graph, const RatesMatrix& rates,
                                      double tolerance = kSymmetryTolerance);

}  // namespace chanlife
