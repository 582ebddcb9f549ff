#pragma once

// Independent reference computations used only by the tests. None of these
// share code with the library paths they check.

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "chanlife/graph.hpp"

namespace oracle {

/// Solves s_x = 1 + q s_{x-1} + p s_{x+1} on -b < x < a with s_{-b} = s_a = 0
/// by the Thomas algorithm. Returns s indexed by x + b.
inline std::vector<long double> absorption_by_recurrence(long double p, int a, int b) {
    const long double q = 1.0L - p;
    const int n = a + b - 1;  // interior unknowns
    std::vector<long double> s(a + b + 1, 0.0L);
    if (n <= 0) return s;
    // -q s_{k-1} + s_k - p s_{k+1} = 1
    std::vector<long double> c(n), d(n);
    for (int i = 0; i < n; ++i) {
        const long double lower = i > 0 ? -q : 0.0L;
        const long double denom = 1.0L - (i > 0 ? lower * c[i - 1] : 0.0L);
        c[i] = -p / denom;
        d[i] = (1.0L - (i > 0 ? lower * d[i - 1] : 0.0L)) / denom;
    }
    std::vector<long double> interior(n);
    interior[n - 1] = d[n - 1];
    for (int i = n - 2; i >= 0; --i) interior[i] = d[i] - c[i] * interior[i + 1];
    for (int i = 0; i < n; ++i) s[i + 1] = interior[i];
    return s;
}

/// The closed form exactly as printed for p != 1/2, evaluated naively in
/// long double. Only trustworthy for small a + b.
inline long double closed_form_as_printed(long double p, int a, int b) {
    const long double q = 1.0L - p;
    const long double num = a * std::pow(p, a) * (std::pow(p, b) - std::pow(q, b)) +
                            b * std::pow(q, b) * (std::pow(q, a) - std::pow(p, a));
    const long double den = (p - q) * (std::pow(p, a + b) - std::pow(q, a + b));
    return num / den;
}

struct PathCounts {
    std::uint64_t total = 0;
    std::map<std::pair<chanlife::NodeId, chanlife::NodeId>, std::uint64_t> through;  // directed edge -> count
};

/// All-pairs hop distances by Floyd-Warshall on the channel list.
inline std::vector<std::vector<int>> floyd_warshall(const chanlife::PaymentGraph& g) {
    const int n = static_cast<int>(g.node_count());
    const int inf = 1 << 20;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (int i = 0; i < n; ++i) d[i][i] = 0;
    for (const auto& ch : g.channels()) {
        d[ch.node_a][ch.node_b] = 1;
        d[ch.node_b][ch.node_a] = 1;
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    return d;
}

/// Enumerates every shortest s->t path explicitly.
inline PathCounts enumerate_shortest_paths(const chanlife::PaymentGraph& g, const std::vector<std::vector<int>>& dist,
                                           chanlife::NodeId s, chanlife::NodeId t) {
    PathCounts counts;
    const int target_len = dist[s][t];
    if (target_len >= (1 << 20)) return counts;
    const std::size_t n = g.node_count();
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (const auto& ch : g.channels()) adj[ch.node_a][ch.node_b] = adj[ch.node_b][ch.node_a] = true;

    std::vector<chanlife::NodeId> path{s};
    auto dfs = [&](auto&& self) -> void {
        const chanlife::NodeId v = path.back();
        if (static_cast<int>(path.size()) - 1 == target_len) {
            if (v != t) return;
            ++counts.total;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) ++counts.through[{path[i], path[i + 1]}];
            return;
        }
        for (chanlife::NodeId u = 0; u < n; ++u) {
            if (!adj[v][u]) continue;
            path.push_back(u);
            self(self);
            path.pop_back();
        }
    };
    dfs(dfs);
    return counts;
}

/// sum over ordered pairs of weight(s,t) * fraction of shortest paths through
/// each directed edge, keyed by (from, to).
template <typename Weight>
std::map<std::pair<chanlife::NodeId, chanlife::NodeId>, double> brute_force_flow(const chanlife::PaymentGraph& g,
                                                                                  Weight&& weight) {
    const auto dist = floyd_warshall(g);
    std::map<std::pair<chanlife::NodeId, chanlife::NodeId>, double> flow;
    for (const auto& ch : g.channels()) {
        flow[{ch.node_a, ch.node_b}] = 0.0;
        flow[{ch.node_b, ch.node_a}] = 0.0;
    }
    for (chanlife::NodeId s = 0; s < g.node_count(); ++s) {
        for (chanlife::NodeId t = 0; t < g.node_count(); ++t) {
            if (s == t) continue;
            const auto counts = enumerate_shortest_paths(g, dist, s, t);
            if (counts.total == 0) continue;
            for (const auto& [edge, k] : counts.through)
                flow[edge] += weight(s, t) * static_cast<double>(k) / static_cast<double>(counts.total);
        }
    }
    return flow;
}

/// Long-run failure rate of a lone channel whose A-side balance moves on
/// {0, 1, ..., levels} (in payment units): A->B with probability p fails at
/// level 0, B->A fails at the top level. Stationary law by power iteration
/// on the full transition matrix.
inline double stationary_failure_rate(double p, int levels) {
    const double q = 1.0 - p;
    const int n = levels + 1;
    std::vector<std::vector<double>> step(n, std::vector<double>(n, 0.0));
    for (int k = 0; k < n; ++k) {
        step[k][k > 0 ? k - 1 : k] += p;
        step[k][k < levels ? k + 1 : k] += q;
    }
    std::vector<double> pi(n, 1.0 / n);
    for (int iter = 0; iter < 200000; ++iter) {
        std::vector<double> next(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) next[j] += pi[i] * step[i][j];
        double change = 0.0;
        for (int i = 0; i < n; ++i) change += std::abs(next[i] - pi[i]);
        pi = std::move(next);
        if (change < 1e-15) break;
    }
    return pi[0] * p + pi[levels] * q;
}

}  // namespace oracle
