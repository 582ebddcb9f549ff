#include "chanlife/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "chanlife/csv.hpp"
#include "parallel.hpp"

namespace chanlife {

RouteTable::RouteTable(const PaymentGraph& graph)
    : graph_(&graph), n_(graph.node_count()), dist_(n_ * n_, -1), sigma_(n_ * n_, 0.0) {
    detail::parallel_for(n_, [&](std::size_t src) {
        const auto s = static_cast<NodeId>(src);
        int* dist = &dist_[index(s, 0)];
        double* sigma = &sigma_[index(s, 0)];
        std::vector<NodeId> queue{s};
        dist[s] = 0;
        sigma[s] = 1.0;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const NodeId v = queue[head];
            for (const Arc& arc : graph.out_arcs(v)) {
                if (dist[arc.node] < 0) {
                    dist[arc.node] = dist[v] + 1;
                    queue.push_back(arc.node);
                }
                if (dist[arc.node] == dist[v] + 1) sigma[arc.node] += sigma[v];
            }
        }
    });
}

bool RouteTable::sample_path(NodeId s, NodeId t, std::mt19937_64& rng, std::vector<EdgeId>& path) const {
    path.clear();
    if (s >= n_ || t >= n_) throw ParameterError("route endpoint is not a node of the graph");
    if (distance(s, t) < 0) return false;

    // Walk back from t, picking each predecessor with probability
    // sigma(s,u)/sigma(s,v); the product over hops is 1/sigma(s,t).
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    NodeId v = t;
    while (v != s) {
        const int want = distance(s, v) - 1;
        double draw = unit(rng) * path_count(s, v);
        const Arc* chosen = nullptr;
        for (const Arc& arc : graph_->in_arcs(v)) {
            if (distance(s, arc.node) != want) continue;
            chosen = &arc;
            draw -= path_count(s, arc.node);
            if (draw < 0.0) break;
        }
        path.push_back(chosen->edge);
        v = chosen->node;
    }
    std::reverse(path.begin(), path.end());
    return true;
}

Simulator::Simulator(const PaymentGraph& graph, const RouteTable& routes, Satoshi omega)
    : graph_(&graph), routes_(&routes), omega_(omega) {
    if (omega <= 0) throw ParameterError("payment size must be positive");
    if (routes.node_count() != graph.node_count()) throw ParameterError("route table belongs to another graph");
    states_.reserve(graph.channel_count());
    for (const Channel& ch : graph.channels()) {
        ChannelState st;
        st.fund_a = ch.fund_a;
        st.fund_b = ch.fund_b;
        st.capacity = ch.capacity();
        if (st.unbalanced(omega)) {
            st.first_unbalance_time = 0.0;
            st.first_unbalance_step = 0;
            ++unbalanced_;
        }
        states_.push_back(st);
    }
}

void Simulator::drain(ChannelId c, bool toward_a) {
    ChannelState& st = states_.at(c);
    st.fund_a = toward_a ? st.capacity : 0;
    st.fund_b = st.capacity - st.fund_a;
}

RouteOutcome Simulator::route_payment(const PaymentEvent& event, std::mt19937_64& rng) {
    if (event.amount != omega_) throw ParameterError("payment amount differs from the simulator payment size");
    if (event.source >= graph_->node_count() || event.destination >= graph_->node_count())
        throw ParameterError("payment endpoint is not a node of the graph");

    RouteOutcome outcome;
    ++attempts_;
    outcome.reachable = routes_->sample_path(event.source, event.destination, rng, outcome.path);
    if (!outcome.reachable) return outcome;

    bool funded = true;
    for (EdgeId e : outcome.path) {
        ChannelState& st = states_[PaymentGraph::channel_of(e)];
        ++st.attempts;
        const Satoshi sender = (e & 1U) ? st.fund_b : st.fund_a;
        if (sender < omega_) funded = false;
    }
    if (!funded) return outcome;

    for (EdgeId e : outcome.path) {
        ChannelState& st = states_[PaymentGraph::channel_of(e)];
        if (e & 1U) {
            st.fund_b -= omega_;
            st.fund_a += omega_;
        } else {
            st.fund_a -= omega_;
            st.fund_b += omega_;
        }
        ++st.successes;
        if (!st.first_unbalance_step && st.unbalanced(omega_)) {
            st.first_unbalance_step = st.successes;
            st.first_unbalance_time = event.time;
            ++unbalanced_;
        }
    }
    ++successes_;
    outcome.success = true;
    return outcome;
}

SimResult run_simulation(const PaymentGraph& graph, std::span<const PaymentEvent> events, Satoshi omega,
                         std::uint64_t seed) {
    const RouteTable routes(graph);
    Simulator sim(graph, routes, omega);
    std::mt19937_64 rng(seed);
    double last_time = 0.0;
    for (const PaymentEvent& e : events) {
        if (e.time < last_time) throw ParameterError("payment events are not time-sorted");
        last_time = e.time;
        sim.route_payment(e, rng);
    }
    SimResult result;
    result.channels.assign(sim.states().begin(), sim.states().end());
    result.network_attempts = sim.attempts();
    result.network_successes = sim.successes();
    return result;
}

SingleChannelResult single_channel_experiment(double p, Satoshi capacity, Satoshi omega, std::uint64_t n_payments,
                                              std::uint64_t seed) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("direction probability must lie in (0, 1)");
    if (omega <= 0) throw ParameterError("payment size must be positive");
    Satoshi fund_a = capacity / 2;
    Satoshi fund_b = capacity - fund_a;
    if (fund_a < omega || fund_b < omega)
        throw DegenerateChannelError("channel capacity must cover one payment on each side");

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution forward(p);
    SingleChannelResult result;
    bool unbalanced = false;
    for (std::uint64_t i = 1; i <= n_payments; ++i) {
        Satoshi& sender = forward(rng) ? fund_a : fund_b;
        Satoshi& receiver = (&sender == &fund_a) ? fund_b : fund_a;
        const bool ok = sender >= omega;
        if (ok) {
            sender -= omega;
            receiver += omega;
        }
        if (unbalanced) {
            ++result.attempts_after;
            if (!ok) ++result.failures_after;
        } else if (fund_a < omega || fund_b < omega) {
            unbalanced = true;
            result.unbalance_step = i;
        }
    }
    if (!unbalanced) throw NoUnbalanceError("no unbalance observed within the payment budget");
    if (result.attempts_after == 0) throw NoUnbalanceError("no payments observed after the first unbalance");
    result.failure_rate = static_cast<double>(result.failures_after) / static_cast<double>(result.attempts_after);
    return result;
}

UnbalanceExperiment::UnbalanceExperiment(const PaymentGraph& graph, Satoshi omega)
    : graph_(&graph), omega_(omega), routes_(graph) {
    if (omega <= 0) throw ParameterError("payment size must be positive");
    const auto ebc = undirected_edge_betweenness(graph);
    ranking_.resize(graph.channel_count());
    std::iota(ranking_.begin(), ranking_.end(), ChannelId{0});
    std::stable_sort(ranking_.begin(), ranking_.end(), [&](ChannelId x, ChannelId y) { return ebc[x] > ebc[y]; });
}

namespace {

std::size_t fraction_count(double fraction, std::size_t total) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ParameterError("selection fraction must lie in [0, 1]");
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
}

}  // namespace

std::vector<ChannelId> UnbalanceExperiment::select(const ChannelSelection& selection, std::mt19937_64& rng) const {
    const std::size_t total = graph_->channel_count();
    if (const auto* random = std::get_if<RandomSelection>(&selection)) {
        std::vector<ChannelId> all(total);
        std::iota(all.begin(), all.end(), ChannelId{0});
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(fraction_count(random->fraction, total));
        return all;
    }
    if (const auto* top = std::get_if<TopBetweennessSelection>(&selection)) {
        const std::size_t k = fraction_count(top->fraction, total);
        return {ranking_.begin(), ranking_.begin() + static_cast<std::ptrdiff_t>(k)};
    }
    const auto& window = std::get<WindowSelection>(selection);
    if (window.start_rank + window.width > total) throw ParameterError("window exceeds the channel count");
    const auto first = ranking_.begin() + static_cast<std::ptrdiff_t>(window.start_rank);
    return {first, first + static_cast<std::ptrdiff_t>(window.width)};
}

double UnbalanceExperiment::run(const ChannelSelection& selection, std::uint64_t n_payments, std::uint64_t seed) const {
    const std::size_t n = graph_->node_count();
    if (n < 2) throw ParameterError("a network needs at least two nodes");

    std::mt19937_64 rng(seed);
    Simulator sim(*graph_, routes_, omega_);
    std::bernoulli_distribution side(0.5);
    for (ChannelId c : select(selection, rng)) sim.drain(c, side(rng));

    std::uniform_int_distribution<NodeId> pick_node(0, static_cast<NodeId>(n - 1));
    for (std::uint64_t i = 0; i < n_payments; ++i) {
        const NodeId s = pick_node(rng);
        NodeId t = pick_node(rng);
        while (t == s) t = pick_node(rng);
        sim.route_payment({static_cast<double>(i), s, t, omega_}, rng);
    }
    return sim.attempts() ? static_cast<double>(sim.successes()) / static_cast<double>(sim.attempts()) : 0.0;
}

double unbalance_experiment(const PaymentGraph& graph, const ChannelSelection& selection, std::uint64_t n_payments,
                            std::uint64_t seed, Satoshi omega) {
    return UnbalanceExperiment(graph, omega).run(selection, n_payments, seed);
}

void write_channel_results(std::ostream& out, const PaymentGraph& graph, const SimResult& result) {
    out << "channel_id,node_a,node_b,capacity_sat,fund_a_sat,fund_b_sat,first_unbalance_step_payments,"
           "first_unbalance_time_days,attempts,successes\n";
    for (ChannelId c = 0; c < result.channels.size(); ++c) {
        const ChannelState& st = result.channels[c];
        const Channel& ch = graph.channel(c);
        out << c << ',' << graph.label(ch.node_a) << ',' << graph.label(ch.node_b) << ',' << st.capacity << ','
            << st.fund_a << ',' << st.fund_b << ',';
        if (st.first_unbalance_step) out << *st.first_unbalance_step;
        out << ',';
        if (st.first_unbalance_time) out << csv::format_double(*st.first_unbalance_time);
        out << ',' << st.attempts << ',' << st.successes << '\n';
    }
}

void write_run_summary(std::ostream& out, const SimResult& result, Satoshi omega) {
    std::size_t unbalanced = 0;
    for (const auto& st : result.channels)
        if (st.first_unbalance_step) ++unbalanced;
    out << "channels,unbalanced_channels,network_attempts,network_successes,success_rate,payment_size_sat\n"
        << result.channels.size() << ',' << unbalanced << ',' << result.network_attempts << ','
        << result.network_successes << ',' << csv::format_double(result.success_rate()) << ',' << omega << '\n';
}

}  // namespace chanlife
