#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "chanlife/simulator.hpp"
#include "chanlife/traffic.hpp"
#include "oracles.hpp"

using namespace chanlife;

namespace {

constexpr Satoshi kOmega = 60'000;

PaymentEvent pay(NodeId s, NodeId t, double time = 0.0) { return {time, s, t, kOmega}; }

std::vector<std::pair<Satoshi, Satoshi>> balances(const Simulator& sim) {
    std::vector<std::pair<Satoshi, Satoshi>> out;
    for (const auto& st : sim.states()) out.emplace_back(st.fund_a, st.fund_b);
    return out;
}

PaymentGraph four_cycle(Satoshi fund) {
    PaymentGraph g(4);
    g.add_channel(0, 1, fund, fund);
    g.add_channel(1, 2, fund, fund);
    g.add_channel(2, 3, fund, fund);
    g.add_channel(3, 0, fund, fund);
    return g;
}

std::string channel_csv(const PaymentGraph& g, const SimResult& r) {
    std::ostringstream out;
    write_channel_results(out, g, r);
    write_run_summary(out, r, kOmega);
    return out.str();
}

}  // namespace

TEST_CASE("successful payment along a path shifts every hop toward the destination") {
    PaymentGraph g(3);
    g.add_channel(0, 1, 2 * kOmega, 2 * kOmega);
    g.add_channel(1, 2, 2 * kOmega, 2 * kOmega);
    const RouteTable routes(g);
    Simulator sim(g, routes, kOmega);
    std::mt19937_64 rng(1);

    const auto out = sim.route_payment(pay(0, 2), rng);
    CHECK(out.success);
    CHECK(out.reachable);
    REQUIRE(out.path.size() == 2);
    CHECK(sim.states()[0].fund_a == kOmega);
    CHECK(sim.states()[0].fund_b == 3 * kOmega);
    CHECK(sim.states()[1].fund_a == kOmega);
    CHECK(sim.states()[1].fund_b == 3 * kOmega);
    CHECK(sim.attempts() == 1);
    CHECK(sim.successes() == 1);
}

TEST_CASE("an underfunded hop fails the payment without touching any balance") {
    PaymentGraph g(3);
    g.add_channel(0, 1, 2 * kOmega, 2 * kOmega);
    g.add_channel(1, 2, kOmega - 1, 3 * kOmega);
    const RouteTable routes(g);
    Simulator sim(g, routes, kOmega);
    std::mt19937_64 rng(1);

    const auto before = balances(sim);
    const auto out = sim.route_payment(pay(0, 2), rng);
    CHECK_FALSE(out.success);
    CHECK(out.reachable);
    CHECK(balances(sim) == before);
    CHECK(sim.states()[0].attempts == 1);
    CHECK(sim.states()[0].successes == 0);
    CHECK(sim.successes() == 0);

    // the reverse direction is funded
    CHECK(sim.route_payment(pay(2, 0), rng).success);
}

TEST_CASE("unreachable destinations count as failed attempts") {
    PaymentGraph g(4);
    g.add_channel(0, 1, kOmega, kOmega);
    g.add_channel(2, 3, kOmega, kOmega);
    const RouteTable routes(g);
    Simulator sim(g, routes, kOmega);
    std::mt19937_64 rng(1);
    const auto out = sim.route_payment(pay(0, 3), rng);
    CHECK_FALSE(out.reachable);
    CHECK_FALSE(out.success);
    CHECK(sim.attempts() == 1);
    CHECK(routes.distance(0, 3) == -1);
    CHECK_THROWS_AS(sim.route_payment({0.0, 0, 1, kOmega + 1}, rng), ParameterError);
    CHECK_THROWS_AS(sim.route_payment(pay(0, 7), rng), ParameterError);
}

TEST_CASE("with two equal shortest paths and one exhausted, half the attempts succeed") {
    const auto g = four_cycle(3 * kOmega);
    const RouteTable routes(g);
    std::mt19937_64 rng(2026);
    const int trials = 20'000;
    int ok = 0;
    for (int i = 0; i < trials; ++i) {
        Simulator sim(g, routes, kOmega);
        sim.drain(0, false);  // node 0 can no longer pay node 1
        if (sim.route_payment(pay(0, 2), rng).success) ++ok;
    }
    const double rate = static_cast<double>(ok) / trials;
    CHECK(std::abs(rate - 0.5) < 4.0 * std::sqrt(0.25 / trials));
}

TEST_CASE("sampled shortest paths are uniform") {
    // 3x3 grid, corner to corner: six shortest paths
    PaymentGraph g(9);
    for (NodeId r = 0; r < 3; ++r) {
        for (NodeId c = 0; c < 3; ++c) {
            const NodeId v = 3 * r + c;
            if (c < 2) g.add_channel(v, v + 1, 1, 1);
            if (r < 2) g.add_channel(v, v + 3, 1, 1);
        }
    }
    const RouteTable routes(g);
    CHECK(routes.distance(0, 8) == 4);
    CHECK(routes.path_count(0, 8) == 6.0);

    const auto dist = oracle::floyd_warshall(g);
    CHECK(oracle::enumerate_shortest_paths(g, dist, 0, 8).total == 6);

    std::mt19937_64 rng(5);
    std::map<std::vector<EdgeId>, int> seen;
    std::vector<EdgeId> path;
    const int draws = 60'000;
    for (int i = 0; i < draws; ++i) {
        REQUIRE(routes.sample_path(0, 8, rng, path));
        REQUIRE(path.size() == 4);
        CHECK(g.edge(path.front()).from == 0);
        CHECK(g.edge(path.back()).to == 8);
        ++seen[path];
    }
    REQUIRE(seen.size() == 6);
    double chi2 = 0.0;
    for (const auto& [p, count] : seen) chi2 += std::pow(count - draws / 6.0, 2) / (draws / 6.0);
    CHECK(chi2 < 15.086);  // 5 dof, 1% level
}

TEST_CASE("a unit channel unbalances on its first payment") {
    PaymentGraph g(2);
    g.add_channel(0, 1, kOmega, kOmega);
    for (NodeId src : {0U, 1U}) {
        const std::vector<PaymentEvent> events{{0.75, src, 1 - src, kOmega}};
        const auto r = run_simulation(g, events, kOmega, 3);
        REQUIRE(r.channels[0].first_unbalance_step.has_value());
        CHECK(*r.channels[0].first_unbalance_step == 1);
        CHECK(*r.channels[0].first_unbalance_time == 0.75);
    }
}

TEST_CASE("empty stream leaves everything untouched") {
    const auto g = random_network(10, 0.5, 2);
    const auto r = run_simulation(g, {}, kOmega, 1);
    CHECK(r.network_attempts == 0);
    CHECK(r.success_rate() == 0.0);
    for (const auto& st : r.channels) {
        CHECK_FALSE(st.first_unbalance_step.has_value());
        CHECK(st.attempts == 0);
    }
}

TEST_CASE("channels that start below one payment are unbalanced at step 0") {
    PaymentGraph g(2);
    g.add_channel(0, 1, kOmega / 2, 4 * kOmega);
    const auto r = run_simulation(g, {}, kOmega, 1);
    CHECK(*r.channels[0].first_unbalance_step == 0);
    CHECK(*r.channels[0].first_unbalance_time == 0.0);
}

TEST_CASE("capacity is conserved and failures are side-effect-free") {
    const auto g = random_network(30, 0.15, 4, {3 * kOmega, 2 * kOmega});
    const auto rates = generate_mrates({30, 0.3, 4.0, 1.0, 8});
    const auto events = generate_payment_stream(rates, 10.0, kOmega, 6);
    REQUIRE(events.size() > 3000);
    const RouteTable routes(g);
    Simulator sim(g, routes, kOmega);
    std::mt19937_64 rng(10);
    std::size_t failures = 0;
    for (const auto& e : events) {
        const auto before = balances(sim);
        const auto out = sim.route_payment(e, rng);
        if (!out.success) {
            ++failures;
            CHECK(balances(sim) == before);
        }
        for (const auto& st : sim.states()) {
            CHECK(st.fund_a + st.fund_b == st.capacity);
            CHECK(st.fund_a >= 0);
            CHECK(st.fund_b >= 0);
            CHECK(st.fund_a <= st.capacity);
            if (st.first_unbalance_step) CHECK(*st.first_unbalance_step <= st.successes);
        }
    }
    CHECK(failures > 0);
    CHECK(sim.successes() + failures == sim.attempts());
}

TEST_CASE("run_simulation is deterministic") {
    const auto g = random_network(25, 0.2, 12);
    const auto rates = generate_mrates({25, 0.0, 1.0, 1.0, 3});
    const auto events = generate_payment_stream(rates, 30.0, kOmega, 4);
    const auto a = run_simulation(g, events, kOmega, 99);
    const auto b = run_simulation(g, events, kOmega, 99);
    CHECK(channel_csv(g, a) == channel_csv(g, b));
    CHECK(a.network_successes == b.network_successes);

    auto unsorted = events;
    std::swap(unsorted[0], unsorted[5]);
    CHECK_THROWS_AS(run_simulation(g, unsorted, kOmega, 1), ParameterError);
}

TEST_CASE("first unbalance is recorded once, at the first step below one payment") {
    PaymentGraph g(2);
    g.add_channel(0, 1, 2 * kOmega, 2 * kOmega);
    std::vector<PaymentEvent> events;
    // +1, +1 reaches the boundary on the second payment; later moves must not overwrite it
    for (NodeId s : {0U, 0U, 1U, 1U, 1U, 1U}) events.push_back({static_cast<double>(events.size()), s, 1 - s, kOmega});
    const auto r = run_simulation(g, events, kOmega, 1);
    CHECK(*r.channels[0].first_unbalance_step == 2);
    CHECK(*r.channels[0].first_unbalance_time == 1.0);
    CHECK(r.channels[0].successes == 6);
    CHECK(r.channels[0].fund_a == 4 * kOmega);
}

TEST_CASE("channel result table carries unit headers") {
    PaymentGraph g(2);
    g.add_channel(0, 1, kOmega, kOmega);
    const auto r = run_simulation(g, std::vector<PaymentEvent>{pay(0, 1, 0.5)}, kOmega, 1);
    const auto text = channel_csv(g, r);
    CHECK(text.find("first_unbalance_step_payments,first_unbalance_time_days") != std::string::npos);
    CHECK(text.find("0,0,1,120000,0,120000,1,0.5,1,1") != std::string::npos);
    CHECK(text.find("success_rate,payment_size_sat\n1,1,1,1,1,60000") != std::string::npos);
}

TEST_CASE("single channel: near-deterministic direction fails almost every later payment") {
    for (Satoshi cap : {2 * kOmega, 20 * kOmega}) {
        const auto r = single_channel_experiment(0.99, cap, kOmega, 5000, 7);
        CHECK(r.failure_rate == doctest::Approx(0.99).epsilon(0.02));
        CHECK(r.attempts_after + r.unbalance_step == 5000);
    }
}

TEST_CASE("single channel failure rate matches the stationary Markov chain") {
    CHECK(oracle::stationary_failure_rate(0.5, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    for (double p : {0.5, 0.6, 0.75, 0.9}) {
        for (int units : {2, 20, 40}) {
            const auto r = single_channel_experiment(p, units * kOmega, kOmega, 400'000, 13);
            INFO("p=" << p << " units=" << units);
            CHECK(std::abs(r.failure_rate - oracle::stationary_failure_rate(p, units)) < 0.01);
        }
    }
}

TEST_CASE("single channel experiment errors") {
    CHECK_THROWS_AS(single_channel_experiment(0.5, 2 * kOmega, kOmega, 0, 1), NoUnbalanceError);
    CHECK_THROWS_AS(single_channel_experiment(0.5, 40 * kOmega, kOmega, 3, 1), NoUnbalanceError);
    CHECK_THROWS_AS(single_channel_experiment(1.0, 2 * kOmega, kOmega, 10, 1), ParameterError);
    CHECK_THROWS_AS(single_channel_experiment(0.5, kOmega, kOmega, 10, 1), DegenerateChannelError);
}

TEST_CASE("selection strategies") {
    const auto g = preferential_attachment_network(60, 2, 3);
    const UnbalanceExperiment exp(g, kOmega);
    const auto ebc = undirected_edge_betweenness(g);
    const auto& rank = exp.centrality_ranking();
    REQUIRE(rank.size() == g.channel_count());
    for (std::size_t i = 1; i < rank.size(); ++i) CHECK(ebc[rank[i - 1]] >= ebc[rank[i]]);

    std::mt19937_64 rng(1);
    const auto top = exp.select(TopBetweennessSelection{0.15}, rng);
    CHECK(top.size() == static_cast<std::size_t>(std::llround(0.15 * g.channel_count())));
    CHECK(std::equal(top.begin(), top.end(), rank.begin()));
    const auto window = exp.select(WindowSelection{10, 5}, rng);
    CHECK(std::equal(window.begin(), window.end(), rank.begin() + 10));
    CHECK(exp.select(RandomSelection{0.0}, rng).empty());
    CHECK(exp.select(RandomSelection{1.0}, rng).size() == g.channel_count());
    CHECK_THROWS_AS(exp.select(RandomSelection{1.5}, rng), ParameterError);
    CHECK_THROWS_AS(exp.select(WindowSelection{rank.size() - 2, 5}, rng), ParameterError);
}

TEST_CASE("unbalance experiment degrades with the random unbalanced fraction") {
    const auto g = preferential_attachment_network(100, 2, 21);
    const UnbalanceExperiment exp(g, kOmega);
    CHECK(exp.run(RandomSelection{0.3}, 500, 4) == exp.run(RandomSelection{0.3}, 500, 4));
    CHECK(unbalance_experiment(g, RandomSelection{0.3}, 500, 4, kOmega) == exp.run(RandomSelection{0.3}, 500, 4));

    std::vector<double> means;
    for (double fraction : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) total += exp.run(RandomSelection{fraction}, 1000, seed);
        means.push_back(total / 20.0);
    }
    CHECK(means.front() > 0.9);
    for (std::size_t i = 1; i < means.size(); ++i) CHECK(means[i] <= means[i - 1]);
    CHECK(means.back() < means.front());
}
