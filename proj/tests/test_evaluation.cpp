#include <doctest.h>

#include <cmath>
#include <sstream>

#include "chanlife/evaluation.hpp"
#include "chanlife/simulator.hpp"
#include "chanlife/traffic.hpp"

using namespace chanlife;

namespace {

constexpr Satoshi kOmega = 60'000;

PaymentGraph two_node(std::int64_t units) {
    PaymentGraph g(2);
    g.add_channel(0, 1, units * kOmega, units * kOmega);
    return g;
}

RatesMatrix two_rates(double forward, double backward) {
    RatesMatrix m(2);
    m.set(0, 1, forward);
    m.set(1, 0, backward);
    return m;
}

std::string plan_text(const std::string& drop = {}, const std::string& extra = {}) {
    const std::vector<std::pair<std::string, std::string>> keys = {
        {"nodes", "30"},    {"edge_prob", "0.25"}, {"sparse_coefficients", "0, 0.3"}, {"skews", "1,6"},
        {"iterations", "8"}, {"omega", "60000"},   {"seed", "5"}};
    std::string out = "# evaluation grid\n";
    for (const auto& [k, v] : keys)
        if (k != drop) out += k + " = " + v + "   # comment\n";
    return out + extra;
}

}  // namespace

TEST_CASE("predict_all_lifespans on a balanced path with symmetric rates") {
    const double r = 0.5;
    const std::int64_t k = 3;
    PaymentGraph g(3);
    g.add_channel(0, 1, k * kOmega, k * kOmega);
    g.add_channel(1, 2, k * kOmega, k * kOmega);
    const auto preds = predict_all_lifespans(g, RatesMatrix::uniform(3, r), kOmega);
    REQUIRE(preds.size() == 2);
    for (const auto& pred : preds) {
        CHECK(pred.status == PredictionStatus::ok);
        CHECK(*pred.p == 0.5);
        CHECK(pred.a == k);
        CHECK(pred.b == k);
        CHECK(pred.lambda_ab == 2 * r);
        CHECK(pred.lifespan->expected_payments == static_cast<double>(k * k));
        CHECK(*pred.lifespan->expected_days == doctest::Approx(k * k / (4 * r)));
    }
}

TEST_CASE("dead, degenerate and one-way channels are flagged or handled") {
    PaymentGraph g(4);
    g.add_channel(0, 1, 4 * kOmega, 4 * kOmega);
    g.add_channel(1, 2, 4 * kOmega, kOmega / 2);
    g.add_channel(2, 3, 4 * kOmega, 4 * kOmega);
    RatesMatrix rates(4);
    rates.set(0, 1, 1.0);
    rates.set(1, 2, 1.0);
    rates.set(2, 1, 1.0);
    const auto preds = predict_all_lifespans(g, rates, kOmega);
    REQUIRE(preds.size() == 3);
    CHECK(preds[0].status == PredictionStatus::ok);
    CHECK(*preds[0].p == 1.0);
    CHECK(preds[0].lifespan->expected_payments == 4.0);
    CHECK(preds[1].status == PredictionStatus::degenerate);
    CHECK_FALSE(preds[1].lifespan.has_value());
    CHECK(preds[2].status == PredictionStatus::dead);
    CHECK_FALSE(preds[2].p.has_value());
}

TEST_CASE("symmetric rates on G(50, 0.2) give p = 1/2 everywhere") {
    const auto g = random_network(50, 0.2, 3);
    const auto preds = predict_all_lifespans(g, generate_mrates({50, 0.0, 1.0, 1.0, 4}), kOmega);
    for (const auto& pred : preds) {
        REQUIRE(pred.p.has_value());
        CHECK(std::abs(*pred.p - 0.5) < 1e-12);
        CHECK(pred.lifespan->expected_payments == doctest::Approx(400.0).epsilon(1e-9));
    }
}

TEST_CASE("percentile uses linear interpolation") {
    CHECK(percentile({5, 1, 3, 2, 4}, 0.5) == 3.0);
    CHECK(percentile({1, 2, 3, 4, 5}, 0.95) == doctest::Approx(4.8));
    CHECK(percentile({7}, 0.95) == 7.0);
    CHECK(percentile({1, 2}, 1.0) == 2.0);
    CHECK(percentile({1, 2}, 0.0) == 1.0);
    CHECK_THROWS_AS(percentile({}, 0.5), ParameterError);
    CHECK_THROWS_AS(percentile({1.0}, 1.5), ParameterError);
}

TEST_CASE("config validation") {
    EvaluationConfig c;
    CHECK_NOTHROW(c.validate());
    c.iterations = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.abnormality_percentile = 0.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.skew = 0.5;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.sparse_coefficient = -0.1;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("exclusions are accounted for and the error metric divides by the observation") {
    EvaluationConfig c;
    c.nodes = 25;
    c.edge_prob = 0.25;
    c.sparse_coefficient = 0.3;
    c.skew = 4.0;
    c.iterations = 12;
    c.seed = 3;
    const auto report = evaluate(c);
    CHECK(report.included_count + report.excluded_count == report.channels.size());
    REQUIRE(report.included_count > 0);
    double total = 0.0;
    std::size_t included = 0;
    for (const auto& err : report.channels) {
        if (err.excluded()) {
            CHECK_FALSE(err.relative_error.has_value());
            if (err.exclusion == Exclusion::long_lifespan) CHECK(*err.predicted_days > report.percentile_threshold_days);
            if (err.exclusion == Exclusion::rarely_unbalanced)
                CHECK(static_cast<double>(err.unbalanced_iterations) < c.min_unbalance_fraction * c.iterations);
            continue;
        }
        ++included;
        REQUIRE(err.relative_error.has_value());
        CHECK(*err.relative_error ==
              doctest::Approx(std::abs(*err.observed_mean - *err.predicted_payments) / *err.observed_mean));
        CHECK(*err.predicted_days <= report.percentile_threshold_days);
        total += *err.relative_error;
    }
    CHECK(included == report.included_count);
    CHECK(report.mean_relative_error == doctest::Approx(total / included));
    CHECK(report.horizon_days > 0.0);
}

TEST_CASE("evaluation is deterministic per seed") {
    EvaluationConfig c;
    c.nodes = 20;
    c.edge_prob = 0.3;
    c.iterations = 6;
    c.seed = 11;
    std::ostringstream a, b;
    write_channel_errors(a, evaluate(c));
    write_channel_errors(b, evaluate(c));
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("channel_id,p,predicted_payments,predicted_days,observed_mean_payments", 0) == 0);
}

TEST_CASE("single-channel error shrinks as iterations grow") {
    const auto g = two_node(5);
    const auto rates = two_rates(1.0, 1.0);
    auto mean_error = [&](std::size_t iterations) {
        double total = 0.0;
        for (std::uint64_t repeat = 0; repeat < 5; ++repeat) {
            EvaluationConfig c;
            c.nodes = 2;
            c.iterations = iterations;
            c.seed = 100 + repeat;
            const auto report = evaluate_network(g, rates, c);
            REQUIRE(report.included_count == 1);
            total += report.mean_relative_error;
        }
        return total / 5.0;
    };
    const double e10 = mean_error(10);
    const double e100 = mean_error(100);
    const double e1000 = mean_error(1000);
    CHECK(e100 < e10);
    CHECK(e1000 < e100);
    CHECK(e1000 < 0.05);
}

TEST_CASE("a network with no traffic excludes every channel") {
    EvaluationConfig c;
    c.nodes = 2;
    const auto report = evaluate_network(two_node(3), RatesMatrix(2), c);
    CHECK(report.excluded_count == 1);
    CHECK(report.channels[0].exclusion == Exclusion::dead);
    CHECK(std::isnan(report.mean_relative_error));
}

TEST_CASE("evaluation plan parsing") {
    std::istringstream in(plan_text({}, "horizon_factor = 3\n"));
    const auto plan = parse_evaluation_plan(in);
    CHECK(plan.base.nodes == 30);
    CHECK(plan.base.edge_prob == 0.25);
    CHECK(plan.sparse_coefficients == std::vector<double>{0.0, 0.3});
    CHECK(plan.skews == std::vector<double>{1.0, 6.0});
    CHECK(plan.base.iterations == 8);
    CHECK(plan.base.omega == 60'000);
    CHECK(plan.base.seed == 5);
    CHECK(plan.base.horizon_factor == 3.0);
    CHECK(plan.base.abnormality_percentile == 0.95);

    std::stringstream round;
    write_evaluation_plan(round, plan);
    const auto again = parse_evaluation_plan(round);
    CHECK(again.skews == plan.skews);
    CHECK(again.base.horizon_factor == plan.base.horizon_factor);
}

TEST_CASE("evaluation plan errors name the offending key") {
    auto message = [](const std::string& text) -> std::string {
        std::istringstream in(text);
        try {
            parse_evaluation_plan(in);
        } catch (const ParseError& e) {
            return e.what();
        }
        return {};
    };
    CHECK(message(plan_text("omega")).find("omega") != std::string::npos);
    CHECK(message(plan_text("skews")).find("skews") != std::string::npos);
    CHECK(message(plan_text({}, "colour = blue\n")).find("colour") != std::string::npos);
    CHECK(message(plan_text({}, "iterations = 3\n")).find("iterations") != std::string::npos);
    CHECK(message(plan_text({}, "base_rate = fast\n")).find("base_rate") != std::string::npos);
    CHECK_FALSE(message(plan_text({}, "just words\n")).empty());
    CHECK_FALSE(message("nodes = 30\nedge_prob = 0.2\nsparse_coefficients = 1.5\nskews = 1\niterations = 1\n"
                        "omega = 1\nseed = 1\n")
                    .empty());
}

TEST_CASE("grid evaluation writes one row per SC and one column per SK") {
    EvaluationPlan plan;
    plan.base.nodes = 12;
    plan.base.edge_prob = 0.4;
    plan.base.iterations = 3;
    plan.sparse_coefficients = {0.0, 0.5};
    plan.skews = {1.0, 4.0, 10.0};
    const auto cells = evaluate_grid(plan);
    CHECK(cells.size() == 6);
    std::ostringstream out;
    write_error_table(out, plan, cells);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "sparse_coefficient,mean_relative_error_sk_1,mean_relative_error_sk_4,mean_relative_error_sk_10");
    std::getline(lines, line);
    CHECK(line.rfind("0,", 0) == 0);
    std::getline(lines, line);
    CHECK(line.rfind("0.5,", 0) == 0);
}

TEST_CASE("under skewed traffic the walk prediction holds for a channel whose neighbours never unbalance") {
    const auto shape = random_network(30, 0.25, 41);
    const auto rates = generate_mrates({30, 0.3, 6.0, 1.0, 42});
    const auto preds = predict_all_lifespans(shape, rates, kOmega);
    int checked = 0;
    for (const auto& pred : preds) {
        if (!pred.lifespan || std::abs(*pred.p - 0.5) > 0.15 || checked == 3) continue;
        PaymentGraph g(shape.node_count());
        for (ChannelId c = 0; c < shape.channel_count(); ++c) {
            const Satoshi fund = c == pred.channel ? 10 * kOmega : Satoshi{1} << 50;
            g.add_channel(shape.channel(c).node_a, shape.channel(c).node_b, fund, fund);
        }
        const RouteTable routes(g);
        const int runs = 400;
        double sum = 0.0, sum_sq = 0.0;
        for (int run = 0; run < runs; ++run) {
            Simulator sim(g, routes, kOmega);
            PaymentStream stream(rates, kOmega, 1000 + run);
            std::mt19937_64 rng(run);
            while (!sim.states()[pred.channel].first_unbalance_step) sim.route_payment(*stream.next(), rng);
            const auto step = static_cast<double>(*sim.states()[pred.channel].first_unbalance_step);
            sum += step;
            sum_sq += step * step;
        }
        const double mean = sum / runs;
        const double se = std::sqrt((sum_sq / runs - mean * mean) / (runs - 1));
        const double predicted = predict_all_lifespans(g, rates, kOmega)[pred.channel].lifespan->expected_payments;
        INFO("p=" << *pred.p << " predicted=" << predicted << " observed=" << mean);
        CHECK(std::abs(mean - predicted) <= 4.0 * se);
        ++checked;
    }
    CHECK(checked == 3);
}
