#include "chanlife/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "chanlife/csv.hpp"
#include "chanlife/seed.hpp"
#include "chanlife/simulator.hpp"
#include "chanlife/traffic.hpp"
#include "parallel.hpp"

namespace chanlife {

std::vector<ChannelPrediction> predict_all_lifespans(const PaymentGraph& graph, const RatesMatrix& rates,
                                                     Satoshi omega) {
    if (omega <= 0) throw ParameterError("payment size must be positive");
    const auto lambda = edge_payment_rates(graph, rates);

    std::vector<ChannelPrediction> out;
    out.reserve(graph.channel_count());
    for (ChannelId c = 0; c < graph.channel_count(); ++c) {
        const Channel& ch = graph.channel(c);
        ChannelPrediction pred;
        pred.channel = c;
        pred.lambda_ab = lambda[PaymentGraph::forward_edge(c)];
        pred.lambda_ba = lambda[PaymentGraph::backward_edge(c)];
        pred.a = ch.fund_a / omega;
        pred.b = ch.fund_b / omega;
        if (pred.lambda_ab + pred.lambda_ba == 0.0) {
            pred.status = PredictionStatus::dead;
        } else {
            pred.p = direction_probability(pred.lambda_ab, pred.lambda_ba);
            if (pred.a == 0 || pred.b == 0) {
                pred.status = PredictionStatus::degenerate;
            } else if (*pred.p == 0.0 || *pred.p == 1.0) {
                // one-way flow: the walk marches straight to the far boundary
                pred.lifespan = LifespanEstimate{static_cast<double>(*pred.p == 1.0 ? pred.a : pred.b), {}};
                pred.lifespan->expected_days =
                    expected_lifetime(pred.lifespan->expected_payments, pred.lambda_ab, pred.lambda_ba);
            } else {
                WalkParams params{*pred.p, pred.a, pred.b, 0};
                pred.lifespan = estimate_lifespan(params, pred.lambda_ab, pred.lambda_ba);
            }
        }
        out.push_back(pred);
    }
    return out;
}

void EvaluationConfig::validate() const {
    if (nodes < 2) throw ParameterError("nodes must be at least 2");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw ParameterError("edge_prob must lie in [0, 1]");
    if (iterations < 1) throw ParameterError("iterations must be at least 1");
    if (omega <= 0) throw ParameterError("omega must be positive");
    if (channel_fund < 0) throw ParameterError("channel_fund must be non-negative");
    if (!(abnormality_percentile > 0.0 && abnormality_percentile <= 1.0))
        throw ParameterError("abnormality_percentile must lie in (0, 1]");
    if (!(min_unbalance_fraction >= 0.0 && min_unbalance_fraction <= 1.0))
        throw ParameterError("min_unbalance_fraction must lie in [0, 1]");
    if (!(horizon_factor > 0.0)) throw ParameterError("horizon_factor must be positive");
    MRatesConfig{nodes, sparse_coefficient, skew, base_rate, seed}.validate();
}

const char* to_string(Exclusion reason) {
    switch (reason) {
        case Exclusion::none: return "";
        case Exclusion::dead: return "dead";
        case Exclusion::degenerate: return "degenerate";
        case Exclusion::long_lifespan: return "long_lifespan";
        case Exclusion::rarely_unbalanced: return "rarely_unbalanced";
    }
    return "";
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw ParameterError("percentile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("percentile rank must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

// First-unbalance step of every channel in one simulated run; stops as soon
// as every tracked channel has unbalanced.
std::vector<std::optional<std::uint64_t>> simulate_iteration(const PaymentGraph& graph, const RouteTable& routes,
                                                             const RatesMatrix& rates, const std::vector<bool>& tracked,
                                                             const EvaluationConfig& config, double horizon,
                                                             std::uint64_t seed) {
    Simulator sim(graph, routes, config.omega);
    PaymentStream stream(rates, config.omega, derive_seed(seed, 0), horizon);
    std::mt19937_64 rng(derive_seed(seed, 1));

    std::size_t remaining = 0;
    for (ChannelId c = 0; c < graph.channel_count(); ++c)
        if (tracked[c] && !sim.states()[c].first_unbalance_step) ++remaining;

    while (remaining > 0) {
        const auto event = stream.next();
        if (!event) break;
        const std::size_t before = sim.unbalanced_count();
        const RouteOutcome outcome = sim.route_payment(*event, rng);
        if (sim.unbalanced_count() == before) continue;
        for (EdgeId e : outcome.path) {
            const ChannelId c = PaymentGraph::channel_of(e);
            const auto& st = sim.states()[c];
            if (tracked[c] && st.first_unbalance_step && *st.first_unbalance_step == st.successes) --remaining;
        }
    }

    std::vector<std::optional<std::uint64_t>> steps;
    steps.reserve(graph.channel_count());
    for (const auto& st : sim.states()) steps.push_back(st.first_unbalance_step);
    return steps;
}

}  // namespace

ErrorReport evaluate_network(const PaymentGraph& graph, const RatesMatrix& rates, const EvaluationConfig& config) {
    config.validate();
    const auto predictions = predict_all_lifespans(graph, rates, config.omega);

    ErrorReport report;
    report.config = config;
    report.channels.resize(graph.channel_count());

    std::vector<double> finite_days;
    for (const auto& pred : predictions)
        if (pred.lifespan) finite_days.push_back(*pred.lifespan->expected_days);
    report.percentile_threshold_days =
        finite_days.empty() ? 0.0 : percentile(finite_days, config.abnormality_percentile);

    std::vector<bool> tracked(graph.channel_count(), false);
    double longest = 0.0;
    for (const auto& pred : predictions) {
        ChannelError& err = report.channels[pred.channel];
        err.channel = pred.channel;
        err.p = pred.p;
        if (pred.status == PredictionStatus::dead) {
            err.exclusion = Exclusion::dead;
            continue;
        }
        if (pred.status == PredictionStatus::degenerate) {
            err.exclusion = Exclusion::degenerate;
            continue;
        }
        err.predicted_payments = pred.lifespan->expected_payments;
        err.predicted_days = pred.lifespan->expected_days;
        if (*err.predicted_days > report.percentile_threshold_days) {
            err.exclusion = Exclusion::long_lifespan;
            continue;
        }
        tracked[pred.channel] = true;
        longest = std::max(longest, *err.predicted_days);
    }
    report.horizon_days = config.horizon_factor * longest;

    if (longest > 0.0) {
        const RouteTable routes(graph);
        std::vector<std::vector<std::optional<std::uint64_t>>> runs(config.iterations);
        detail::parallel_for(config.iterations, [&](std::size_t i) {
            runs[i] = simulate_iteration(graph, routes, rates, tracked, config, report.horizon_days,
                                         derive_seed(config.seed, 1000 + i));
        });

        for (ChannelId c = 0; c < graph.channel_count(); ++c) {
            if (!tracked[c]) continue;
            ChannelError& err = report.channels[c];
            double sum = 0.0;
            for (const auto& run : runs) {
                if (!run[c]) continue;
                sum += static_cast<double>(*run[c]);
                ++err.unbalanced_iterations;
            }
            if (err.unbalanced_iterations) err.observed_mean = sum / static_cast<double>(err.unbalanced_iterations);
            const double fraction =
                static_cast<double>(err.unbalanced_iterations) / static_cast<double>(config.iterations);
            if (err.unbalanced_iterations == 0 || fraction < config.min_unbalance_fraction) {
                err.exclusion = Exclusion::rarely_unbalanced;
                continue;
            }
            err.relative_error = std::abs(*err.observed_mean - *err.predicted_payments) / *err.observed_mean;
        }
    }

    double total = 0.0;
    for (const auto& err : report.channels) {
        if (err.excluded()) {
            ++report.excluded_count;
        } else {
            ++report.included_count;
            total += *err.relative_error;
        }
    }
    report.mean_relative_error = report.included_count ? total / static_cast<double>(report.included_count)
                                                        : std::numeric_limits<double>::quiet_NaN();
    return report;
}

ErrorReport evaluate(const EvaluationConfig& config) {
    config.validate();
    const PaymentGraph graph = random_network(config.nodes, config.edge_prob, derive_seed(config.seed, 0),
                                              FundPolicy{config.channel_fund, config.channel_fund});
    const RatesMatrix rates = generate_mrates(
        {config.nodes, config.sparse_coefficient, config.skew, config.base_rate, derive_seed(config.seed, 1)});
    return evaluate_network(graph, rates, config);
}

std::vector<GridCell> evaluate_grid(const EvaluationPlan& plan) {
    if (plan.sparse_coefficients.empty() || plan.skews.empty()) throw ParameterError("empty SC or SK grid");
    std::vector<GridCell> cells;
    for (double sc : plan.sparse_coefficients) {
        for (double sk : plan.skews) {
            EvaluationConfig config = plan.base;
            config.sparse_coefficient = sc;
            config.skew = sk;
            cells.push_back({sc, sk, evaluate(config)});
        }
    }
    return cells;
}

namespace {

std::vector<double> parse_list(const std::string& text, const char* key, std::size_t line) {
    std::vector<double> values;
    for (const auto& field : csv::split(text)) values.push_back(csv::parse_double(field, key, line));
    return values;
}

std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += csv::format_double(values[i]);
    }
    return out;
}

}  // namespace

EvaluationPlan parse_evaluation_plan(std::istream& in) {
    struct Entry {
        std::string value;
        std::size_t line;
    };
    std::map<std::string, Entry> entries;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = csv::trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        std::string key = csv::trim(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (entries.contains(key)) throw ParseError("duplicate key '" + key + "'", line_no);
        entries[key] = {csv::trim(std::string_view(line).substr(eq + 1)), line_no};
    }

    static const std::set<std::string> required = {"nodes", "edge_prob", "sparse_coefficients", "skews",
                                                    "iterations", "omega", "seed"};
    static const std::set<std::string> optional = {"base_rate", "channel_fund", "abnormality_percentile",
                                                   "min_unbalance_fraction", "horizon_factor"};
    for (const auto& key : required)
        if (!entries.contains(key)) throw ParseError("missing required key '" + key + "'", 0);
    for (const auto& [key, entry] : entries)
        if (!required.contains(key) && !optional.contains(key))
            throw ParseError("unknown key '" + key + "'", entry.line);

    auto number = [&](const char* key) { return csv::parse_double(entries[key].value, key, entries[key].line); };
    auto integer = [&](const char* key) {
        return csv::parse_integer<std::int64_t>(entries[key].value, key, entries[key].line);
    };

    EvaluationPlan plan;
    EvaluationConfig& c = plan.base;
    c.nodes = static_cast<std::size_t>(integer("nodes"));
    c.edge_prob = number("edge_prob");
    c.iterations = static_cast<std::size_t>(integer("iterations"));
    c.omega = integer("omega");
    c.seed = csv::parse_integer<std::uint64_t>(entries["seed"].value, "seed", entries["seed"].line);
    plan.sparse_coefficients = parse_list(entries["sparse_coefficients"].value, "sparse_coefficients",
                                          entries["sparse_coefficients"].line);
    plan.skews = parse_list(entries["skews"].value, "skews", entries["skews"].line);
    if (entries.contains("base_rate")) c.base_rate = number("base_rate");
    if (entries.contains("channel_fund")) c.channel_fund = integer("channel_fund");
    if (entries.contains("abnormality_percentile")) c.abnormality_percentile = number("abnormality_percentile");
    if (entries.contains("min_unbalance_fraction")) c.min_unbalance_fraction = number("min_unbalance_fraction");
    if (entries.contains("horizon_factor")) c.horizon_factor = number("horizon_factor");

    if (plan.sparse_coefficients.empty() || plan.skews.empty()) throw ParseError("empty SC or SK list", 0);
    for (double sc : plan.sparse_coefficients) {
        EvaluationConfig probe = c;
        probe.sparse_coefficient = sc;
        for (double sk : plan.skews) {
            probe.skew = sk;
            try {
                probe.validate();
            } catch (const ParameterError& e) {
                throw ParseError(e.what(), 0);
            }
        }
    }
    return plan;
}

void write_evaluation_plan(std::ostream& out, const EvaluationPlan& plan) {
    const EvaluationConfig& c = plan.base;
    out << "nodes = " << c.nodes << '\n'
        << "edge_prob = " << csv::format_double(c.edge_prob) << '\n'
        << "sparse_coefficients = " << join(plan.sparse_coefficients) << '\n'
        << "skews = " << join(plan.skews) << '\n'
        << "iterations = " << c.iterations << '\n'
        << "omega = " << c.omega << '\n'
        << "seed = " << c.seed << '\n'
        << "base_rate = " << csv::format_double(c.base_rate) << '\n'
        << "channel_fund = " << c.channel_fund << '\n'
        << "abnormality_percentile = " << csv::format_double(c.abnormality_percentile) << '\n'
        << "min_unbalance_fraction = " << csv::format_double(c.min_unbalance_fraction) << '\n'
        << "horizon_factor = " << csv::format_double(c.horizon_factor) << '\n';
}

void write_error_table(std::ostream& out, const EvaluationPlan& plan, const std::vector<GridCell>& cells) {
    out << "sparse_coefficient";
    for (double sk : plan.skews) out << ",mean_relative_error_sk_" << csv::format_double(sk);
    out << '\n';
    for (double sc : plan.sparse_coefficients) {
        out << csv::format_double(sc);
        for (double sk : plan.skews) {
            const auto it = std::find_if(cells.begin(), cells.end(), [&](const GridCell& cell) {
                return cell.sparse_coefficient == sc && cell.skew == sk;
            });
            out << ',';
            if (it != cells.end()) out << csv::format_double(it->report.mean_relative_error);
        }
        out << '\n';
    }
}

void write_channel_errors(std::ostream& out, const ErrorReport& report) {
    auto opt = [&](const std::optional<double>& v) {
        if (v) out << csv::format_double(*v);
    };
    out << "channel_id,p,predicted_payments,predicted_days,observed_mean_payments,unbalanced_iterations,"
           "relative_error,excluded,exclusion_reason\n";
    for (const auto& err : report.channels) {
        out << err.channel << ',';
        opt(err.p);
        out << ',';
        opt(err.predicted_payments);
        out << ',';
        opt(err.predicted_days);
        out << ',';
        opt(err.observed_mean);
        out << ',' << err.unbalanced_iterations << ',';
        opt(err.relative_error);
        out << ',' << (err.excluded() ? 1 : 0) << ',' << to_string(err.exclusion) << '\n';
    }
}

}  // namespace chanlife
