#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chanlife/csv.hpp"
#include "chanlife/evaluation.hpp"
#include "chanlife/seed.hpp"
#include "chanlife/simulator.hpp"
#include "chanlife/snapshot.hpp"
#include "chanlife/traffic.hpp"
#include "chanlife/walk.hpp"

#ifndef CHANLIFE_VERSION
#define CHANLIFE_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace chanlife;

namespace {

struct Run {
    std::vector<std::string> args;  // without program name
    fs::path out = "chanlife-out";
    std::optional<std::uint64_t> seed;
    bool seed_generated = false;
    std::vector<std::string> outputs;

    fs::path file(const std::string& name) {
        fs::create_directories(out);
        outputs.push_back(name);
        return out / name;
    }
};

std::string fmt(double v) { return csv::format_double(v); }

std::uint64_t resolve_seed(Run& run) {
    if (!run.seed) {
        std::random_device rd;
        run.seed = (std::uint64_t{rd()} << 32) | rd();
        run.seed_generated = true;
    }
    return *run.seed;
}

void write_manifest(const Run& run, const CLI::App& sub) {
    json options = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string name = opt->get_lnames().front();
        if (name == "help") continue;
        if (opt->count() > 0) {
            const auto& values = opt->results();
            if (opt->get_expected_max() == 0) options[name] = true;
            else if (values.size() == 1) options[name] = values.front();
            else options[name] = values;
        } else if (!opt->get_default_str().empty()) {
            options[name] = opt->get_default_str();
        }
    }
    std::vector<std::string> replay_args;
    for (std::size_t i = 0; i < run.args.size(); ++i) {
        const std::string& a = run.args[i];
        if (a == "--out") {
            ++i;
            continue;
        }
        if (a.rfind("--out=", 0) == 0) continue;
        replay_args.push_back(a);
    }
    if (run.seed_generated) {
        replay_args.push_back("--seed");
        replay_args.push_back(std::to_string(*run.seed));
    }
    if (run.seed) options["seed"] = std::to_string(*run.seed);

    json manifest = {
        {"program", "chanlife"},
        {"version", CHANLIFE_VERSION},
        {"subcommand", sub.get_name()},
        {"argv", replay_args},
        {"options", options},
        {"seed", run.seed ? json(*run.seed) : json(nullptr)},
        {"seed_generated", run.seed_generated},
        {"outputs", run.outputs},
    };
    fs::create_directories(run.out);
    std::ofstream(run.out / "manifest.json") << manifest.dump(2) << '\n';
}

void check_open_unit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw CLI::ValidationError("--p", "must lie strictly between 0 and 1");
}

// ---------------------------------------------------------------- predict

struct PredictOpts {
    std::optional<double> p;
    std::optional<std::int64_t> a, b, x;
    std::optional<Satoshi> fund_a, fund_b, omega;
    std::optional<double> lambda_ab, lambda_ba;
};

void cmd_predict(const PredictOpts& o, Run& run) {
    if (!o.p) throw CLI::RequiredError("--p");
    check_open_unit(*o.p);
    WalkParams w;
    if (o.a && o.b) {
        w = {*o.p, *o.a, *o.b, o.x.value_or(0)};
    } else if (o.fund_a && o.fund_b && o.omega) {
        w = discretize_funds({*o.fund_a, *o.fund_b, *o.omega});
        w.p = *o.p;
        w.x = o.x.value_or(0);
    } else {
        throw CLI::ValidationError("predict", "give --a and --b, or --fund-a, --fund-b and --omega");
    }
    if (o.lambda_ab.has_value() != o.lambda_ba.has_value())
        throw CLI::ValidationError("predict", "--lambda-ab and --lambda-ba go together");

    const double steps = expected_steps_from(w);
    std::optional<double> days;
    if (o.lambda_ab) days = expected_lifetime(steps, *o.lambda_ab, *o.lambda_ba);

    std::ostringstream csv_out;
    csv_out << "p,a_payments,b_payments,x_payments,expected_payments,expected_days\n"
            << fmt(w.p) << ',' << w.a << ',' << w.b << ',' << w.x << ',' << fmt(steps) << ','
            << (days ? fmt(*days) : "") << '\n';
    std::ofstream(run.file("predict.csv")) << csv_out.str();
    std::cout << csv_out.str();
}

// --------------------------------------------------------------- simulate

struct NetworkOpts {
    std::string graph_file;
    std::string generator = "gnp";
    std::size_t nodes = 50;
    double edge_prob = 0.2;
    std::size_t attach = 2;
    Satoshi fund = 1'200'000;
};

PaymentGraph build_network(const NetworkOpts& o, std::uint64_t seed) {
    if (!o.graph_file.empty()) {
        auto snap = load_snapshot(o.graph_file);
        for (const auto& w : snap.warnings) std::cerr << "warning: " << w << '\n';
        return std::move(snap.graph);
    }
    if (o.generator == "pa") return preferential_attachment_network(o.nodes, o.attach, seed, {o.fund, o.fund});
    return random_network(o.nodes, o.edge_prob, seed, {o.fund, o.fund});
}

void add_network_options(CLI::App* sub, NetworkOpts& o) {
    sub->add_option("--graph", o.graph_file, "Channel snapshot CSV (channel_id,node_a,node_b,capacity_sat)")
        ->check(CLI::ExistingFile);
    sub->add_option("--generator", o.generator, "Generated topology when no --graph: gnp or pa")
        ->check(CLI::IsMember({"gnp", "pa"}))
        ->capture_default_str();
    sub->add_option("--nodes", o.nodes, "Generated node count")->capture_default_str();
    sub->add_option("--edge-prob", o.edge_prob, "G(n,p) edge probability")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--attach", o.attach, "Preferential-attachment links per new node")->capture_default_str();
    sub->add_option("--fund", o.fund, "Funds per channel side for generated networks (sat)")->capture_default_str();
}

// Event logs name nodes by label; generated networks label node i as "i".
std::optional<std::vector<PaymentEvent>> events_by_label(const PaymentGraph& graph, std::vector<PaymentEvent> events) {
    std::vector<std::optional<NodeId>> as_int(graph.node_count());
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        const std::string& label = graph.label(v);
        NodeId parsed = 0;
        const auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), parsed);
        if (ec != std::errc{} || ptr != label.data() + label.size()) return std::nullopt;
        as_int[v] = parsed;
    }
    for (auto& e : events) {
        e.source = *as_int[e.source];
        e.destination = *as_int[e.destination];
    }
    return events;
}

struct SimulateOpts {
    NetworkOpts net;
    std::string events_file;
    double sc = 0.0, sk = 1.0, base_rate = 1.0, horizon = 100.0;
    Satoshi omega = 60'000;
};

void cmd_simulate(const SimulateOpts& o, Run& run) {
    const std::uint64_t seed = resolve_seed(run);
    const PaymentGraph graph = build_network(o.net, derive_seed(seed, 0));
    std::vector<PaymentEvent> events;
    if (!o.events_file.empty()) {
        std::ifstream in(o.events_file);
        if (!in) throw Error("cannot open event log " + o.events_file);
        events = read_event_log(in);
        for (auto& e : events) {
            for (NodeId* v : {&e.source, &e.destination}) {
                const auto node = graph.find_node(std::to_string(*v));
                if (!node) throw Error("event log names node " + std::to_string(*v) + ", which is not in the network");
                *v = *node;
            }
        }
    } else {
        const auto rates = generate_mrates({graph.node_count(), o.sc, o.sk, o.base_rate, derive_seed(seed, 1)});
        events = generate_payment_stream(rates, o.horizon, o.omega, derive_seed(seed, 2));
    }
    const auto result = run_simulation(graph, events, o.omega, derive_seed(seed, 3));

    std::ofstream net(run.file("network.csv"));
    write_snapshot(net, graph);
    if (auto labelled = events_by_label(graph, events)) {
        std::ofstream ev(run.file("events.csv"));
        write_event_log(ev, *labelled);
    } else {
        std::cerr << "warning: node labels are not integers; events.csv not written\n";
    }
    std::ofstream ch(run.file("channels.csv"));
    write_channel_results(ch, graph, result);
    std::ostringstream summary;
    write_run_summary(summary, result, o.omega);
    std::ofstream(run.file("summary.csv")) << summary.str();
    std::cout << summary.str();
}

// --------------------------------------------------------- single-channel

struct SingleOpts {
    double p = 0.5;
    Satoshi capacity = 2'400'000;
    Satoshi omega = 60'000;
    std::uint64_t payments = 5000;
    std::size_t repeats = 1;
};

void cmd_single_channel(const SingleOpts& o, Run& run) {
    check_open_unit(o.p);
    const std::uint64_t seed = resolve_seed(run);
    std::ostringstream out;
    out << "repeat,p,capacity_sat,payment_size_sat,payments,unbalance_step_payments,attempts_after_payments,"
           "failures_after_payments,failure_rate\n";
    for (std::size_t r = 0; r < o.repeats; ++r) {
        const auto res = single_channel_experiment(o.p, o.capacity, o.omega, o.payments, derive_seed(seed, r));
        out << r << ',' << fmt(o.p) << ',' << o.capacity << ',' << o.omega << ',' << o.payments << ','
            << res.unbalance_step << ',' << res.attempts_after << ',' << res.failures_after << ','
            << fmt(res.failure_rate) << '\n';
    }
    std::ofstream(run.file("single_channel.csv")) << out.str();
    std::cout << out.str();
}

// -------------------------------------------------------------- unbalance

struct UnbalanceOpts {
    NetworkOpts net;
    std::string strategy = "random";
    double fraction = 0.15;
    std::size_t window_start = 0;
    std::size_t window_width = 0;
    bool all_windows = false;
    std::uint64_t payments = 2000;
    std::size_t seeds = 1;
    Satoshi omega = 60'000;
};

void cmd_unbalance(const UnbalanceOpts& o, Run& run) {
    const std::uint64_t seed = resolve_seed(run);
    const PaymentGraph graph = build_network(o.net, derive_seed(seed, 0));
    const UnbalanceExperiment exp(graph, o.omega);

    std::vector<std::pair<std::string, ChannelSelection>> selections;
    if (o.strategy == "random") {
        selections.emplace_back("random", RandomSelection{o.fraction});
    } else if (o.strategy == "top") {
        selections.emplace_back("top", TopBetweennessSelection{o.fraction});
    } else {
        const std::size_t width = o.window_width ? o.window_width
                                                 : static_cast<std::size_t>(std::llround(
                                                       o.fraction * static_cast<double>(graph.channel_count())));
        if (width == 0) throw CLI::ValidationError("--window-width", "window is empty");
        if (o.all_windows) {
            for (std::size_t start = 0; start + width <= graph.channel_count(); start += width)
                selections.emplace_back("window", WindowSelection{start, width});
        } else {
            selections.emplace_back("window", WindowSelection{o.window_start, width});
        }
    }

    std::ostringstream out;
    out << "strategy,fraction,window_start_rank,window_width_channels,seeds,payments,mean_success_rate\n";
    for (const auto& [name, sel] : selections) {
        double total = 0.0;
        for (std::size_t s = 0; s < o.seeds; ++s) total += exp.run(sel, o.payments, derive_seed(seed, 100 + s));
        out << name << ',';
        if (const auto* w = std::get_if<WindowSelection>(&sel)) {
            out << fmt(static_cast<double>(w->width) / static_cast<double>(graph.channel_count())) << ','
                << w->start_rank << ',' << w->width;
        } else {
            out << fmt(o.fraction) << ",,";
        }
        out << ',' << o.seeds << ',' << o.payments << ',' << fmt(total / static_cast<double>(o.seeds)) << '\n';
    }
    std::ofstream(run.file("unbalance.csv")) << out.str();
    std::cout << out.str();
}

// --------------------------------------------------------------- evaluate

struct EvaluateOpts {
    std::string config_file;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> nodes;
};

void cmd_evaluate(const EvaluateOpts& o, Run& run) {
    std::ifstream in(o.config_file);
    if (!in) throw Error("cannot open config " + o.config_file);
    EvaluationPlan plan = parse_evaluation_plan(in);
    if (o.iterations) plan.base.iterations = *o.iterations;
    if (o.nodes) plan.base.nodes = *o.nodes;
    if (run.seed) plan.base.seed = *run.seed;
    run.seed = plan.base.seed;

    const auto cells = evaluate_grid(plan);
    std::ostringstream table;
    write_error_table(table, plan, cells);
    std::ofstream(run.file("table.csv")) << table.str();
    std::ofstream(run.file("plan.conf")) << [&] {
        std::ostringstream s;
        write_evaluation_plan(s, plan);
        return s.str();
    }();
    for (const auto& cell : cells) {
        std::ofstream detail(run.file("channels_sc" + fmt(cell.sparse_coefficient) + "_sk" + fmt(cell.skew) + ".csv"));
        write_channel_errors(detail, cell.report);
    }
    std::cout << table.str();
}

// --------------------------------------------------------------- snapshot

struct SnapshotOpts {
    std::string file;
    double rate = 0.0022;
    Satoshi omega = 60'000;
    double central_fraction = 0.14;
    std::size_t bins = 40;
    bool linear_bins = false;
    std::size_t batch_size = 100;
};

void cmd_snapshot(const SnapshotOpts& o, Run& run) {
    const auto snap = load_snapshot(o.file);
    for (const auto& w : snap.warnings) std::cerr << "warning: " << w << '\n';
    const auto analysis = analyze_snapshot(snap.graph, o.rate, o.omega, o.central_fraction);

    std::ofstream per_channel(run.file("channels.csv"));
    write_channel_lifespans(per_channel, snap.graph, analysis, snap.channel_ids);
    std::ostringstream summary;
    write_lifespan_summary(summary, analysis);
    std::ofstream(run.file("summary.csv")) << summary.str();
    std::ofstream hist(run.file("histogram.csv"));
    write_histogram(hist, lifespan_histogram(analysis, o.bins, !o.linear_bins));
    std::ofstream batches(run.file("batches.csv"));
    write_batches(batches, betweenness_lifespan_batches(analysis, o.batch_size));

    std::vector<double> ebc, days;
    for (const auto& ch : analysis.channels) {
        if (ch.infinite()) continue;
        ebc.push_back(ch.ebc);
        days.push_back(ch.expected_days);
    }
    std::cout << summary.str();
    if (ebc.size() >= 2) std::cout << "spearman_ebc_vs_lifespan," << fmt(spearman_correlation(ebc, days)) << '\n';
}

// ------------------------------------------------------------------ sweep

struct SweepOpts {
    std::string kind;
    double p = 0.5;
    std::int64_t a = 20, b = 20;
    Satoshi omega = 60'000;
    Satoshi fund_a = 1'200'000, fund_b = 1'200'000;
    double from = 0.0, to = 0.0, step = 0.0;
};

void cmd_sweep(const SweepOpts& o, Run& run) {
    if (!(o.step > 0.0)) throw CLI::ValidationError("--step", "must be positive");
    if (o.to < o.from) throw CLI::ValidationError("--to", "must not be below --from");
    std::ostringstream out;
    const auto count = static_cast<std::size_t>(std::floor((o.to - o.from) / o.step + 1e-9)) + 1;
    auto value_at = [&](std::size_t i) { return std::round((o.from + o.step * static_cast<double>(i)) * 1e12) / 1e12; };

    if (o.kind == "p") {
        out << "p,a_payments,b_payments,expected_payments\n";
        for (std::size_t i = 0; i < count; ++i) {
            const double p = value_at(i);
            check_open_unit(p);
            out << fmt(p) << ',' << o.a << ',' << o.b << ',' << fmt(expected_steps({p, o.a, o.b, 0})) << '\n';
        }
    } else {
        check_open_unit(o.p);
        out << (o.kind == "capacity" ? "capacity_sat" : o.kind == "peer-fund" ? "fund_b_sat" : "fund_a_sat")
            << ",p,a_payments,b_payments,expected_payments\n";
        for (std::size_t i = 0; i < count; ++i) {
            const auto v = static_cast<Satoshi>(std::llround(value_at(i)));
            ChannelSpec spec{o.fund_a, o.fund_b, o.omega};
            if (o.kind == "capacity") spec = {v / 2, v - v / 2, o.omega};
            else if (o.kind == "peer-fund") spec.fund_b = v;
            else spec.fund_a = v;
            WalkParams w;
            try {
                w = discretize_funds(spec);
            } catch (const DegenerateChannelError&) {
                continue;
            }
            w.p = o.p;
            out << v << ',' << fmt(o.p) << ',' << w.a << ',' << w.b << ',' << fmt(expected_steps(w)) << '\n';
        }
    }
    std::ofstream(run.file("sweep_" + o.kind + ".csv")) << out.str();
    std::cout << out.str();
}

int run_cli(std::vector<std::string> args) {
    CLI::App app{"Payment channel lifespan prediction and simulation", "chanlife"};
    app.set_version_flag("--version", CHANLIFE_VERSION);
    app.require_subcommand(1);

    Run run;
    run.args = args;
    std::optional<std::uint64_t> seed;
    auto common = [&](CLI::App* sub, bool with_seed) {
        sub->add_option("--out", run.out, "Output directory for CSV files and manifest.json")->capture_default_str();
        if (with_seed) sub->add_option("--seed", seed, "RNG seed; generated and recorded when omitted");
    };

    PredictOpts predict;
    auto* p_cmd = app.add_subcommand("predict", "Expected payments (and days) until a channel unbalances");
    p_cmd->add_option("--p", predict.p, "Probability that a payment flows A -> B");
    p_cmd->add_option("--a", predict.a, "A-side boundary (payments)");
    p_cmd->add_option("--b", predict.b, "B-side boundary (payments)");
    p_cmd->add_option("--x", predict.x, "Start offset (payments)");
    p_cmd->add_option("--fund-a", predict.fund_a, "A-side funds (sat)");
    p_cmd->add_option("--fund-b", predict.fund_b, "B-side funds (sat)");
    p_cmd->add_option("--omega", predict.omega, "Payment size (sat)");
    p_cmd->add_option("--lambda-ab", predict.lambda_ab, "Payment rate A -> B (payments/day)");
    p_cmd->add_option("--lambda-ba", predict.lambda_ba, "Payment rate B -> A (payments/day)");
    common(p_cmd, false);

    SimulateOpts sim;
    auto* s_cmd = app.add_subcommand("simulate", "Replay or generate a payment stream through a network");
    add_network_options(s_cmd, sim.net);
    s_cmd->add_option("--events", sim.events_file, "Event log CSV to replay")->check(CLI::ExistingFile);
    s_cmd->add_option("--sc", sim.sc, "Sparse coefficient of generated rates")->capture_default_str();
    s_cmd->add_option("--sk", sim.sk, "Skew of generated rates")->capture_default_str();
    s_cmd->add_option("--base-rate", sim.base_rate, "Active pair rate (payments/day)")->capture_default_str();
    s_cmd->add_option("--horizon", sim.horizon, "Generated stream length (days)")->capture_default_str();
    s_cmd->add_option("--omega", sim.omega, "Payment size (sat)")->capture_default_str();
    common(s_cmd, true);

    SingleOpts single;
    auto* c_cmd = app.add_subcommand("single-channel", "Failure rate of a lone channel after its first unbalance");
    c_cmd->add_option("--p", single.p, "Probability that a payment flows A -> B")->capture_default_str();
    c_cmd->add_option("--capacity", single.capacity, "Channel capacity (sat)")->capture_default_str();
    c_cmd->add_option("--omega", single.omega, "Payment size (sat)")->capture_default_str();
    c_cmd->add_option("--payments", single.payments, "Payments per run")->capture_default_str();
    c_cmd->add_option("--repeats", single.repeats, "Independent runs")->capture_default_str();
    common(c_cmd, true);

    UnbalanceOpts unb;
    auto* u_cmd = app.add_subcommand("unbalance", "Network success rate with a selection of channels drained");
    add_network_options(u_cmd, unb.net);
    u_cmd->add_option("--strategy", unb.strategy, "random, top or window")
        ->check(CLI::IsMember({"random", "top", "window"}))
        ->capture_default_str();
    u_cmd->add_option("--fraction", unb.fraction, "Fraction of channels to drain")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    u_cmd->add_option("--window-start", unb.window_start, "First centrality rank of the window")->capture_default_str();
    u_cmd->add_option("--window-width", unb.window_width, "Window width in channels (default: fraction of all)");
    u_cmd->add_flag("--all-windows", unb.all_windows, "Slide non-overlapping windows over the whole ranking");
    u_cmd->add_option("--payments", unb.payments, "Payments per run")->capture_default_str();
    u_cmd->add_option("--seeds", unb.seeds, "Runs to average")->check(CLI::PositiveNumber)->capture_default_str();
    u_cmd->add_option("--omega", unb.omega, "Payment size (sat)")->capture_default_str();
    common(u_cmd, true);

    EvaluateOpts eval;
    auto* e_cmd = app.add_subcommand("evaluate", "Prediction error over an SC x SK grid");
    e_cmd->add_option("--config", eval.config_file, "Evaluation plan (key = value)")->required();
    e_cmd->add_option("--iterations", eval.iterations, "Override the plan's iteration count");
    e_cmd->add_option("--nodes", eval.nodes, "Override the plan's node count");
    common(e_cmd, true);

    SnapshotOpts snapo;
    auto* n_cmd = app.add_subcommand("snapshot", "Lifespan analysis of a channel snapshot");
    n_cmd->add_option("--file", snapo.file, "Snapshot CSV")->required()->check(CLI::ExistingFile);
    n_cmd->add_option("--r", snapo.rate, "Uniform pair payment rate (payments/day)")->capture_default_str();
    n_cmd->add_option("--omega", snapo.omega, "Payment size (sat)")->capture_default_str();
    n_cmd->add_option("--central-fraction", snapo.central_fraction, "Top share by betweenness")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    n_cmd->add_option("--bins", snapo.bins, "Histogram bins")->check(CLI::PositiveNumber)->capture_default_str();
    n_cmd->add_flag("--linear-bins", snapo.linear_bins, "Linear instead of logarithmic histogram bins");
    n_cmd->add_option("--batch-size", snapo.batch_size, "Channels per betweenness batch")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    common(n_cmd, false);

    SweepOpts sweep;
    auto* w_cmd = app.add_subcommand("sweep", "Lifespan curves over p, capacity, peer fund or own fund");
    w_cmd->add_option("--kind", sweep.kind, "p, capacity, peer-fund or own-fund")
        ->required()
        ->check(CLI::IsMember({"p", "capacity", "peer-fund", "own-fund"}));
    w_cmd->add_option("--p", sweep.p, "Direction probability (fund sweeps)")->capture_default_str();
    w_cmd->add_option("--a", sweep.a, "A-side boundary (p sweep, payments)")->capture_default_str();
    w_cmd->add_option("--b", sweep.b, "B-side boundary (p sweep, payments)")->capture_default_str();
    w_cmd->add_option("--fund-a", sweep.fund_a, "Fixed A-side funds (sat)")->capture_default_str();
    w_cmd->add_option("--fund-b", sweep.fund_b, "Fixed B-side funds (sat)")->capture_default_str();
    w_cmd->add_option("--omega", sweep.omega, "Payment size (sat)")->capture_default_str();
    w_cmd->add_option("--from", sweep.from, "First value of the swept variable")->required();
    w_cmd->add_option("--to", sweep.to, "Last value of the swept variable")->required();
    w_cmd->add_option("--step", sweep.step, "Increment of the swept variable")->required();
    common(w_cmd, false);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
        run.seed = seed;
        CLI::App* sub = app.get_subcommands().front();
        if (sub == p_cmd) cmd_predict(predict, run);
        else if (sub == s_cmd) cmd_simulate(sim, run);
        else if (sub == c_cmd) cmd_single_channel(single, run);
        else if (sub == u_cmd) cmd_unbalance(unb, run);
        else if (sub == e_cmd) cmd_evaluate(eval, run);
        else if (sub == n_cmd) cmd_snapshot(snapo, run);
        else cmd_sweep(sweep, run);
        write_manifest(run, *sub);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const chanlife::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

// `chanlife replay MANIFEST [--out DIR]` re-runs a recorded invocation.
int replay(const std::vector<std::string>& args) {
    if (args.empty()) {
        std::cerr << "usage: chanlife replay MANIFEST [--out DIR]\n";
        return 2;
    }
    std::ifstream in(args[0]);
    if (!in) {
        std::cerr << "error: cannot open manifest " << args[0] << '\n';
        return 1;
    }
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        std::cerr << "error: malformed manifest: " << e.what() << '\n';
        return 1;
    }
    auto replayed = manifest.at("argv").get<std::vector<std::string>>();
    for (std::size_t i = 1; i < args.size(); ++i) replayed.push_back(args[i]);
    return run_cli(replayed);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty() && args[0] == "replay") return replay({args.begin() + 1, args.end()});
    return run_cli(args);
}
