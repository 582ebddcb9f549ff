#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "chanlife/evaluation.hpp"
#include "chanlife/graph.hpp"
#include "chanlife/simulator.hpp"
#include "chanlife/snapshot.hpp"
#include "chanlife/traffic.hpp"
#include "chanlife/walk.hpp"

namespace py = pybind11;
using namespace chanlife;

namespace {

RatesMatrix rates_from_rows(const std::vector<std::vector<double>>& rows) {
    RatesMatrix m(rows.size());
    for (std::size_t s = 0; s < rows.size(); ++s) {
        if (rows[s].size() != rows.size()) throw ParameterError("rates matrix must be square");
        for (std::size_t t = 0; t < rows.size(); ++t)
            if (s != t) m.set(static_cast<NodeId>(s), static_cast<NodeId>(t), rows[s][t]);
    }
    return m;
}

std::vector<std::vector<double>> rates_to_rows(const RatesMatrix& m) {
    std::vector<std::vector<double>> rows(m.size(), std::vector<double>(m.size(), 0.0));
    for (std::size_t s = 0; s < m.size(); ++s)
        for (std::size_t t = 0; t < m.size(); ++t) rows[s][t] = m.at(static_cast<NodeId>(s), static_cast<NodeId>(t));
    return rows;
}

}  // namespace

PYBIND11_MODULE(_chanlife, m) {
    m.doc() = "Payment channel lifespan prediction and simulation";

    auto base = py::register_exception<Error>(m, "ChanlifeError", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<DegenerateChannelError>(m, "DegenerateChannelError", base.ptr());
    py::register_exception<DeadChannelError>(m, "DeadChannelError", base.ptr());
    py::register_exception<NoUnbalanceError>(m, "NoUnbalanceError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());

    py::class_<WalkParams>(m, "WalkParams")
        .def(py::init([](double p, std::int64_t a, std::int64_t b, std::int64_t x) {
                 return WalkParams{p, a, b, x};
             }),
             py::arg("p"), py::arg("a"), py::arg("b"), py::arg("x") = 0)
        .def_readwrite("p", &WalkParams::p)
        .def_readwrite("a", &WalkParams::a)
        .def_readwrite("b", &WalkParams::b)
        .def_readwrite("x", &WalkParams::x)
        .def("__repr__", [](const WalkParams& w) {
            std::ostringstream s;
            s << "WalkParams(p=" << w.p << ", a=" << w.a << ", b=" << w.b << ", x=" << w.x << ")";
            return s.str();
        });

    m.def(
        "expected_steps",
        [](double p, std::int64_t a, std::int64_t b, std::int64_t x) { return expected_steps_from({p, a, b, x}); },
        py::arg("p"), py::arg("a"), py::arg("b"), py::arg("x") = 0,
        "Expected payments until the walk started at x hits +a or -b.");
    m.def(
        "discretize_funds",
        [](Satoshi fund_a, Satoshi fund_b, Satoshi omega) { return discretize_funds({fund_a, fund_b, omega}); },
        py::arg("fund_a"), py::arg("fund_b"), py::arg("omega"));
    m.def("direction_probability", &direction_probability, py::arg("lambda_ab"), py::arg("lambda_ba"));
    m.def("expected_lifetime", &expected_lifetime, py::arg("steps"), py::arg("lambda_ab"), py::arg("lambda_ba"));
    m.def(
        "monte_carlo_absorption",
        [](double p, std::int64_t a, std::int64_t b, std::int64_t x, std::uint64_t trials, std::uint64_t seed) {
            const auto s = monte_carlo_absorption({p, a, b, x}, trials, seed);
            return py::make_tuple(s.mean_steps, s.std_error);
        },
        py::arg("p"), py::arg("a"), py::arg("b"), py::arg("x") = 0, py::arg("trials") = 100000,
        py::arg("seed") = 0, "Returns (mean_steps, std_error).");

    py::class_<Channel>(m, "Channel")
        .def_readonly("node_a", &Channel::node_a)
        .def_readonly("node_b", &Channel::node_b)
        .def_readonly("fund_a", &Channel::fund_a)
        .def_readonly("fund_b", &Channel::fund_b)
        .def_property_readonly("capacity", &Channel::capacity);

    py::class_<PaymentGraph>(m, "PaymentGraph")
        .def(py::init<std::size_t>(), py::arg("node_count") = 0)
        .def("add_node", &PaymentGraph::add_node, py::arg("label") = "")
        .def("add_channel", &PaymentGraph::add_channel, py::arg("a"), py::arg("b"), py::arg("fund_a"),
             py::arg("fund_b"))
        .def_property_readonly("node_count", &PaymentGraph::node_count)
        .def_property_readonly("channel_count", &PaymentGraph::channel_count)
        .def("channel", &PaymentGraph::channel, py::arg("c"))
        .def("label", &PaymentGraph::label, py::arg("v"))
        .def("set_funds", &PaymentGraph::set_funds, py::arg("c"), py::arg("fund_a"), py::arg("fund_b"));

    m.def("random_network", [](std::size_t n, double edge_prob, std::uint64_t seed, Satoshi fund) {
        return random_network(n, edge_prob, seed, {fund, fund});
    }, py::arg("n"), py::arg("edge_prob"), py::arg("seed"), py::arg("fund") = 1'200'000);
    m.def("preferential_attachment_network", [](std::size_t n, std::size_t links, std::uint64_t seed, Satoshi fund) {
        return preferential_attachment_network(n, links, seed, {fund, fund});
    }, py::arg("n"), py::arg("links"), py::arg("seed"), py::arg("fund") = 1'200'000);
    m.def("generate_mrates", [](std::size_t n, double sc, double sk, double base_rate, std::uint64_t seed) {
        return rates_to_rows(generate_mrates({n, sc, sk, base_rate, seed}));
    }, py::arg("n"), py::arg("sparse_coefficient"), py::arg("skew"), py::arg("base_rate") = 1.0, py::arg("seed") = 0,
       "Rates matrix as a list of rows (payments/day).");

    m.def("undirected_edge_betweenness", &undirected_edge_betweenness, py::arg("graph"));
    m.def("edge_payment_rates", [](const PaymentGraph& g, const std::vector<std::vector<double>>& rates) {
        return edge_payment_rates(g, rates_from_rows(rates));
    }, py::arg("graph"), py::arg("rates"), "Per directed edge; edge 2c is node_a -> node_b of channel c.");

    m.def("predict_lifespans", [](const PaymentGraph& g, const std::vector<std::vector<double>>& rates, Satoshi omega) {
        py::list out;
        for (const auto& pr : predict_all_lifespans(g, rates_from_rows(rates), omega)) {
            py::dict d;
            d["channel"] = pr.channel;
            d["lambda_ab"] = pr.lambda_ab;
            d["lambda_ba"] = pr.lambda_ba;
            d["p"] = pr.p;
            d["a"] = pr.a;
            d["b"] = pr.b;
            d["status"] = pr.status == PredictionStatus::ok     ? "ok"
                          : pr.status == PredictionStatus::dead ? "dead"
                                                                : "degenerate";
            d["expected_payments"] = pr.lifespan ? py::cast(pr.lifespan->expected_payments) : py::none();
            d["expected_days"] = pr.lifespan ? py::cast(pr.lifespan->expected_days) : py::none();
            out.append(d);
        }
        return out;
    }, py::arg("graph"), py::arg("rates"), py::arg("omega") = 60'000);

    m.def("single_channel_failure_rate", [](double p, Satoshi capacity, Satoshi omega, std::uint64_t n, std::uint64_t seed) {
        return single_channel_experiment(p, capacity, omega, n, seed).failure_rate;
    }, py::arg("p"), py::arg("capacity"), py::arg("omega") = 60'000, py::arg("payments") = 5000, py::arg("seed") = 0);

    py::class_<EvaluationConfig>(m, "EvaluationConfig")
        .def(py::init<>())
        .def_readwrite("nodes", &EvaluationConfig::nodes)
        .def_readwrite("edge_prob", &EvaluationConfig::edge_prob)
        .def_readwrite("sparse_coefficient", &EvaluationConfig::sparse_coefficient)
        .def_readwrite("skew", &EvaluationConfig::skew)
        .def_readwrite("base_rate", &EvaluationConfig::base_rate)
        .def_readwrite("iterations", &EvaluationConfig::iterations)
        .def_readwrite("omega", &EvaluationConfig::omega)
        .def_readwrite("channel_fund", &EvaluationConfig::channel_fund)
        .def_readwrite("abnormality_percentile", &EvaluationConfig::abnormality_percentile)
        .def_readwrite("min_unbalance_fraction", &EvaluationConfig::min_unbalance_fraction)
        .def_readwrite("horizon_factor", &EvaluationConfig::horizon_factor)
        .def_readwrite("seed", &EvaluationConfig::seed);

    m.def("evaluate", [](const EvaluationConfig& config) {
        ErrorReport r;
        {
            py::gil_scoped_release release;
            r = evaluate(config);
        }
        py::dict d;
        d["mean_relative_error"] = r.mean_relative_error;
        d["included"] = r.included_count;
        d["excluded"] = r.excluded_count;
        d["horizon_days"] = r.horizon_days;
        return d;
    }, py::arg("config"));

    m.def("balanced_lifespan_days", &balanced_lifespan_days, py::arg("capacity"), py::arg("ebc"), py::arg("rate"),
          py::arg("omega") = 60'000);
    m.def("load_snapshot", [](const std::filesystem::path& path) {
        auto snap = load_snapshot(path);
        return py::make_tuple(std::move(snap.graph), snap.channel_ids, snap.warnings);
    }, py::arg("path"), "Returns (graph, channel_ids, warnings).");
    m.def("snapshot_lifespans", [](const PaymentGraph& g, double rate, Satoshi omega) {
        const auto a = analyze_snapshot(g, rate, omega);
        std::vector<double> days;
        for (const auto& ch : a.channels) days.push_back(ch.expected_days);
        return days;
    }, py::arg("graph"), py::arg("rate") = 0.0022, py::arg("omega") = 60'000);
}
