#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chanlife/graph.hpp"
#include "chanlife/walk.hpp"

namespace chanlife {

enum class PredictionStatus { ok, dead, degenerate };

struct ChannelPrediction {
    ChannelId channel = 0;
    double lambda_ab = 0.0;  // payments/day, node_a -> node_b
    double lambda_ba = 0.0;
    std::optional<double> p;
    std::int64_t a = 0;
    std::int64_t b = 0;
    PredictionStatus status = PredictionStatus::ok;
    /// Present when status == ok.
    std::optional<LifespanEstimate> lifespan;
};

/// Topology-driven lifespan of every channel: directional rates from the
/// shortest-path flow of `rates`, p from their ratio, the walk boundaries
/// from the channel funds. Dead and degenerate channels are flagged, not
/// dropped.
std::vector<ChannelPrediction> predict_all_lifespans(const PaymentGraph& graph, const RatesMatrix& rates,
                                                     Satoshi omega);

struct EvaluationConfig {
    std::size_t nodes = 50;
    double edge_prob = 0.2;
    double sparse_coefficient = 0.0;
    double skew = 1.0;
    double base_rate = 1.0;  // payments/day for an active pair
    std::size_t iterations = 100;
    Satoshi omega = 60'000;
    Satoshi channel_fund = 1'200'000;  // per side
    double abnormality_percentile = 0.95;
    double min_unbalance_fraction = 0.2;
    /// Simulated horizon as a multiple of the longest predicted lifespan
    /// among the channels that pass the percentile filter.
    double horizon_factor = 5.0;
    std::uint64_t seed = 1;

    void validate() const;
};

enum class Exclusion { none, dead, degenerate, long_lifespan, rarely_unbalanced };

const char* to_string(Exclusion reason);

struct ChannelError {
    ChannelId channel = 0;
    std::optional<double> p;
    std::optional<double> predicted_payments;
    std::optional<double> predicted_days;
    std::optional<double> observed_mean;  // mean first-unbalance step
    std::size_t unbalanced_iterations = 0;
    std::optional<double> relative_error;  // |observed - predicted| / observed
    Exclusion exclusion = Exclusion::none;

    bool excluded() const { return exclusion != Exclusion::none; }
};

struct ErrorReport {
    EvaluationConfig config;
    std::vector<ChannelError> channels;
    double mean_relative_error = 0.0;  // NaN when nothing was included
    std::size_t included_count = 0;
    std::size_t excluded_count = 0;
    double horizon_days = 0.0;
    double percentile_threshold_days = 0.0;
};

/// Linear-interpolation percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// Builds the network and rates once, runs `iterations` independent
/// simulations on fresh payment streams, and compares the mean observed
/// first-unbalance step of every channel with its prediction.
ErrorReport evaluate(const EvaluationConfig& config);

/// Evaluation on a caller-supplied network and rates matrix.
ErrorReport evaluate_network(const PaymentGraph& graph, const RatesMatrix& rates, const EvaluationConfig& config);

/// An evaluation run over an SC x SK grid.
struct EvaluationPlan {
    EvaluationConfig base;
    std::vector<double> sparse_coefficients;
    std::vector<double> skews;
};

struct GridCell {
    double sparse_coefficient = 0.0;
    double skew = 1.0;
    ErrorReport report;
};

std::vector<GridCell> evaluate_grid(const EvaluationPlan& plan);

/// `key = value` lines; '#' starts a comment. Required keys: nodes,
/// edge_prob, sparse_coefficients, skews, iterations, omega, seed. Optional:
/// base_rate, channel_fund, abnormality_percentile, min_unbalance_fraction,
/// horizon_factor. Lists are comma separated. Throws ParseError naming a
/// missing or unknown key.
EvaluationPlan parse_evaluation_plan(std::istream& in);
void write_evaluation_plan(std::ostream& out, const EvaluationPlan& plan);

/// Mean relative error grid: one row per SC, one column per SK.
void write_error_table(std::ostream& out, const EvaluationPlan& plan, const std::vector<GridCell>& cells);
void write_channel_errors(std::ostream& out, const ErrorReport& report);

}  // namespace chanlife
