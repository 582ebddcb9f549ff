#include "chanlife/walk.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "chanlife/detail/walk_detail.hpp"
#include "parallel.hpp"

namespace chanlife {

void WalkParams::validate() const {
    if (!(p > 0.0 && p < 1.0)) {
        std::ostringstream msg;
        msg << "direction probability must lie in (0, 1), got " << p;
        throw ParameterError(msg.str());
    }
    if (a < 1 || b < 1) throw ParameterError("walk boundaries a and b must be >= 1");
    if (x < -b || x > a) throw ParameterError("start position must satisfy -b <= x <= a");
}

WalkParams discretize_funds(const ChannelSpec& spec) {
    if (spec.payment_size <= 0) throw ParameterError("payment size must be positive");
    if (spec.fund_a < 0 || spec.fund_b < 0) throw ParameterError("channel funds must be non-negative");
    WalkParams params;
    params.a = spec.fund_a / spec.payment_size;
    params.b = spec.fund_b / spec.payment_size;
    if (params.a == 0 || params.b == 0) {
        std::ostringstream msg;
        msg << "degenerate channel: funds (" << spec.fund_a << ", " << spec.fund_b
            << ") cannot carry a payment of " << spec.payment_size << " sat in both directions";
        throw DegenerateChannelError(msg.str());
    }
    return params;
}

namespace detail {

double expected_steps_balanced(const WalkParams& params) {
    return static_cast<double>(params.a - params.x) * static_cast<double>(params.b + params.x);
}

double expected_steps_drifted(const WalkParams& params) {
    // Mirror the walk so the favoured direction is "up": hi >= 1/2, and
    // rho = lo/hi <= 1 keeps every power in [0, 1]. lo is always derived
    // from hi so that (p, a, b) and (1-p, b, a) evaluate bit-identically.
    const bool mirrored = params.p < 0.5;
    const double hi = mirrored ? 1.0 - params.p : params.p;
    const double drift = 2.0 * hi - 1.0;
    const double upper = static_cast<double>(mirrored ? params.b : params.a);
    const double lower = static_cast<double>(mirrored ? params.a : params.b);
    const double start = static_cast<double>(mirrored ? -params.x : params.x);

    const double log_rho = std::log1p(-drift / hi);
    const double width = upper + lower;
    const double from_bottom = start + lower;

    // (1 - rho^k) / (1 - rho^N), both factors via expm1
    const double hit_top = std::expm1(from_bottom * log_rho) / std::expm1(width * log_rho);
    const double steps = (width * hit_top - from_bottom) / drift;
    if (!std::isfinite(steps)) {
        std::ostringstream msg;
        msg << "expected step count is not finite for p=" << params.p << ", a=" << params.a
            << ", b=" << params.b << ", x=" << params.x;
        throw NumericalError(msg.str());
    }
    return steps;
}

}  // namespace detail

double expected_steps_from(const WalkParams& params) {
    params.validate();
    if (params.x == params.a || params.x == -params.b) return 0.0;
    if (std::abs(params.p - 0.5) < kBalancedTolerance) return detail::expected_steps_balanced(params);
    return detail::expected_steps_drifted(params);
}

double expected_steps(const WalkParams& params) {
    if (params.x != 0) throw ParameterError("expected_steps starts at the origin; use expected_steps_from");
    return expected_steps_from(params);
}

double direction_probability(double lambda_ab, double lambda_ba) {
    if (!(lambda_ab >= 0.0) || !(lambda_ba >= 0.0)) throw ParameterError("payment rates must be non-negative");
    const double total = lambda_ab + lambda_ba;
    if (total == 0.0) throw DeadChannelError("dead channel: no payments in either direction");
    return lambda_ab / total;
}

double expected_lifetime(double steps, double lambda_ab, double lambda_ba) {
    if (!(steps >= 0.0)) throw ParameterError("step count must be non-negative");
    if (!(lambda_ab >= 0.0) || !(lambda_ba >= 0.0)) throw ParameterError("payment rates must be non-negative");
    const double total = lambda_ab + lambda_ba;
    if (total == 0.0) throw DeadChannelError("dead channel: total payment rate is zero");
    return steps / total;
}

LifespanEstimate estimate_lifespan(const WalkParams& params, std::optional<double> lambda_ab,
                                   std::optional<double> lambda_ba) {
    if (lambda_ab.has_value() != lambda_ba.has_value())
        throw ParameterError("both directional rates are needed for a time estimate");
    LifespanEstimate estimate;
    estimate.expected_payments = expected_steps_from(params);
    if (lambda_ab) estimate.expected_days = expected_lifetime(estimate.expected_payments, *lambda_ab, *lambda_ba);
    return estimate;
}

namespace {

constexpr std::uint64_t kTrialsPerChunk = 8192;

struct ChunkTally {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::vector<std::uint64_t> counts;
};

ChunkTally run_chunk(const WalkParams& params, std::uint64_t trials, std::uint64_t seed, std::uint64_t chunk) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
    std::mt19937_64 rng(seq);
    std::bernoulli_distribution up(params.p);

    ChunkTally tally;
    for (std::uint64_t t = 0; t < trials; ++t) {
        std::int64_t pos = params.x;
        std::uint64_t steps = 0;
        while (pos != params.a && pos != -params.b) {
            pos += up(rng) ? 1 : -1;
            ++steps;
        }
        const double s = static_cast<double>(steps);
        tally.sum += s;
        tally.sum_sq += s * s;
        if (steps >= tally.counts.size()) tally.counts.resize(steps + 1, 0);
        ++tally.counts[steps];
    }
    return tally;
}

}  // namespace

AbsorptionSample monte_carlo_absorption(const WalkParams& params, std::uint64_t trials, std::uint64_t seed) {
    params.validate();
    if (trials < 1) throw ParameterError("at least one trial is required");

    const std::uint64_t chunks = (trials + kTrialsPerChunk - 1) / kTrialsPerChunk;
    std::vector<ChunkTally> tallies(chunks);
    detail::parallel_for(chunks, [&](std::size_t c) {
        const std::uint64_t begin = c * kTrialsPerChunk;
        const std::uint64_t n = std::min(kTrialsPerChunk, trials - begin);
        tallies[c] = run_chunk(params, n, seed, c);
    });

    AbsorptionSample sample;
    sample.trials = trials;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& tally : tallies) {
        sum += tally.sum;
        sum_sq += tally.sum_sq;
        for (std::uint64_t steps = 0; steps < tally.counts.size(); ++steps) {
            if (tally.counts[steps]) sample.histogram[steps] += tally.counts[steps];
        }
    }
    const double n = static_cast<double>(trials);
    sample.mean_steps = sum / n;
    if (trials > 1) {
        const double variance = std::max(0.0, (sum_sq - n * sample.mean_steps * sample.mean_steps) / (n - 1.0));
        sample.std_error = std::sqrt(variance / n);
    }
    return sample;
}

}  // namespace chanlife
