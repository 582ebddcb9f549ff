#pragma once

// Single-channel lifespan model. A channel's balance is a one-dimensional
// walk started at x that moves +1 on a payment from side A to side B
// (probability p) and -1 otherwise; the channel is unbalanced once the walk
// reaches +a or -b.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>

#include "chanlife/errors.hpp"

namespace chanlife {

struct WalkParams {
    double p = std::numeric_limits<double>::quiet_NaN();
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t x = 0;

    /// Throws ParameterError unless 0 < p < 1, a,b >= 1 and -b <= x <= a.
    void validate() const;
};

struct ChannelSpec {
    Satoshi fund_a = 0;
    Satoshi fund_b = 0;
    Satoshi payment_size = 0;

    Satoshi capacity() const { return fund_a + fund_b; }
};

struct LifespanEstimate {
    double expected_payments = 0.0;
    std::optional<double> expected_days;
};

/// a = floor(F_A / w), b = floor(F_B / w), x = 0. p is left NaN.
/// Throws DegenerateChannelError when either boundary is zero.
WalkParams discretize_funds(const ChannelSpec& spec);

/// |p - 1/2| below this uses the a*b branch.
inline constexpr double kBalancedTolerance = 1e-9;

/// Expected number of steps from the origin until the walk hits +a or -b.
/// Requires params.x == 0.
double expected_steps(const WalkParams& params);

/// Expected number of steps from params.x; zero on either boundary.
double expected_steps_from(const WalkParams& params);

/// lambda_ab / (lambda_ab + lambda_ba). Throws DeadChannelError if both are 0.
double direction_probability(double lambda_ab, double lambda_ba);

/// steps / (lambda_ab + lambda_ba), in the time unit of the rates.
double expected_lifetime(double steps, double lambda_ab, double lambda_ba);

LifespanEstimate estimate_lifespan(const WalkParams& params, std::optional<double> lambda_ab = {},
                                   std::optional<double> lambda_ba = {});

struct AbsorptionSample {
    double mean_steps = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
    /// absorption step count -> number of walks
    std::map<std::uint64_t, std::uint64_t> histogram;
};

/// Simulates `trials` independent walks from params.x. Deterministic in
/// `seed` regardless of how many worker threads are available.
AbsorptionSample monte_carlo_absorption(const WalkParams& params, std::uint64_t trials,
                                        std::uint64_t seed);

}  // namespace chanlife
