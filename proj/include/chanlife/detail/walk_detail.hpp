#pragma once

#include "chanlife/walk.hpp"

// Branch-level access for tests that probe the seam at p = 1/2.
namespace chanlife::detail {

double expected_steps_balanced(const WalkParams& params);
double expected_steps_drifted(const WalkParams& params);

}  // namespace chanlife::detail
