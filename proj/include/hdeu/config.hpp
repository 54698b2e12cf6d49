#pragma once

#include <limits>

namespace hdeu {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr int kSchemaVersion = 1;

/// Risk aversion value that selects the global minimum variance branch.
inline constexpr double kGmvGamma = std::numeric_limits<double>::infinity();

inline bool is_gmv(double gamma) { return gamma == kGmvGamma; }

/// Numerical thresholds used across the library. Kept in one place so the
/// tests and the library agree on what "zero" means.
struct Tolerances {
  double symmetry = 1e-12;       // relative, for symmetric inputs
  double symmetry_input = 1e-8;  // relative, inputs are symmetrized above this
  double weight_sum = 1e-10;     // |sum(w) - 1|, scaled by max(1, |w|_1)
  double slope_epsilon = 1e-10;  // |s_c| below this makes eta undefined
  double denominator = 1e-10;    // relative to the scale of the terms
  double negative_variance = 1e-10;
  double unit_norm = 1e-10;
  double rcond = 1e-13;          // reciprocal condition floor in invert_spd
};

inline constexpr Tolerances kTol{};

}  // namespace hdeu
