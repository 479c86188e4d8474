#pragma once

#include <cmath>

namespace spex {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Standard normal CDF via the complementary error function (absolute
// error at library level, ~1e-16).
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// Upper tail 1 - Phi(x), accurate for large x.
inline double norm_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

inline double norm_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Inverse of norm_cdf. Newton refinement of a bisection bracket; used on
// cold paths only (initial guesses, test oracles).
double norm_quantile(double p);

}  // namespace spex
