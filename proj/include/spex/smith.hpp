#pragma once

#include <cmath>

#include "spex/common.hpp"
#include "spex/normal.hpp"

namespace spex {

// Dependence covariance of the storm-shape density, Sigma = [[s11, s12],
// [s12, s22]]. Must be symmetric positive definite.
struct SmithParams {
  double sigma11 = 1.0;
  double sigma22 = 1.0;
  double sigma12 = 0.0;

  double det() const { return sigma11 * sigma22 - sigma12 * sigma12; }
  bool positive_definite() const {
    return sigma11 > 0.0 && sigma22 > 0.0 && det() > 0.0;
  }
  void validate() const {
    if (!positive_definite())
      throw domain_error("SmithParams: covariance not positive definite");
  }
  double max_eigenvalue() const {
    const double tr = sigma11 + sigma22;
    const double gap = std::sqrt((sigma11 - sigma22) * (sigma11 - sigma22) +
                                 4.0 * sigma12 * sigma12);
    return 0.5 * (tr + gap);
  }
};

enum class Margin { Frechet, Gumbel };

// Below this the pair is treated as perfectly dependent (no density);
// above kIndependentA the pair is treated as independent so that the
// Phi arguments never blow up.
inline constexpr double kSingularA = 1e-10;
inline constexpr double kIndependentA = 38.0;

// Mahalanobis separation a_ij of two sites under Sigma^{-1}.
double pair_coefficient(const Point& si, const Point& sj,
                        const SmithParams& params);

// Exponent V and its partials, with cdf = exp(-V). Shared kernel of every
// pairwise likelihood; kept inline for the composite-likelihood hot loops.
struct VKernel {
  double v;    // V(z1, z2)
  double v1;   // dV/dz1 (<= 0)
  double v2;   // dV/dz2 (<= 0)
  double v12;  // d2V/dz1 dz2 (<= 0)
};

// Unit Frechet margins. Requires z1, z2 > 0 and kSingularA < a.
// w2 mirrors w1 through an exactly antisymmetric log difference so that
// swapping the coordinates is bit-exact.
inline VKernel v_frechet(double z1, double z2, double a) {
  const double ia = 1.0 / a;
  const double t = ia * (std::log(z2) - std::log(z1));
  const double w1 = 0.5 * a + t;
  const double w2 = 0.5 * a - t;
  const double p1 = norm_cdf(w1), p2 = norm_cdf(w2);
  const double d1 = norm_pdf(w1), d2 = norm_pdf(w2);
  const double iz1 = 1.0 / z1, iz2 = 1.0 / z2;
  VKernel k;
  k.v = p1 * iz1 + p2 * iz2;
  k.v1 = -iz1 * iz1 * (p1 + ia * d1) + ia * iz1 * iz2 * d2;
  k.v2 = -iz2 * iz2 * (p2 + ia * d2) + ia * iz1 * iz2 * d1;
  k.v12 = -ia * iz1 * iz2 *
          (d1 * (1.0 - w1 * ia) * iz1 + d2 * (1.0 - w2 * ia) * iz2);
  return k;
}

// Gumbel margins (z = log of Frechet coordinate). Any real z1, z2.
inline VKernel v_gumbel(double z1, double z2, double a) {
  const double ia = 1.0 / a;
  const double t = ia * (z2 - z1);
  const double w1 = 0.5 * a + t;
  const double w2 = 0.5 * a - t;
  const double p1 = norm_cdf(w1), p2 = norm_cdf(w2);
  const double d1 = norm_pdf(w1), d2 = norm_pdf(w2);
  const double e1 = std::exp(-z1), e2 = std::exp(-z2);
  VKernel k;
  k.v = e1 * p1 + e2 * p2;
  k.v1 = -e1 * (p1 + ia * d1) + ia * e2 * d2;
  k.v2 = -e2 * (p2 + ia * d2) + ia * e1 * d1;
  k.v12 = -ia * (e1 * d1 * (1.0 - w1 * ia) + e2 * d2 * (1.0 - w2 * ia));
  return k;
}

// Bivariate CDF on unit Frechet margins. a = 0 degenerates to perfect
// dependence exp(-1/min(z1,z2)).
double cdf_frechet_pair(double z1, double z2, double a);
double log_cdf_frechet_pair(double z1, double z2, double a);

// Same distribution after the log change of margins: equals
// cdf_frechet_pair(exp(z1), exp(z2), a) exactly.
double cdf_gumbel_pair(double z1, double z2, double a);
double log_cdf_gumbel_pair(double z1, double z2, double a);

// First and mixed second partial derivatives of the chosen CDF, together
// with the CDF itself. Throws singular_model_error for a < kSingularA.
struct PairPartials {
  double d1;   // dG/dz1
  double d2;   // dG/dz2
  double d12;  // d2G/dz1 dz2
  double cdf;  // G
};
PairPartials partials_pair(double z1, double z2, double a, Margin margin);

// log of d2G/dz1dz2; used where exp(-V) would underflow.
double log_mixed_density(double z1, double z2, double a, Margin margin);

// Extremal coefficient v(h) = 2 Phi(a/2) in [1, 2] for displacement h.
double extremal_coefficient(const Point& h, const SmithParams& params);

}  // namespace spex
