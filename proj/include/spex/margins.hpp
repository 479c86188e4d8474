#pragma once

#include <span>
#include <vector>

#include "spex/common.hpp"

namespace spex {

// Threshold-exceedance margin on the data scale: exceedances of u occur
// with probability zeta and their excesses follow GP(sigma_u, xi).
struct MarginalParams {
  double u = 0.0;
  double sigma_u = 1.0;
  double xi = 0.0;
  double zeta = 0.02;

  void validate() const {
    if (!(sigma_u > 0.0)) throw domain_error("MarginalParams: sigma_u <= 0");
    if (!(zeta > 0.0 && zeta < 1.0))
      throw domain_error("MarginalParams: zeta outside (0,1)");
  }
};

// Shape switches to the exponential limit below this magnitude.
inline constexpr double kXiZeroEps = 1e-8;

// Order-statistic quantile with linear interpolation at position
// (n-1)*level + 1 (R type 7). Copies and sorts its input.
double empirical_quantile(std::span<const double> data, double level);

// Tail approximation 1 - zeta*(1 + xi*(y-u)/sigma_u)^(-1/xi) for y >= u.
double gp_tail_cdf(double y, const MarginalParams& mp);

// Integral transform to unit Frechet scale: -1/log(gp_tail_cdf(y)).
// Returns +inf when the tail CDF rounds to 1; callers reject that.
double frechet_transform(double y, const MarginalParams& mp);

// log d(frechet_transform)/dy, the Jacobian of the uncensored coordinates
// in the censored pairwise likelihood.
double log_frechet_transform_jacobian(double y, const MarginalParams& mp);

// Transform of the threshold itself, -1/log(1 - zeta).
double threshold_frechet(const MarginalParams& mp);

struct GpFit {
  double sigma_u = 0.0;
  double xi = 0.0;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Maximum-likelihood GP fit to excesses (y - u > 0 values), with xi
// constrained to (-0.5, 1). Throws nonconvergence_error with diagnostics
// when the search fails, domain_error on degenerate input.
GpFit fit_marginal_gp(std::span<const double> excesses);

}  // namespace spex
