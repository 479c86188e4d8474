#include "spex/normal.hpp"

#include <limits>
#include <stdexcept>

namespace spex {

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("norm_quantile: p must be in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (norm_cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 4; ++i) {
    const double d = norm_pdf(x);
    if (d <= std::numeric_limits<double>::min()) break;
    x -= (norm_cdf(x) - p) / d;
  }
  return x;
}

}  // namespace spex
