#include "spex/smith.hpp"

#include <algorithm>
#include <limits>

namespace spex {

namespace {

void check_frechet_args(double z1, double z2) {
  if (!(z1 > 0.0) || !(z2 > 0.0))
    throw domain_error("cdf_frechet_pair: coordinates must be positive");
}

void check_a(double a) {
  if (!(a >= 0.0)) throw domain_error("pair coefficient a must be >= 0");
}

}  // namespace

double pair_coefficient(const Point& si, const Point& sj,
                        const SmithParams& params) {
  params.validate();
  const double dx = si.x - sj.x, dy = si.y - sj.y;
  const double idet = 1.0 / params.det();
  const double q = idet * (params.sigma22 * dx * dx -
                           2.0 * params.sigma12 * dx * dy +
                           params.sigma11 * dy * dy);
  return std::sqrt(std::max(q, 0.0));
}

double log_cdf_frechet_pair(double z1, double z2, double a) {
  check_frechet_args(z1, z2);
  check_a(a);
  if (a < kSingularA) return -1.0 / std::min(z1, z2);
  if (a > kIndependentA) return -1.0 / z1 - 1.0 / z2;
  return -v_frechet(z1, z2, a).v;
}

double cdf_frechet_pair(double z1, double z2, double a) {
  return std::exp(log_cdf_frechet_pair(z1, z2, a));
}

double log_cdf_gumbel_pair(double z1, double z2, double a) {
  check_a(a);
  if (a < kSingularA) return -std::exp(-std::min(z1, z2));
  if (a > kIndependentA) return -std::exp(-z1) - std::exp(-z2);
  return -v_gumbel(z1, z2, a).v;
}

double cdf_gumbel_pair(double z1, double z2, double a) {
  return std::exp(log_cdf_gumbel_pair(z1, z2, a));
}

PairPartials partials_pair(double z1, double z2, double a, Margin margin) {
  check_a(a);
  if (a < kSingularA)
    throw singular_model_error(
        "partials_pair: perfectly dependent pair has no density");
  PairPartials out;
  if (margin == Margin::Frechet) {
    check_frechet_args(z1, z2);
    if (a > kIndependentA) {
      const double g = std::exp(-1.0 / z1 - 1.0 / z2);
      const double j1 = 1.0 / (z1 * z1), j2 = 1.0 / (z2 * z2);
      return {g * j1, g * j2, g * j1 * j2, g};
    }
    const VKernel k = v_frechet(z1, z2, a);
    const double g = std::exp(-k.v);
    out = {-k.v1 * g, -k.v2 * g, (k.v1 * k.v2 - k.v12) * g, g};
  } else {
    if (a > kIndependentA) {
      const double e1 = std::exp(-z1), e2 = std::exp(-z2);
      const double g = std::exp(-e1 - e2);
      return {g * e1, g * e2, g * e1 * e2, g};
    }
    const VKernel k = v_gumbel(z1, z2, a);
    const double g = std::exp(-k.v);
    out = {-k.v1 * g, -k.v2 * g, (k.v1 * k.v2 - k.v12) * g, g};
  }
  return out;
}

double log_mixed_density(double z1, double z2, double a, Margin margin) {
  check_a(a);
  if (a < kSingularA)
    throw singular_model_error(
        "log_mixed_density: perfectly dependent pair has no density");
  if (margin == Margin::Frechet) {
    check_frechet_args(z1, z2);
    if (a > kIndependentA)
      return -1.0 / z1 - 1.0 / z2 - 2.0 * (std::log(z1) + std::log(z2));
    const VKernel k = v_frechet(z1, z2, a);
    const double lead = k.v1 * k.v2 - k.v12;
    if (!(lead > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(lead) - k.v;
  }
  if (a > kIndependentA) {
    const double e1 = std::exp(-z1), e2 = std::exp(-z2);
    return -z1 - z2 - e1 - e2;
  }
  const VKernel k = v_gumbel(z1, z2, a);
  const double lead = k.v1 * k.v2 - k.v12;
  if (!(lead > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(lead) - k.v;
}

double extremal_coefficient(const Point& h, const SmithParams& params) {
  const double a = pair_coefficient(Point{0.0, 0.0}, h, params);
  return 2.0 * norm_cdf(0.5 * a);
}

}  // namespace spex
