#include "spex/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace spex {

void SimConfig::validate() const {
  if (sites.empty()) throw domain_error("SimConfig: no sites");
  params.validate();
  if (years < 1 || days_per_year < 1)
    throw domain_error("SimConfig: years and days_per_year must be >= 1");
  if (!(effective_buffer() > 0.0))
    throw domain_error("SimConfig: buffer_radius must be positive");
  if (!(stop_tolerance > 0.0 && stop_tolerance <= 1e-3))
    throw domain_error("SimConfig: stop_tolerance outside (0, 1e-3]");
}

std::vector<double> simulate_field(const std::vector<Point>& sites,
                                   const SmithParams& params, SplitMix64& rng,
                                   double buffer_radius,
                                   double stop_tolerance) {
  params.validate();
  const std::size_t p = sites.size();

  double xmin = sites[0].x, xmax = sites[0].x;
  double ymin = sites[0].y, ymax = sites[0].y;
  for (const Point& s : sites) {
    xmin = std::min(xmin, s.x);
    xmax = std::max(xmax, s.x);
    ymin = std::min(ymin, s.y);
    ymax = std::max(ymax, s.y);
  }
  xmin -= buffer_radius;
  xmax += buffer_radius;
  ymin -= buffer_radius;
  ymax += buffer_radius;
  const double area = (xmax - xmin) * (ymax - ymin);

  const double det = params.det();
  const double f_max = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
  // quadratic form coefficients of Sigma^{-1}
  const double i11 = params.sigma22 / det;
  const double i22 = params.sigma11 / det;
  const double i12 = -params.sigma12 / det;

  std::vector<double> field(p, 0.0);
  double gamma = 0.0;  // Poisson arrival time; storm size is area/gamma
  double field_min = 0.0;
  const double keep = 1.0 - stop_tolerance;
  for (std::uint64_t storm = 0;; ++storm) {
    if (storm >= kStormCap)
      throw nonconvergence_error(
          "simulate_field: storm cap exceeded",
          "cap=" + std::to_string(kStormCap) +
              " stop_tolerance=" + std::to_string(stop_tolerance));
    gamma += rng.exponential();
    const double size = area / gamma;
    if (size * f_max < field_min * keep) break;
    const double cx = rng.uniform(xmin, xmax);
    const double cy = rng.uniform(ymin, ymax);
    const double peak = size * f_max;
    field_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p; ++i) {
      const double dx = sites[i].x - cx, dy = sites[i].y - cy;
      const double q = i11 * dx * dx + 2.0 * i12 * dx * dy + i22 * dy * dy;
      field[i] = std::max(field[i], peak * std::exp(-0.5 * q));
      field_min = std::min(field_min, field[i]);
    }
  }
  return field;
}

Dataset simulate_dataset(const SimConfig& config) {
  config.validate();
  const double buffer = config.effective_buffer();
  Dataset ds;
  ds.sites = config.sites;
  ds.scale = Scale::Frechet;
  ds.truth = config.params;
  ds.seed = config.seed;
  const std::size_t p = config.sites.size();
  const std::size_t total =
      static_cast<std::size_t>(config.years) * config.days_per_year;
  ds.values.reserve(total * p);
  ds.year_of.reserve(total);
  for (int year = 0; year < config.years; ++year) {
    for (int day = 0; day < config.days_per_year; ++day) {
      SplitMix64 rng(stream_key(config.seed, year, day));
      const std::vector<double> field = simulate_field(
          config.sites, config.params, rng, buffer, config.stop_tolerance);
      ds.values.insert(ds.values.end(), field.begin(), field.end());
      ds.year_of.push_back(year);
    }
  }
  return ds;
}

Dataset to_gumbel(const Dataset& ds) {
  if (ds.scale != Scale::Frechet)
    throw domain_error("to_gumbel: dataset is not on the Frechet scale");
  Dataset out = ds;
  out.scale = Scale::Gumbel;
  for (double& v : out.values) {
    if (!(v > 0.0))
      throw domain_error("to_gumbel: nonpositive value on Frechet scale");
    v = std::log(v);
  }
  return out;
}

}  // namespace spex
