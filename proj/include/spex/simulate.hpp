#pragma once

#include <cstdint>

#include "spex/dataset.hpp"
#include "spex/rng.hpp"
#include "spex/smith.hpp"

namespace spex {

struct SimConfig {
  std::vector<Point> sites;
  SmithParams params;
  int years = 1;
  int days_per_year = 1;
  std::uint64_t seed = 0;
  // 0 means "derive from params": 4*sqrt(max eigenvalue of Sigma), which
  // keeps truncated storm mass at any site below 1e-4 of the peak.
  double buffer_radius = 0.0;
  double stop_tolerance = 1e-6;

  double effective_buffer() const {
    return buffer_radius > 0.0 ? buffer_radius
                               : 4.0 * std::sqrt(params.max_eigenvalue());
  }
  void validate() const;
};

inline constexpr std::uint64_t kStormCap = 1000000;

// One realization of the Smith process at the given sites via the Poisson
// spectral construction; unit Frechet margins. Storm centers are drawn
// uniformly on the site bounding box dilated by buffer_radius.
std::vector<double> simulate_field(const std::vector<Point>& sites,
                                   const SmithParams& params, SplitMix64& rng,
                                   double buffer_radius,
                                   double stop_tolerance = 1e-6);

// years x days_per_year independent fields, one RNG substream per
// (seed, year, day); Frechet scale.
Dataset simulate_dataset(const SimConfig& config);

// Elementwise log; Frechet -> Gumbel.
Dataset to_gumbel(const Dataset& ds);

}  // namespace spex
