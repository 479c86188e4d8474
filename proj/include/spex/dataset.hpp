#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spex/common.hpp"
#include "spex/smith.hpp"

namespace spex {

enum class Scale { Frechet, Gumbel, Raw };

std::string to_string(Scale s);
Scale scale_from_string(const std::string& s);

// T x p observation matrix (row-major) with site coordinates and a scale
// tag. year_of maps each row to its year for block reductions and
// subsampling.
struct Dataset {
  std::vector<double> values;  // T*p, row t site i at values[t*p + i]
  std::vector<Point> sites;
  Scale scale = Scale::Raw;
  std::vector<int> year_of;

  // provenance carried along when the data were simulated
  std::optional<SmithParams> truth;
  std::optional<std::uint64_t> seed;

  std::size_t rows() const { return year_of.size(); }
  std::size_t cols() const { return sites.size(); }
  double operator()(std::size_t t, std::size_t i) const {
    return values[t * sites.size() + i];
  }
  double& operator()(std::size_t t, std::size_t i) {
    return values[t * sites.size() + i];
  }
};

// n*n points at coordinates {k, 2k, ..., nk}^2, row-major in y then x.
std::vector<Point> regular_grid(int n, double k);

// Per-year block maxima (componentwise); result has one row per year and
// inherits scale and sites.
Dataset yearly_maxima(const Dataset& ds);

}  // namespace spex
