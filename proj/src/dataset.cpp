#include "spex/dataset.hpp"

#include <algorithm>

namespace spex {

std::string to_string(Scale s) {
  switch (s) {
    case Scale::Frechet: return "frechet";
    case Scale::Gumbel: return "gumbel";
    default: return "raw";
  }
}

Scale scale_from_string(const std::string& s) {
  if (s == "frechet") return Scale::Frechet;
  if (s == "gumbel") return Scale::Gumbel;
  if (s == "raw") return Scale::Raw;
  throw config_error("unknown scale tag: " + s);
}

std::vector<Point> regular_grid(int n, double k) {
  if (n < 2) throw domain_error("regular_grid: n must be >= 2");
  if (!(k > 0.0)) throw domain_error("regular_grid: lag must be positive");
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n) * n);
  for (int iy = 1; iy <= n; ++iy)
    for (int ix = 1; ix <= n; ++ix)
      pts.push_back({k * ix, k * iy});
  return pts;
}

Dataset yearly_maxima(const Dataset& ds) {
  const std::size_t p = ds.cols();
  if (ds.rows() == 0) throw domain_error("yearly_maxima: empty dataset");
  Dataset out;
  out.sites = ds.sites;
  out.scale = ds.scale;
  out.truth = ds.truth;
  out.seed = ds.seed;
  int prev_year = ds.year_of[0] - 1;
  for (std::size_t t = 0; t < ds.rows(); ++t) {
    if (ds.year_of[t] != prev_year) {
      prev_year = ds.year_of[t];
      out.year_of.push_back(prev_year);
      out.values.insert(out.values.end(), &ds.values[t * p],
                        &ds.values[t * p] + p);
    } else {
      double* row = &out.values[(out.year_of.size() - 1) * p];
      for (std::size_t i = 0; i < p; ++i)
        row[i] = std::max(row[i], ds(t, i));
    }
  }
  return out;
}

}  // namespace spex
