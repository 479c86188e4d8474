#include "spex/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spex {

namespace {

struct Simplex {
  std::vector<std::vector<double>> x;
  std::vector<double> fx;
};

double spread(const std::vector<double>& v) {
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

double param_spread(const Simplex& s) {
  const std::size_t n = s.x[0].size();
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double lo = s.x[0][j], hi = s.x[0][j];
    for (const auto& v : s.x) {
      lo = std::min(lo, v[j]);
      hi = std::max(hi, v[j]);
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

NelderMeadResult run_simplex(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, double step_scale,
                             const NelderMeadOptions& opts) {
  const std::size_t n = x0.size();
  Simplex s;
  s.x.assign(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i)
    s.x[i + 1][i] += step_scale * (1.0 + std::abs(x0[i]));
  s.fx.resize(n + 1);
  int evals = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    s.fx[i] = f(s.x[i]);
    ++evals;
  }

  // standard coefficients: reflection 1, expansion 2, contraction .5, shrink .5
  NelderMeadResult res;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    std::vector<std::size_t> order(n + 1);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.fx[a] < s.fx[b]; });
    Simplex sorted;
    sorted.x.reserve(n + 1);
    sorted.fx.reserve(n + 1);
    for (auto i : order) {
      sorted.x.push_back(std::move(s.x[i]));
      sorted.fx.push_back(s.fx[i]);
    }
    s = std::move(sorted);

    if (std::isfinite(s.fx[0]) && std::isfinite(s.fx[n]) &&
        spread(s.fx) < opts.objective_spread_tol &&
        param_spread(s) < opts.parameter_spread_tol) {
      res.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += s.x[i][j];
    for (auto& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j)
        p[j] = centroid[j] + t * (s.x[n][j] - centroid[j]);
      return p;
    };

    auto reflected = blend(-1.0);
    const double fr = f(reflected);
    ++evals;
    if (fr < s.fx[0]) {
      auto expanded = blend(-2.0);
      const double fe = f(expanded);
      ++evals;
      if (fe < fr) {
        s.x[n] = std::move(expanded);
        s.fx[n] = fe;
      } else {
        s.x[n] = std::move(reflected);
        s.fx[n] = fr;
      }
      continue;
    }
    if (fr < s.fx[n - 1]) {
      s.x[n] = std::move(reflected);
      s.fx[n] = fr;
      continue;
    }
    const bool outside = fr < s.fx[n];
    auto contracted = blend(outside ? -0.5 : 0.5);
    const double fc = f(contracted);
    ++evals;
    if (fc < std::min(fr, s.fx[n])) {
      s.x[n] = std::move(contracted);
      s.fx[n] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j)
        s.x[i][j] = s.x[0][j] + 0.5 * (s.x[i][j] - s.x[0][j]);
      s.fx[i] = f(s.x[i]);
      ++evals;
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (s.fx[i] < s.fx[best]) best = i;
  res.x = s.x[best];
  res.value = s.fx[best];
  res.iterations = iter;
  res.evaluations = evals;
  return res;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0,
                             const NelderMeadOptions& opts) {
  if (x0.empty()) {
    NelderMeadResult r;
    r.value = f(x0);
    r.evaluations = 1;
    r.converged = true;
    return r;
  }
  NelderMeadResult first = run_simplex(f, x0, opts.initial_step, opts);
  if (!opts.restart) return first;
  NelderMeadResult second =
      run_simplex(f, first.x, 0.1 * opts.initial_step, opts);
  if (first.value < second.value) {
    second.x = first.x;
    second.value = first.value;
    second.converged = first.converged;
  }
  second.iterations += first.iterations;
  second.evaluations += first.evaluations;
  return second;
}

}  // namespace spex
