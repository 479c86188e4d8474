#pragma once

#include <functional>
#include <vector>

namespace spex {

struct NelderMeadOptions {
  int max_iterations = 5000;
  double objective_spread_tol = 1e-8;
  double parameter_spread_tol = 1e-6;
  double initial_step = 0.1;
  bool restart = true;  // one restart from the perturbed optimum
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Minimizes f over R^n starting from x0. f may return +inf to reject a
// point. Restart (when enabled) re-runs once from the found optimum with
// a perturbed simplex and keeps the better result.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0,
                             const NelderMeadOptions& opts = {});

}  // namespace spex
