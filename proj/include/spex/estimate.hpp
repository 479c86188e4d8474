#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spex/optim.hpp"
#include "spex/pairlik.hpp"

namespace spex {

using Matrix = std::vector<std::vector<double>>;

// Overlapping temporal windows for the score-covariance estimator.
struct SubsampleConfig {
  int window_days = 91;
  int stride_days = 30;

  int window_count(std::size_t rows) const {
    return static_cast<int>((rows - window_days) / stride_days) + 1;
  }
  void validate(std::size_t rows) const {
    if (window_days < 1 || static_cast<std::size_t>(window_days) > rows)
      throw domain_error("SubsampleConfig: window length outside [1, T]");
    if (stride_days < 1 || stride_days > window_days)
      throw domain_error("SubsampleConfig: stride outside [1, window]");
    if (window_count(rows) < 2)
      throw domain_error("SubsampleConfig: fewer than 2 windows");
  }
};

struct FitOptions {
  bool lt_two_step = true;       // dispatch choice for the LT method
  bool rt_fix_xi_zero = true;    // RT margin shape pinned to 0
  // RT margin scale pinned to 1, the exact excess scale of Gumbel-margin
  // data. Freeing it opens a flat (sigma_u, sigma_u^2 * Sigma) likelihood
  // ridge under strong dependence that roughly doubles the sampling
  // variance of the dependence estimates.
  bool rt_fix_sigma_u_one = true;
  bool prs_fit_margins = true;   // PRS fits (mu, sigma_g); else pinned (0,1)
  NelderMeadOptions nm;
  int threads = 1;
};

// Optional starting point; anything unset is moment-matched from the data.
struct ThetaInit {
  std::optional<SmithParams> beta;
  std::optional<double> sigma_u;
  std::optional<double> xi;
  std::optional<double> mu;
  std::optional<double> sigma_g;
};

struct FitResult {
  Method method = Method::RT;
  std::vector<std::string> param_names;
  std::vector<double> theta_hat;  // natural scale, aligned with param_names

  SmithParams beta;
  double sigma_u = 0.0, xi = 0.0;  // RT/LT margins
  double mu = 0.0, sigma_g = 1.0;  // PRS margins
  double threshold = 0.0, zeta = 0.0;

  double cl_value = 0.0;
  bool converged = false;
  int iterations = 0, evaluations = 0;
  double runtime_seconds = 0.0;
  std::string diagnostics;

  Matrix H, J, V;                  // sandwich pieces, empty until computed
  std::vector<double> std_errors;  // sqrt diag V
};

// Log-Cholesky packing of the dependence covariance: every packed point
// maps to a positive-definite Sigma.
std::vector<double> pack_sigma(const SmithParams& s);
SmithParams unpack_sigma(const double* packed);

// Moment-matched starting point: isotropic Sigma calibrated so that the
// implied extremal coefficient matches an empirical one at the median
// weighted lag; margins from pooled moments.
ThetaInit default_init(const Dataset& ds, const WeightScheme& ws,
                       Method method, double u, double zeta);

// Maximizes the weighted composite log likelihood over the method's full
// parameter vector (for LT this is the joint fit). The dataset must be
// Gumbel scale; PRS expects per-block maxima rows. u and zeta are ignored
// for PRS. Never throws on iteration-cap exhaustion: the result carries
// converged = false.
FitResult maximize_cl(const Dataset& ds, const WeightScheme& ws, Method method,
                      double u, double zeta, const FitOptions& opts = {},
                      const ThetaInit& init = {});

// Two-step censored fit: pooled marginal GP maximum likelihood for
// (sigma_u, xi), then composite maximization over the dependence
// parameters with the margins plugged in.
FitResult fit_two_step_lt(const Dataset& ds, const WeightScheme& ws, double u,
                          double zeta, const FitOptions& opts = {},
                          const ThetaInit& init = {});

// Central finite-difference Hessian of cl at fit.theta_hat, negated and
// symmetrized (H_T). Step 1e-4 * (1 + |theta_k|) per coordinate.
Matrix hessian_cl(const CompositeLikelihood& cl, const FitResult& fit);

// Subsampled score covariance J_T = (T/M) sum_j s_j s_j' / d over
// overlapping row windows; scores by central differences with step
// 1e-5 * (1 + |theta_k|). Windows with zero score are counted and noted
// in *diagnostics when provided.
Matrix subsample_J(const CompositeLikelihood& cl, const FitResult& fit,
                   const SubsampleConfig& sc, std::string* diagnostics = nullptr);

// V_T = H^{-1} J H^{-1}. Throws on a numerically singular H (the message
// carries the condition number).
Matrix godambe_variance(const Matrix& H, const Matrix& J);

bool is_positive_definite(const Matrix& m);

// Generic finite-difference helpers (exposed for tests).
Matrix fd_hessian(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x, double rel_step);
std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double rel_step);

// Convenience orchestration shared by the CLI and the study harness:
// pooled threshold at threshold_quantile, zeta as the empirical
// exceedance rate, cut-off weights at weights_quantile, then the method
// fit (two-step for LT unless opts.lt_two_step is false; PRS reduces to
// yearly maxima internally).
FitResult fit_dataset(const Dataset& gumbel_ds, Method method,
                      double threshold_quantile, double weights_quantile,
                      const FitOptions& opts = {});

}  // namespace spex
