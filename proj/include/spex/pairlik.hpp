#pragma once

#include <optional>
#include <vector>

#include "spex/dataset.hpp"
#include "spex/margins.hpp"
#include "spex/smith.hpp"

namespace spex {

enum class Method { RT, LT, PRS };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

// Cut-off weights: w_ij = 1 iff ||s_i - s_j|| <= delta, with delta the
// quantile_level-quantile of all p(p-1)/2 inter-site distances (boundary
// ties included).
struct WeightScheme {
  double delta = 0.0;
  double quantile_level = 1.0;
  std::size_t p = 0;
  std::vector<double> weights;  // p*p, symmetric, zero diagonal

  double operator()(std::size_t i, std::size_t j) const {
    return weights[i * p + j];
  }
  void validate() const;
};

WeightScheme make_weights(const std::vector<Point>& sites,
                          double quantile_level);

// Parameter bundles. beta is the Smith dependence covariance.
struct ThetaLT {
  double sigma_u = 1.0;
  double xi = 0.0;
  SmithParams beta;
};

struct ThetaRT {
  double sigma_u = 1.0;
  SmithParams beta;
  double xi = 0.0;  // fixed at 0 in the reference protocol
};

struct ThetaPRS {
  double mu = 0.0;      // Gumbel location of the block-maxima margin
  double sigma_g = 1.0; // Gumbel scale
  SmithParams beta;
};

// --- single-pair log likelihood kernels ------------------------------
//
// All three take Gumbel-scale observations and the pair coefficient a.

// Censored tail likelihood. mp carries the threshold u, the exceedance
// rate zeta and the GP margin (sigma_u, xi); values below u are censored
// at u. Returns -inf for rejected parameter probes.
double lt_pair_loglik(double yi, double yj, double a,
                      const MarginalParams& mp);

// Bivariate GP (conditional on at least one exceedance). Empty optional
// when both components are <= u: the pair carries no information and the
// caller skips it.
std::optional<double> rt_pair_loglik(double yi, double yj, double u, double a,
                                     const ThetaRT& theta);

// Pairwise density of block maxima on the Gumbel scale with location mu
// and scale sigma_g.
double prs_pair_loglik(double mi, double mj, double a, const ThetaPRS& theta);

// --- composite objective ----------------------------------------------

// Precomputed engine for one (dataset, weights, method, threshold). The
// dataset must be on the Gumbel scale and outlive the engine. Evaluation
// is deterministic for any thread count: per-pair subtotals are computed
// in row order and combined by a pairwise tree sum in pair order.
class CompositeLikelihood {
 public:
  // u and zeta are ignored for PRS.
  CompositeLikelihood(const Dataset& ds, const WeightScheme& ws, Method method,
                      double u = 0.0, double zeta = 0.0, int threads = 1);

  double eval(const ThetaRT& theta) const {
    return eval_rt_rows(theta, 0, rows_);
  }
  double eval(const ThetaLT& theta) const {
    return eval_lt_rows(theta, 0, rows_);
  }
  double eval(const ThetaPRS& theta) const {
    return eval_prs_rows(theta, 0, rows_);
  }

  // Row-window evaluations for the subsampled score covariance.
  double eval_rt_rows(const ThetaRT& theta, std::size_t t0, std::size_t t1) const;
  double eval_lt_rows(const ThetaLT& theta, std::size_t t0, std::size_t t1) const;
  double eval_prs_rows(const ThetaPRS& theta, std::size_t t0, std::size_t t1) const;

  Method method() const { return method_; }
  double threshold() const { return u_; }
  double zeta() const { return zeta_; }
  std::size_t rows() const { return rows_; }
  std::size_t weighted_pairs() const { return pairs_.size(); }
  std::size_t active_terms() const { return active_terms_; }
  const Dataset& dataset() const { return *ds_; }

 private:
  struct Pair {
    int i = 0, j = 0;
    double w = 1.0;
    double dist = 0.0;
    std::vector<int> rows;          // rows with >= 1 exceedance (all rows for PRS)
    std::vector<double> vals;       // interleaved (yi, yj) aligned with rows
    std::vector<unsigned char> above;  // 1: only i above, 2: only j, 3: both
  };

  // Transform cache for the censored likelihood; valid for one margin set
  // at a time (see eval_lt_rows).
  struct LtCache {
    bool valid = false;
    double sigma_u = 0.0, xi = 0.0;
    double u_tilde = 0.0;
    std::vector<std::vector<double>> per_pair;  // (z1, z2, logJ sum) triples
  };

  Method method_;
  const Dataset* ds_;
  WeightScheme ws_;
  double u_ = 0.0;
  double zeta_ = 0.0;
  int threads_ = 1;
  std::size_t rows_ = 0;
  std::size_t active_terms_ = 0;
  std::vector<Pair> pairs_;
  mutable LtCache lt_cache_;
};

// One-shot conveniences matching the engine (build + single evaluation).
double composite_loglik(const Dataset& ds, const WeightScheme& ws,
                        const ThetaRT& theta, double u);
double composite_loglik(const Dataset& ds, const WeightScheme& ws,
                        const ThetaLT& theta, double u, double zeta);
double composite_loglik(const Dataset& ds, const WeightScheme& ws,
                        const ThetaPRS& theta);

}  // namespace spex
