#include "spex/pairlik.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "spex/threads.hpp"

namespace spex {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogInvSqrt2Pi = -0.91893853320467274178;

double mahalanobis(double dx, double dy, const SmithParams& beta) {
  const double det = beta.det();
  const double q = (beta.sigma22 * dx * dx - 2.0 * beta.sigma12 * dx * dy +
                    beta.sigma11 * dy * dy) /
                   det;
  return std::sqrt(std::max(q, 0.0));
}

// Standardized exceedance coordinate and log Jacobian. Linear (y-u)/sigma
// at xi = 0; the GP-to-exponential map log1p(xi*(y-u)/sigma)/xi otherwise.
bool standardize(double y, double u, double sigma_u, double xi, double* x,
                 double* log_jac) {
  const double z = (y - u) / sigma_u;
  if (std::abs(xi) < kXiZeroEps) {
    *x = z;
    *log_jac = -std::log(sigma_u);
    return true;
  }
  const double arg = 1.0 + xi * z;
  if (!(arg > 0.0)) return false;
  *x = std::log1p(xi * z) / xi;
  *log_jac = -std::log(sigma_u * arg);
  return true;
}

// log(-V12) on Gumbel margins: log density of the bivariate GP before the
// normalizing constant. Evaluated in log space so that strong-dependence
// probes with well-separated values degrade to large negative numbers
// instead of underflowing.
inline double rt_log_kernel(double x1, double x2, double a, double ia,
                            double log_ia) {
  const double t = ia * (x2 - x1);
  const double w1 = 0.5 * a + t;
  const double w2 = 0.5 * a - t;
  const double f1 = 1.0 - w1 * ia;
  const double f2 = 1.0 - w2 * ia;
  const double e1 = -x1 - 0.5 * w1 * w1;
  const double e2 = -x2 - 0.5 * w2 * w2;
  double emax, s;
  if (e1 >= e2) {
    emax = e1;
    s = f1 + f2 * std::exp(e2 - e1);
  } else {
    emax = e2;
    s = f2 + f1 * std::exp(e1 - e2);
  }
  if (!(s > 0.0) || !std::isfinite(emax)) return kNegInf;
  return log_ia + kLogInvSqrt2Pi + emax + std::log(s);
}

// Censored-likelihood kernels on the Frechet-transformed scale.
inline double lt_both_kernel(double z1, double z2, double a,
                             double log_jac_sum) {
  const VKernel k = v_frechet(z1, z2, a);
  const double lead = k.v1 * k.v2 - k.v12;
  if (!(lead > 0.0)) return kNegInf;
  return std::log(lead) - k.v + log_jac_sum;
}

inline double lt_one_kernel(double z_above, double u_tilde, double a,
                            double log_jac) {
  const VKernel k = v_frechet(z_above, u_tilde, a);
  if (!(-k.v1 > 0.0)) return kNegInf;
  return std::log(-k.v1) - k.v + log_jac;
}

inline double prs_kernel(double z1, double z2, double a) {
  const VKernel k = v_gumbel(z1, z2, a);
  const double lead = k.v1 * k.v2 - k.v12;
  if (!(lead > 0.0)) return kNegInf;
  return std::log(lead) - k.v;
}

double finalize(double total) {
  return std::isfinite(total) || total == kNegInf ? total : kNegInf;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::RT: return "rt";
    case Method::LT: return "lt";
    default: return "prs";
  }
}

Method method_from_string(const std::string& s) {
  if (s == "rt" || s == "RT") return Method::RT;
  if (s == "lt" || s == "LT") return Method::LT;
  if (s == "prs" || s == "PRS") return Method::PRS;
  throw config_error("unknown method: " + s);
}

void WeightScheme::validate() const {
  if (p < 2 || weights.size() != p * p)
    throw domain_error("WeightScheme: bad shape");
  double positive = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    if ((*this)(i, i) != 0.0)
      throw domain_error("WeightScheme: diagonal must be zero");
    for (std::size_t j = 0; j < p; ++j) {
      const double w = (*this)(i, j);
      if (w < 0.0) throw domain_error("WeightScheme: negative weight");
      if (w != (*this)(j, i)) throw domain_error("WeightScheme: not symmetric");
      positive += w;
    }
  }
  if (positive <= 0.0)
    throw empty_likelihood_error("WeightScheme: all weights are zero");
}

WeightScheme make_weights(const std::vector<Point>& sites,
                          double quantile_level) {
  const std::size_t p = sites.size();
  if (p < 2) throw domain_error("make_weights: need at least 2 sites");
  if (!(quantile_level > 0.0 && quantile_level <= 1.0))
    throw domain_error("make_weights: quantile level outside (0,1]");
  std::vector<double> dists;
  dists.reserve(p * (p - 1) / 2);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      dists.push_back(std::sqrt(sq_dist(sites[i], sites[j])));
  WeightScheme ws;
  ws.quantile_level = quantile_level;
  ws.delta = empirical_quantile(dists, quantile_level);
  ws.p = p;
  ws.weights.assign(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const double d = std::sqrt(sq_dist(sites[i], sites[j]));
      if (d <= ws.delta) ws.weights[i * p + j] = ws.weights[j * p + i] = 1.0;
    }
  ws.validate();
  return ws;
}

// --- single-pair kernels ----------------------------------------------

double lt_pair_loglik(double yi, double yj, double a,
                      const MarginalParams& mp) {
  mp.validate();
  if (!(a >= 0.0)) throw domain_error("lt_pair_loglik: a must be >= 0");
  const bool ai = yi >= mp.u, aj = yj >= mp.u;
  const double u_tilde = threshold_frechet(mp);
  if (!ai && !aj) return log_cdf_frechet_pair(u_tilde, u_tilde, a);
  if (a < kSingularA)
    throw singular_model_error("lt_pair_loglik: singular pair (a = 0)");
  if (ai && aj) {
    const double zi = frechet_transform(yi, mp), zj = frechet_transform(yj, mp);
    const double lj = log_frechet_transform_jacobian(yi, mp) +
                      log_frechet_transform_jacobian(yj, mp);
    if (!std::isfinite(zi) || !std::isfinite(zj)) return kNegInf;
    if (a > kIndependentA)
      return log_mixed_density(zi, zj, a, Margin::Frechet) + lj;
    return finalize(lt_both_kernel(zi, zj, a, lj));
  }
  const double y_above = ai ? yi : yj;
  const double z = frechet_transform(y_above, mp);
  const double lj = log_frechet_transform_jacobian(y_above, mp);
  if (!std::isfinite(z)) return kNegInf;
  if (a > kIndependentA)  // independent: d/dz exp(-1/z - 1/u~)
    return -1.0 / z - 1.0 / u_tilde - 2.0 * std::log(z) + lj;
  return finalize(lt_one_kernel(z, u_tilde, a, lj));
}

std::optional<double> rt_pair_loglik(double yi, double yj, double u, double a,
                                     const ThetaRT& theta) {
  if (!(theta.sigma_u > 0.0)) throw domain_error("rt_pair_loglik: sigma_u <= 0");
  if (!(a >= 0.0)) throw domain_error("rt_pair_loglik: a must be >= 0");
  if (!(yi > u) && !(yj > u)) return std::nullopt;  // no exceedance
  if (a < kSingularA)
    throw singular_model_error("rt_pair_loglik: singular pair (a = 0)");
  double x1, x2, j1, j2;
  if (!standardize(yi, u, theta.sigma_u, theta.xi, &x1, &j1) ||
      !standardize(yj, u, theta.sigma_u, theta.xi, &x2, &j2))
    return kNegInf;
  const double ia = 1.0 / a;
  const double log_c = -std::log(2.0 * norm_cdf(0.5 * a));
  return finalize(log_c + rt_log_kernel(x1, x2, a, ia, std::log(ia)) + j1 + j2);
}

double prs_pair_loglik(double mi, double mj, double a, const ThetaPRS& theta) {
  if (!(theta.sigma_g > 0.0)) throw domain_error("prs_pair_loglik: sigma_g <= 0");
  if (!(a >= 0.0)) throw domain_error("prs_pair_loglik: a must be >= 0");
  if (a < kSingularA)
    throw singular_model_error("prs_pair_loglik: singular pair (a = 0)");
  const double z1 = (mi - theta.mu) / theta.sigma_g;
  const double z2 = (mj - theta.mu) / theta.sigma_g;
  const double lsg = 2.0 * std::log(theta.sigma_g);
  if (a > kIndependentA)
    return -z1 - z2 - std::exp(-z1) - std::exp(-z2) - lsg;
  return finalize(prs_kernel(z1, z2, a) - lsg);
}

// --- engine -------------------------------------------------------------

CompositeLikelihood::CompositeLikelihood(const Dataset& ds,
                                         const WeightScheme& ws, Method method,
                                         double u, double zeta, int threads)
    : method_(method), ds_(&ds), ws_(ws), u_(u), zeta_(zeta),
      threads_(threads) {
  ws_.validate();
  if (ws_.p != ds.cols())
    throw domain_error("CompositeLikelihood: weights/site count mismatch");
  if (ds.scale != Scale::Gumbel)
    throw domain_error(
        "CompositeLikelihood: dataset must be on the Gumbel scale "
        "(transform Frechet data with to_gumbel first)");
  if (method_ == Method::LT) {
    if (!(zeta_ > 0.0 && zeta_ < 1.0))
      throw domain_error("CompositeLikelihood: LT requires zeta in (0,1)");
  }
  rows_ = ds.rows();
  const std::size_t p = ds.cols();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const double w = ws_(i, j);
      if (w <= 0.0) continue;
      Pair pr;
      pr.i = static_cast<int>(i);
      pr.j = static_cast<int>(j);
      pr.w = w;
      pr.dist = std::sqrt(sq_dist(ds.sites[i], ds.sites[j]));
      if (pr.dist <= 0.0)
        throw singular_model_error(
            "CompositeLikelihood: weighted pair at zero distance");
      for (std::size_t t = 0; t < rows_; ++t) {
        const double yi = ds(t, i), yj = ds(t, j);
        bool keep;
        unsigned char flag = 3;
        if (method_ == Method::PRS) {
          keep = true;
        } else if (method_ == Method::RT) {
          keep = yi > u_ || yj > u_;
        } else {
          const bool ai = yi >= u_, aj = yj >= u_;
          keep = ai || aj;
          flag = static_cast<unsigned char>((ai ? 1 : 0) | (aj ? 2 : 0));
        }
        if (!keep) continue;
        pr.rows.push_back(static_cast<int>(t));
        pr.vals.push_back(yi);
        pr.vals.push_back(yj);
        pr.above.push_back(flag);
      }
      active_terms_ += pr.rows.size();
      pairs_.push_back(std::move(pr));
    }
  }
  if (pairs_.empty())
    throw empty_likelihood_error("CompositeLikelihood: no weighted pairs");
  if (method_ == Method::RT && active_terms_ == 0)
    throw empty_likelihood_error(
        "CompositeLikelihood: threshold above all data, no admissible pair");
}

namespace {

// rows are sorted; [lo, hi) portion lying inside the window [t0, t1)
std::pair<std::size_t, std::size_t> row_range(const std::vector<int>& rows,
                                              std::size_t t0, std::size_t t1) {
  const auto lo = std::lower_bound(rows.begin(), rows.end(),
                                   static_cast<int>(t0));
  const auto hi = std::lower_bound(lo, rows.end(), static_cast<int>(t1));
  return {static_cast<std::size_t>(lo - rows.begin()),
          static_cast<std::size_t>(hi - rows.begin())};
}

}  // namespace

double CompositeLikelihood::eval_rt_rows(const ThetaRT& theta, std::size_t t0,
                                         std::size_t t1) const {
  if (method_ != Method::RT)
    throw domain_error("CompositeLikelihood: engine not built for RT");
  if (!(theta.sigma_u > 0.0) || !theta.beta.positive_definite()) return kNegInf;
  const double inv_su = 1.0 / theta.sigma_u;
  const bool xi_zero = std::abs(theta.xi) < kXiZeroEps;
  const double log_su = std::log(theta.sigma_u);
  std::vector<double> partial(pairs_.size(), 0.0);
  parallel_for_index(pairs_.size(), threads_, [&](std::size_t q) {
    const Pair& pr = pairs_[q];
    const auto [lo, hi] = row_range(pr.rows, t0, t1);
    if (lo == hi) return;
    const double a = mahalanobis(ds_->sites[pr.i].x - ds_->sites[pr.j].x,
                                 ds_->sites[pr.i].y - ds_->sites[pr.j].y,
                                 theta.beta);
    if (a < kSingularA || a > kIndependentA) {
      // degenerate bivariate GP (perfect dependence or independence)
      partial[q] = kNegInf;
      return;
    }
    const double ia = 1.0 / a;
    const double log_ia = std::log(ia);
    const double log_c = -std::log(2.0 * norm_cdf(0.5 * a));
    double acc = 0.0;
    if (xi_zero) {
      for (std::size_t r = lo; r < hi; ++r) {
        const double x1 = (pr.vals[2 * r] - u_) * inv_su;
        const double x2 = (pr.vals[2 * r + 1] - u_) * inv_su;
        acc += rt_log_kernel(x1, x2, a, ia, log_ia);
      }
      acc += static_cast<double>(hi - lo) * (log_c - 2.0 * log_su);
    } else {
      for (std::size_t r = lo; r < hi; ++r) {
        double x1, x2, j1, j2;
        if (!standardize(pr.vals[2 * r], u_, theta.sigma_u, theta.xi, &x1,
                         &j1) ||
            !standardize(pr.vals[2 * r + 1], u_, theta.sigma_u, theta.xi, &x2,
                         &j2)) {
          acc = kNegInf;
          break;
        }
        acc += rt_log_kernel(x1, x2, a, ia, log_ia) + j1 + j2 + log_c;
      }
    }
    partial[q] = pr.w * acc;
  });
  return finalize(tree_sum(std::move(partial)));
}

double CompositeLikelihood::eval_lt_rows(const ThetaLT& theta, std::size_t t0,
                                         std::size_t t1) const {
  if (method_ != Method::LT)
    throw domain_error("CompositeLikelihood: engine not built for LT");
  if (!(theta.sigma_u > 0.0) || !theta.beta.positive_definite()) return kNegInf;

  MarginalParams mp{u_, theta.sigma_u, theta.xi, zeta_};
  if (!lt_cache_.valid || lt_cache_.sigma_u != theta.sigma_u ||
      lt_cache_.xi != theta.xi) {
    // Rebuild the transformed coordinates. Values below u enter as the
    // transformed threshold itself with no Jacobian contribution.
    lt_cache_.valid = false;
    lt_cache_.sigma_u = theta.sigma_u;
    lt_cache_.xi = theta.xi;
    lt_cache_.u_tilde = threshold_frechet(mp);
    lt_cache_.per_pair.assign(pairs_.size(), {});
    std::atomic<bool> ok{true};
    parallel_for_index(pairs_.size(), threads_, [&](std::size_t q) {
      const Pair& pr = pairs_[q];
      auto& buf = lt_cache_.per_pair[q];
      buf.resize(3 * pr.rows.size());
      for (std::size_t r = 0; r < pr.rows.size(); ++r) {
        const unsigned char flag = pr.above[r];
        double z1 = lt_cache_.u_tilde, z2 = lt_cache_.u_tilde, lj = 0.0;
        bool fine = true;
        try {
          if (flag & 1) {
            z1 = frechet_transform(pr.vals[2 * r], mp);
            lj += log_frechet_transform_jacobian(pr.vals[2 * r], mp);
          }
          if (flag & 2) {
            const double z = frechet_transform(pr.vals[2 * r + 1], mp);
            lj += log_frechet_transform_jacobian(pr.vals[2 * r + 1], mp);
            if (flag == 2)
              z1 = z;  // kernel differentiates the first coordinate
            else
              z2 = z;
          }
        } catch (const domain_error&) {
          fine = false;  // outside GP support for this probe
        }
        if (!fine || !std::isfinite(z1) || !std::isfinite(z2) ||
            !std::isfinite(lj)) {
          ok = false;
          return;
        }
        buf[3 * r] = z1;
        buf[3 * r + 1] = z2;
        buf[3 * r + 2] = lj;
      }
    });
    if (!ok) return kNegInf;
    lt_cache_.valid = true;
  }
  const double u_tilde = lt_cache_.u_tilde;

  std::vector<double> partial(pairs_.size(), 0.0);
  parallel_for_index(pairs_.size(), threads_, [&](std::size_t q) {
    const Pair& pr = pairs_[q];
    const double a = mahalanobis(ds_->sites[pr.i].x - ds_->sites[pr.j].x,
                                 ds_->sites[pr.i].y - ds_->sites[pr.j].y,
                                 theta.beta);
    if (a < kSingularA) {
      partial[q] = kNegInf;
      return;
    }
    const auto [lo, hi] = row_range(pr.rows, t0, t1);
    const double n_below =
        static_cast<double>(t1 - t0) - static_cast<double>(hi - lo);
    double acc = n_below * log_cdf_frechet_pair(u_tilde, u_tilde, a);
    const auto& buf = lt_cache_.per_pair[q];
    if (a > kIndependentA) {
      for (std::size_t r = lo; r < hi; ++r) {
        const double z1 = buf[3 * r], z2 = buf[3 * r + 1], lj = buf[3 * r + 2];
        if (pr.above[r] == 3)
          acc += -1.0 / z1 - 1.0 / z2 - 2.0 * (std::log(z1) + std::log(z2)) + lj;
        else
          acc += -1.0 / z1 - 1.0 / z2 - 2.0 * std::log(z1) + lj;
      }
    } else {
      for (std::size_t r = lo; r < hi; ++r) {
        const double z1 = buf[3 * r], z2 = buf[3 * r + 1], lj = buf[3 * r + 2];
        acc += (pr.above[r] == 3) ? lt_both_kernel(z1, z2, a, lj)
                                  : lt_one_kernel(z1, z2, a, lj);
      }
    }
    partial[q] = pr.w * acc;
  });
  return finalize(tree_sum(std::move(partial)));
}

double CompositeLikelihood::eval_prs_rows(const ThetaPRS& theta, std::size_t t0,
                                          std::size_t t1) const {
  if (method_ != Method::PRS)
    throw domain_error("CompositeLikelihood: engine not built for PRS");
  if (!(theta.sigma_g > 0.0) || !theta.beta.positive_definite()) return kNegInf;
  const double inv_sg = 1.0 / theta.sigma_g;
  const double lsg = 2.0 * std::log(theta.sigma_g);
  std::vector<double> partial(pairs_.size(), 0.0);
  parallel_for_index(pairs_.size(), threads_, [&](std::size_t q) {
    const Pair& pr = pairs_[q];
    const auto [lo, hi] = row_range(pr.rows, t0, t1);
    if (lo == hi) return;
    const double a = mahalanobis(ds_->sites[pr.i].x - ds_->sites[pr.j].x,
                                 ds_->sites[pr.i].y - ds_->sites[pr.j].y,
                                 theta.beta);
    if (a < kSingularA) {
      partial[q] = kNegInf;
      return;
    }
    double acc = 0.0;
    if (a > kIndependentA) {
      for (std::size_t r = lo; r < hi; ++r) {
        const double z1 = (pr.vals[2 * r] - theta.mu) * inv_sg;
        const double z2 = (pr.vals[2 * r + 1] - theta.mu) * inv_sg;
        acc += -z1 - z2 - std::exp(-z1) - std::exp(-z2) - lsg;
      }
    } else {
      for (std::size_t r = lo; r < hi; ++r) {
        const double z1 = (pr.vals[2 * r] - theta.mu) * inv_sg;
        const double z2 = (pr.vals[2 * r + 1] - theta.mu) * inv_sg;
        acc += prs_kernel(z1, z2, a) - lsg;
      }
    }
    partial[q] = pr.w * acc;
  });
  return finalize(tree_sum(std::move(partial)));
}

double composite_loglik(const Dataset& ds, const WeightScheme& ws,
                        const ThetaRT& theta, double u) {
  return CompositeLikelihood(ds, ws, Method::RT, u).eval(theta);
}

double composite_loglik(const Dataset& ds, const WeightScheme& ws,
                        const ThetaLT& theta, double u, double zeta) {
  return CompositeLikelihood(ds, ws, Method::LT, u, zeta).eval(theta);
}

double composite_loglik(const Dataset& ds, const WeightScheme& ws,
                        const ThetaPRS& theta) {
  return CompositeLikelihood(ds, ws, Method::PRS).eval(theta);
}

}  // namespace spex
