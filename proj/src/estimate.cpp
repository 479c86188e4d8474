#include "spex/estimate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "spex/margins.hpp"
#include "spex/normal.hpp"

namespace spex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// xi restricted to (-0.5, 1) for likelihood regularity
double xi_from_raw(double t) { return -0.5 + 1.5 * sigmoid(t); }
double raw_from_xi(double xi) { return logit((xi + 0.5) / 1.5); }

Eigen::MatrixXd to_eigen(const Matrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m[i][j];
  return out;
}

Matrix from_eigen(const Eigen::MatrixXd& m) {
  Matrix out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

struct Moments {
  double mean = 0.0, sd = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
  return m;
}

}  // namespace

std::vector<double> pack_sigma(const SmithParams& s) {
  s.validate();
  const double l11 = std::sqrt(s.sigma11);
  const double l21 = s.sigma12 / l11;
  const double l22 = std::sqrt(s.sigma22 - l21 * l21);
  return {std::log(l11), std::log(l22), l21};
}

SmithParams unpack_sigma(const double* packed) {
  const double l11 = std::exp(packed[0]);
  const double l22 = std::exp(packed[1]);
  const double l21 = packed[2];
  return SmithParams{l11 * l11, l21 * l21 + l22 * l22, l11 * l21};
}

ThetaInit default_init(const Dataset& ds, const WeightScheme& ws,
                       Method method, double u, double zeta) {
  ThetaInit init;

  // median lag among weighted pairs
  std::vector<double> dists;
  for (std::size_t i = 0; i < ws.p; ++i)
    for (std::size_t j = i + 1; j < ws.p; ++j)
      if (ws(i, j) > 0.0)
        dists.push_back(std::sqrt(sq_dist(ds.sites[i], ds.sites[j])));
  const double med = empirical_quantile(dists, 0.5);

  // empirical extremal coefficient at (about) the median lag: with common
  // marginal level q, Pr(both below) = q^v
  const double q_level = 0.9;
  const double z_star = empirical_quantile(ds.values, q_level);
  double joint = 0.0, marg = 0.0;
  std::size_t n_pairs = 0, n_terms = 0;
  for (std::size_t i = 0; i < ws.p; ++i) {
    for (std::size_t j = i + 1; j < ws.p; ++j) {
      if (ws(i, j) <= 0.0) continue;
      const double d = std::sqrt(sq_dist(ds.sites[i], ds.sites[j]));
      if (std::abs(d - med) > 0.05 * med) continue;
      ++n_pairs;
      for (std::size_t t = 0; t < ds.rows(); ++t) {
        joint += (ds(t, i) <= z_star && ds(t, j) <= z_star) ? 1.0 : 0.0;
        marg += (ds(t, i) <= z_star) ? 1.0 : 0.0;
        ++n_terms;
      }
    }
  }
  double v_hat = 1.5;
  if (n_pairs > 0 && joint > 0.0 && marg > 0.0) {
    const double pj = joint / static_cast<double>(n_terms);
    const double pm = marg / static_cast<double>(n_terms);
    if (pj < 1.0 && pm < 1.0)
      v_hat = std::clamp(std::log(pj) / std::log(pm), 1.01, 1.99);
  }
  const double c = med / (2.0 * norm_quantile(0.5 * v_hat));
  init.beta = SmithParams{c * c, c * c, 0.0};

  if (method == Method::PRS) {
    const Moments m = moments(ds.values);
    const double sg =
        std::max(m.sd * std::sqrt(6.0) / std::numbers::pi, 1e-3);
    init.sigma_g = sg;
    init.mu = m.mean - 0.57721566490153286 * sg;
  } else {
    std::vector<double> excesses;
    for (double y : ds.values)
      if (y > u) excesses.push_back(y - u);
    const Moments m = moments(excesses);
    init.sigma_u = m.sd > 0.0 ? m.sd : 1.0;
    init.xi = 0.0;
    (void)zeta;
  }
  return init;
}

namespace {

// Packed coordinates <-> typed parameters, per method and options.
struct Parameterization {
  Method method;
  bool free_xi = false;       // RT only
  bool fixed_scale = false;   // RT: sigma_u held at sigma_u0
  bool fit_margins = false;   // PRS
  bool fixed_margins = false; // LT two-step: sigma_u, xi held fixed
  double sigma_u0 = 1.0, xi0 = 0.0;

  std::vector<double> pack(const ThetaInit& init) const {
    std::vector<double> x;
    if (method == Method::RT) {
      if (!fixed_scale) x.push_back(std::log(*init.sigma_u));
      if (free_xi) x.push_back(raw_from_xi(*init.xi));
    } else if (method == Method::LT) {
      if (!fixed_margins) {
        x.push_back(std::log(*init.sigma_u));
        x.push_back(raw_from_xi(*init.xi));
      }
    } else if (fit_margins) {
      x.push_back(*init.mu);
      x.push_back(std::log(*init.sigma_g));
    }
    const auto chol = pack_sigma(*init.beta);
    x.insert(x.end(), chol.begin(), chol.end());
    return x;
  }

  ThetaRT rt(const std::vector<double>& x) const {
    ThetaRT t;
    std::size_t k = 0;
    t.sigma_u = fixed_scale ? sigma_u0 : std::exp(x[k++]);
    if (free_xi) t.xi = xi_from_raw(x[k++]);
    t.beta = unpack_sigma(&x[k]);
    return t;
  }
  ThetaLT lt(const std::vector<double>& x) const {
    ThetaLT t;
    std::size_t k = 0;
    if (fixed_margins) {
      t.sigma_u = sigma_u0;
      t.xi = xi0;
    } else {
      t.sigma_u = std::exp(x[0]);
      t.xi = xi_from_raw(x[1]);
      k = 2;
    }
    t.beta = unpack_sigma(&x[k]);
    return t;
  }
  ThetaPRS prs(const std::vector<double>& x) const {
    ThetaPRS t;
    std::size_t k = 0;
    if (fit_margins) {
      t.mu = x[0];
      t.sigma_g = std::exp(x[1]);
      k = 2;
    }
    t.beta = unpack_sigma(&x[k]);
    return t;
  }

  std::vector<std::string> natural_names() const {
    std::vector<std::string> n;
    if (method == Method::RT) {
      if (!fixed_scale) n.push_back("sigma_u");
      if (free_xi) n.push_back("xi");
    } else if (method == Method::LT) {
      if (!fixed_margins) n = {"sigma_u", "xi"};
    } else if (fit_margins) {
      n = {"mu", "sigma_g"};
    }
    n.insert(n.end(), {"sigma11", "sigma22", "sigma12"});
    return n;
  }
};

void fill_natural(FitResult* fit) {
  fit->theta_hat.clear();
  for (const auto& name : fit->param_names) {
    if (name == "sigma_u") fit->theta_hat.push_back(fit->sigma_u);
    else if (name == "xi") fit->theta_hat.push_back(fit->xi);
    else if (name == "mu") fit->theta_hat.push_back(fit->mu);
    else if (name == "sigma_g") fit->theta_hat.push_back(fit->sigma_g);
    else if (name == "sigma11") fit->theta_hat.push_back(fit->beta.sigma11);
    else if (name == "sigma22") fit->theta_hat.push_back(fit->beta.sigma22);
    else if (name == "sigma12") fit->theta_hat.push_back(fit->beta.sigma12);
  }
}

// Evaluate cl at a natural-coordinate point (row window [t0, t1)).
double eval_natural(const CompositeLikelihood& cl, const FitResult& fit,
                    const std::vector<double>& theta, std::size_t t0,
                    std::size_t t1) {
  std::size_t k = 0;
  auto take = [&](const std::string& name, double fallback) {
    if (k < fit.param_names.size() && fit.param_names[k] == name)
      return theta[k++];
    return fallback;
  };
  switch (fit.method) {
    case Method::RT: {
      ThetaRT t;
      t.sigma_u = take("sigma_u", fit.sigma_u);
      t.xi = take("xi", fit.xi);
      t.beta = SmithParams{theta[k], theta[k + 1], theta[k + 2]};
      return cl.eval_rt_rows(t, t0, t1);
    }
    case Method::LT: {
      ThetaLT t;
      t.sigma_u = take("sigma_u", fit.sigma_u);
      t.xi = take("xi", fit.xi);
      t.beta = SmithParams{theta[k], theta[k + 1], theta[k + 2]};
      return cl.eval_lt_rows(t, t0, t1);
    }
    default: {
      ThetaPRS t;
      t.mu = take("mu", fit.mu);
      t.sigma_g = take("sigma_g", fit.sigma_g);
      t.beta = SmithParams{theta[k], theta[k + 1], theta[k + 2]};
      return cl.eval_prs_rows(t, t0, t1);
    }
  }
}

ThetaInit resolve_init(const Dataset& ds, const WeightScheme& ws,
                       Method method, double u, double zeta,
                       const ThetaInit& user) {
  ThetaInit init = default_init(ds, ws, method, u, zeta);
  if (user.beta) init.beta = user.beta;
  if (user.sigma_u) init.sigma_u = user.sigma_u;
  if (user.xi) init.xi = user.xi;
  if (user.mu) init.mu = user.mu;
  if (user.sigma_g) init.sigma_g = user.sigma_g;
  if (!init.sigma_u) init.sigma_u = 1.0;
  if (!init.xi) init.xi = 0.0;
  if (!init.mu) init.mu = 0.0;
  if (!init.sigma_g) init.sigma_g = 1.0;
  return init;
}

FitResult run_fit(const CompositeLikelihood& cl, const Parameterization& par,
                  const ThetaInit& init, const FitOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  FitResult fit;
  fit.method = par.method;
  fit.threshold = cl.threshold();
  fit.zeta = cl.zeta();
  fit.param_names = par.natural_names();

  auto objective = [&](const std::vector<double>& x) {
    double v;
    switch (par.method) {
      case Method::RT: v = cl.eval(par.rt(x)); break;
      case Method::LT: v = cl.eval(par.lt(x)); break;
      default: v = cl.eval(par.prs(x)); break;
    }
    return std::isfinite(v) ? -v : kInf;
  };

  const NelderMeadResult r = nelder_mead(objective, par.pack(init), opts.nm);

  switch (par.method) {
    case Method::RT: {
      const ThetaRT t = par.rt(r.x);
      fit.sigma_u = t.sigma_u;
      fit.xi = t.xi;
      fit.beta = t.beta;
      break;
    }
    case Method::LT: {
      const ThetaLT t = par.lt(r.x);
      fit.sigma_u = t.sigma_u;
      fit.xi = t.xi;
      fit.beta = t.beta;
      break;
    }
    default: {
      const ThetaPRS t = par.prs(r.x);
      fit.mu = t.mu;
      fit.sigma_g = t.sigma_g;
      fit.beta = t.beta;
      break;
    }
  }
  fill_natural(&fit);
  fit.cl_value = -r.value;
  fit.converged = r.converged && std::isfinite(r.value);
  fit.iterations = r.iterations;
  fit.evaluations = r.evaluations;
  if (!fit.converged) {
    std::ostringstream d;
    d << "optimizer did not converge (iterations=" << r.iterations
      << ", evaluations=" << r.evaluations << ", -cl=" << r.value << ")";
    fit.diagnostics = d.str();
  }
  fit.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return fit;
}

}  // namespace

FitResult maximize_cl(const Dataset& ds, const WeightScheme& ws, Method method,
                      double u, double zeta, const FitOptions& opts,
                      const ThetaInit& init) {
  CompositeLikelihood cl(ds, ws, method, u, zeta, opts.threads);
  Parameterization par;
  par.method = method;
  par.free_xi = method == Method::RT && !opts.rt_fix_xi_zero;
  par.fixed_scale = method == Method::RT && opts.rt_fix_sigma_u_one;
  par.sigma_u0 = 1.0;
  par.fit_margins = method == Method::PRS && opts.prs_fit_margins;
  par.fixed_margins = false;
  const ThetaInit full = resolve_init(ds, ws, method, u, zeta, init);
  return run_fit(cl, par, full, opts);
}

FitResult fit_two_step_lt(const Dataset& ds, const WeightScheme& ws, double u,
                          double zeta, const FitOptions& opts,
                          const ThetaInit& init) {
  std::vector<double> excesses;
  for (double y : ds.values)
    if (y > u) excesses.push_back(y - u);
  GpFit gp;
  try {
    gp = fit_marginal_gp(excesses);
  } catch (const nonconvergence_error& e) {
    throw nonconvergence_error(
        std::string("fit_two_step_lt: marginal GP step failed: ") + e.what(),
        e.diagnostics);
  } catch (const domain_error& e) {
    throw domain_error(std::string("fit_two_step_lt: marginal GP step: ") +
                       e.what());
  }

  CompositeLikelihood cl(ds, ws, Method::LT, u, zeta, opts.threads);
  Parameterization par;
  par.method = Method::LT;
  par.fixed_margins = true;
  par.sigma_u0 = gp.sigma_u;
  par.xi0 = gp.xi;
  ThetaInit full = resolve_init(ds, ws, Method::LT, u, zeta, init);
  full.sigma_u = gp.sigma_u;
  full.xi = gp.xi;
  FitResult fit = run_fit(cl, par, full, opts);
  fit.sigma_u = gp.sigma_u;
  fit.xi = gp.xi;
  return fit;
}

Matrix fd_hessian(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& x, double rel_step) {
  const std::size_t d = x.size();
  std::vector<double> h(d);
  for (std::size_t k = 0; k < d; ++k) h[k] = rel_step * (1.0 + std::abs(x[k]));
  const double f0 = f(x);
  Matrix H(d, std::vector<double>(d, 0.0));
  std::vector<double> p(x);
  for (std::size_t k = 0; k < d; ++k) {
    p[k] = x[k] + h[k];
    const double fp = f(p);
    p[k] = x[k] - h[k];
    const double fm = f(p);
    p[k] = x[k];
    H[k][k] = (fp - 2.0 * f0 + fm) / (h[k] * h[k]);
    for (std::size_t l = k + 1; l < d; ++l) {
      p[k] = x[k] + h[k];
      p[l] = x[l] + h[l];
      const double fpp = f(p);
      p[l] = x[l] - h[l];
      const double fpm = f(p);
      p[k] = x[k] - h[k];
      const double fmm = f(p);
      p[l] = x[l] + h[l];
      const double fmp = f(p);
      p[k] = x[k];
      p[l] = x[l];
      H[k][l] = H[l][k] = (fpp - fpm - fmp + fmm) / (4.0 * h[k] * h[l]);
    }
  }
  return H;
}

std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double rel_step) {
  const std::size_t d = x.size();
  std::vector<double> g(d), p(x);
  for (std::size_t k = 0; k < d; ++k) {
    const double h = rel_step * (1.0 + std::abs(x[k]));
    p[k] = x[k] + h;
    const double fp = f(p);
    p[k] = x[k] - h;
    const double fm = f(p);
    p[k] = x[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix hessian_cl(const CompositeLikelihood& cl, const FitResult& fit) {
  auto f = [&](const std::vector<double>& th) {
    return eval_natural(cl, fit, th, 0, cl.rows());
  };
  Matrix H = fd_hessian(f, fit.theta_hat, 1e-4);
  const std::size_t d = H.size();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const double s = -0.5 * (H[i][j] + H[j][i]);
      H[i][j] = s;
      H[j][i] = s;
    }
  return H;
}

Matrix subsample_J(const CompositeLikelihood& cl, const FitResult& fit,
                   const SubsampleConfig& sc, std::string* diagnostics) {
  const std::size_t T = cl.rows();
  sc.validate(T);
  const int M = sc.window_count(T);
  const std::size_t d = fit.theta_hat.size();
  Matrix J(d, std::vector<double>(d, 0.0));
  int zero_windows = 0;
  for (int j = 0; j < M; ++j) {
    const std::size_t t0 = static_cast<std::size_t>(j) * sc.stride_days;
    const std::size_t t1 = t0 + sc.window_days;
    auto f = [&](const std::vector<double>& th) {
      return eval_natural(cl, fit, th, t0, t1);
    };
    const std::vector<double> s = fd_gradient(f, fit.theta_hat, 1e-5);
    bool all_zero = true;
    for (double v : s) all_zero = all_zero && v == 0.0;
    if (all_zero) ++zero_windows;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        J[a][b] += s[a] * s[b] / static_cast<double>(sc.window_days);
  }
  const double scale = static_cast<double>(T) / static_cast<double>(M);
  for (auto& row : J)
    for (double& v : row) v *= scale;
  if (diagnostics && zero_windows > 0) {
    std::ostringstream os;
    os << zero_windows << " of " << M << " windows had identically zero score";
    *diagnostics = os.str();
  }
  return J;
}

Matrix godambe_variance(const Matrix& H, const Matrix& J) {
  if (H.empty() || H.size() != J.size())
    throw domain_error("godambe_variance: dimension mismatch");
  const Eigen::MatrixXd h = to_eigen(H);
  const Eigen::MatrixXd j = to_eigen(J);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const auto& ev = es.eigenvalues();
  const double amax = ev.cwiseAbs().maxCoeff();
  const double amin = ev.cwiseAbs().minCoeff();
  if (!(amin > 0.0) || amax / amin > 1e12) {
    std::ostringstream os;
    os << "godambe_variance: H_T numerically singular (condition number "
       << (amin > 0.0 ? amax / amin : kInf) << ")";
    throw domain_error(os.str());
  }
  const Eigen::MatrixXd hinv = h.inverse();
  Eigen::MatrixXd v = hinv * j * hinv;
  v = 0.5 * (v + v.transpose()).eval();
  return from_eigen(v);
}

bool is_positive_definite(const Matrix& m) {
  if (m.empty()) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
  return es.eigenvalues().minCoeff() > 0.0;
}

FitResult fit_dataset(const Dataset& gumbel_ds, Method method,
                      double threshold_quantile, double weights_quantile,
                      const FitOptions& opts) {
  if (gumbel_ds.scale != Scale::Gumbel)
    throw domain_error(
        "fit_dataset: dataset must be on the Gumbel scale; transform "
        "Frechet-scale data with to_gumbel first");
  const double u = empirical_quantile(gumbel_ds.values, threshold_quantile);
  double n_over = 0.0;
  for (double y : gumbel_ds.values) n_over += y > u ? 1.0 : 0.0;
  const double zeta = n_over / static_cast<double>(gumbel_ds.values.size());
  const WeightScheme ws = make_weights(gumbel_ds.sites, weights_quantile);

  if (method == Method::PRS) {
    const Dataset block = yearly_maxima(gumbel_ds);
    FitResult fit = maximize_cl(block, ws, Method::PRS, 0.0, 0.0, opts);
    fit.threshold = u;
    fit.zeta = zeta;
    return fit;
  }
  if (method == Method::LT && opts.lt_two_step)
    return fit_two_step_lt(gumbel_ds, ws, u, zeta, opts);
  return maximize_cl(gumbel_ds, ws, method, u, zeta, opts);
}

}  // namespace spex
