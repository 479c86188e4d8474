#include "spex/margins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "spex/optim.hpp"

namespace spex {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double empirical_quantile(std::span<const double> data, double level) {
  if (data.empty()) throw domain_error("empirical_quantile: empty data");
  if (!(level > 0.0 && level <= 1.0))
    throw domain_error("empirical_quantile: level outside (0,1]");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * level;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

// log of (1 + xi*(y-u)/sigma)^{-1/xi}, the GP survival of the excess.
double log_gp_survival(double y, const MarginalParams& mp) {
  const double z = (y - mp.u) / mp.sigma_u;
  if (std::abs(mp.xi) < kXiZeroEps) return -z;
  const double arg = 1.0 + mp.xi * z;
  if (!(arg > 0.0))
    throw domain_error("gp_tail_cdf: point outside GP support");
  return -std::log1p(mp.xi * z) / mp.xi;
}

}  // namespace

double gp_tail_cdf(double y, const MarginalParams& mp) {
  mp.validate();
  if (y < mp.u) throw domain_error("gp_tail_cdf: y below threshold");
  return 1.0 - mp.zeta * std::exp(log_gp_survival(y, mp));
}

double frechet_transform(double y, const MarginalParams& mp) {
  mp.validate();
  if (y < mp.u) throw domain_error("frechet_transform: y below threshold");
  const double g = std::exp(log_gp_survival(y, mp));
  if (g <= 0.0) return kInf;
  const double log_t = std::log1p(-mp.zeta * g);
  return -1.0 / log_t;
}

double log_frechet_transform_jacobian(double y, const MarginalParams& mp) {
  mp.validate();
  if (y < mp.u)
    throw domain_error("frechet_transform jacobian: y below threshold");
  const double z = (y - mp.u) / mp.sigma_u;
  double log_tprime;  // log d/dy of the tail CDF
  if (std::abs(mp.xi) < kXiZeroEps) {
    log_tprime = std::log(mp.zeta) - std::log(mp.sigma_u) - z;
  } else {
    const double arg = 1.0 + mp.xi * z;
    if (!(arg > 0.0))
      throw domain_error("frechet_transform jacobian: outside GP support");
    log_tprime = std::log(mp.zeta) - std::log(mp.sigma_u) -
                 (1.0 / mp.xi + 1.0) * std::log1p(mp.xi * z);
  }
  const double g = std::exp(log_gp_survival(y, mp));
  if (g <= 0.0) return -kInf;
  const double log_t = std::log1p(-mp.zeta * g);  // < 0
  return -2.0 * std::log(-log_t) + log_tprime - log_t;
}

double threshold_frechet(const MarginalParams& mp) {
  mp.validate();
  return -1.0 / std::log1p(-mp.zeta);
}

GpFit fit_marginal_gp(std::span<const double> excesses) {
  if (excesses.size() < 10)
    throw domain_error("fit_marginal_gp: need at least 10 excesses");
  const double n = static_cast<double>(excesses.size());
  double xmax = -kInf, xmin = kInf, sum = 0.0;
  for (double x : excesses) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw domain_error("fit_marginal_gp: excesses must be finite and >= 0");
    xmax = std::max(xmax, x);
    xmin = std::min(xmin, x);
    sum += x;
  }
  if (xmax - xmin <= 0.0)
    throw domain_error("fit_marginal_gp: degenerate sample (all excesses equal)");

  auto unpack = [](const std::vector<double>& p) {
    const double sigma = std::exp(p[0]);
    const double xi = -0.5 + 1.5 / (1.0 + std::exp(-p[1]));
    return std::pair{sigma, xi};
  };
  auto nll = [&](const std::vector<double>& p) {
    const auto [sigma, xi] = unpack(p);
    double acc = n * std::log(sigma);
    if (std::abs(xi) < kXiZeroEps) {
      acc += sum / sigma;
      return acc;
    }
    if (xi < 0.0 && xmax >= -sigma / xi) return kInf;
    const double c = 1.0 + 1.0 / xi;
    for (double x : excesses) acc += c * std::log1p(xi * x / sigma);
    return std::isfinite(acc) ? acc : kInf;
  };

  // exponential MLE for scale, xi = 0 (logistic midpoint at -log 2)
  std::vector<double> init{std::log(sum / n), -std::numbers::ln2};
  const NelderMeadResult r = nelder_mead(nll, init);
  const auto [sigma, xi] = unpack(r.x);
  if (!r.converged || !std::isfinite(r.value)) {
    std::ostringstream diag;
    diag << "iterations=" << r.iterations << " evaluations=" << r.evaluations
         << " nll=" << r.value << " sigma=" << sigma << " xi=" << xi;
    throw nonconvergence_error("fit_marginal_gp: optimizer did not converge",
                               diag.str());
  }
  return GpFit{sigma, xi, -r.value, r.iterations, true};
}

}  // namespace spex
