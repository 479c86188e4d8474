#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "spex/estimate.hpp"
#include "spex/rng.hpp"
#include "spex/simulate.hpp"

using namespace spex;

namespace {

Dataset small_study_data(std::uint64_t seed, int years = 6, int days = 60) {
  SimConfig cfg;
  cfg.sites = regular_grid(3, 1.0);
  cfg.params = SmithParams{200.0, 300.0, 150.0};
  cfg.years = years;
  cfg.days_per_year = days;
  cfg.seed = seed;
  return to_gumbel(simulate_dataset(cfg));
}

}  // namespace

TEST_CASE("pack/unpack of the dependence covariance") {
  SplitMix64 rng(33);
  for (int i = 0; i < 50; ++i) {
    const double l11 = rng.uniform(0.1, 20.0);
    const double l22 = rng.uniform(0.1, 20.0);
    const double l21 = rng.uniform(-10.0, 10.0);
    const SmithParams s{l11 * l11, l21 * l21 + l22 * l22, l11 * l21};
    const auto packed = pack_sigma(s);
    const SmithParams back = unpack_sigma(packed.data());
    CHECK(back.sigma11 == doctest::Approx(s.sigma11).epsilon(1e-12));
    CHECK(back.sigma22 == doctest::Approx(s.sigma22).epsilon(1e-12));
    CHECK(back.sigma12 == doctest::Approx(s.sigma12).epsilon(1e-12));
    CHECK(back.positive_definite());
  }
  SUBCASE("every packed point is positive definite") {
    for (int i = 0; i < 100; ++i) {
      const double p[3] = {rng.uniform(-4, 4), rng.uniform(-4, 4),
                           rng.uniform(-50, 50)};
      CHECK(unpack_sigma(p).positive_definite());
    }
  }
}

TEST_CASE("fd_hessian is exact on quadratics") {
  // f(x) = x'Ax/2 + b'x with known symmetric A
  const Matrix A{{4.0, 1.0, -0.5}, {1.0, 3.0, 0.2}, {-0.5, 0.2, 2.0}};
  auto f = [&](const std::vector<double>& x) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) acc += 0.5 * x[i] * A[i][j] * x[j];
    return acc + 0.7 * x[0] - 1.1 * x[2];
  };
  const Matrix H = fd_hessian(f, {0.3, -0.2, 1.0}, 1e-4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(H[i][j] == doctest::Approx(A[i][j]).epsilon(1e-6));
}

TEST_CASE("godambe_variance") {
  const Matrix I{{1, 0}, {0, 1}};
  const Matrix H2{{2, 0}, {0, 2}};
  SUBCASE("identity in, identity out") {
    const Matrix V = godambe_variance(I, I);
    CHECK(V[0][0] == doctest::Approx(1.0));
    CHECK(V[0][1] == doctest::Approx(0.0));
  }
  SUBCASE("scalar algebra") {
    const Matrix V = godambe_variance(H2, I);
    CHECK(V[0][0] == doctest::Approx(0.25));
    CHECK(V[1][1] == doctest::Approx(0.25));
  }
  SUBCASE("sandwich identity on random SPD pairs") {
    SplitMix64 rng(12);
    for (int rep = 0; rep < 20; ++rep) {
      // SPD via A = B'B + I
      auto spd = [&]() {
        Matrix b(3, std::vector<double>(3));
        for (auto& row : b)
          for (auto& v : row) v = rng.uniform(-1.0, 1.0);
        Matrix m(3, std::vector<double>(3, 0.0));
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) m[i][j] += b[k][i] * b[k][j];
            if (i == j) m[i][j] += 1.0;
          }
        return m;
      };
      const Matrix H = spd(), J = spd();
      const Matrix V = godambe_variance(H, J);
      // check H V H = J
      Matrix HV(3, std::vector<double>(3, 0.0)), HVH = HV;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) HV[i][j] += H[i][k] * V[k][j];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) HVH[i][j] += HV[i][k] * H[k][j];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          CHECK(HVH[i][j] == doctest::Approx(J[i][j]).epsilon(1e-9));
      CHECK(is_positive_definite(V));
    }
  }
  SUBCASE("singular H carries the condition number") {
    const Matrix S{{1, 1}, {1, 1}};
    CHECK_THROWS_WITH_AS(godambe_variance(S, I),
                         doctest::Contains("condition number"), domain_error);
  }
}

TEST_CASE("subsample config validation") {
  SubsampleConfig sc;
  sc.window_days = 91;
  sc.stride_days = 30;
  CHECK(sc.window_count(3640) == 119);
  CHECK_NOTHROW(sc.validate(3640));
  SUBCASE("single window rejected") {
    SubsampleConfig one;
    one.window_days = 100;
    one.stride_days = 100;
    CHECK_THROWS_AS(one.validate(100), domain_error);
  }
  SUBCASE("stride above window rejected") {
    SubsampleConfig bad;
    bad.window_days = 10;
    bad.stride_days = 11;
    CHECK_THROWS_AS(bad.validate(100), domain_error);
  }
}

TEST_CASE("fit_dataset end to end on a small simulated grid") {
  const Dataset ds = small_study_data(4242);
  FitOptions opts;
  opts.nm.max_iterations = 4000;

  SUBCASE("RT (reference protocol: unit margin scale)") {
    const FitResult fit = fit_dataset(ds, Method::RT, 0.9, 1.0, opts);
    CHECK(fit.converged);
    CHECK(fit.beta.positive_definite());
    CHECK(fit.sigma_u == 1.0);
    CHECK(fit.param_names ==
          std::vector<std::string>{"sigma11", "sigma22", "sigma12"});
    CHECK(std::isfinite(fit.cl_value));
    CHECK(fit.zeta == doctest::Approx(0.1).epsilon(0.05));

    SUBCASE("objective is invariant under the reparameterization roundtrip") {
      CompositeLikelihood cl(ds, make_weights(ds.sites, 1.0), Method::RT,
                             fit.threshold);
      ThetaRT at;
      at.sigma_u = fit.sigma_u;
      at.beta = fit.beta;
      const double direct = cl.eval(at);
      ThetaRT rounded = at;
      rounded.beta = unpack_sigma(pack_sigma(at.beta).data());
      CHECK(cl.eval(rounded) == doctest::Approx(direct).epsilon(1e-9));
      CHECK(direct == doctest::Approx(fit.cl_value).epsilon(1e-9));
    }
  }
  SUBCASE("RT with a free margin scale") {
    FitOptions free_su = opts;
    free_su.rt_fix_sigma_u_one = false;
    const FitResult fit = fit_dataset(ds, Method::RT, 0.9, 1.0, free_su);
    CHECK(fit.converged);
    CHECK(fit.sigma_u > 0.0);
    CHECK(fit.param_names ==
          std::vector<std::string>{"sigma_u", "sigma11", "sigma22", "sigma12"});
  }
  SUBCASE("LT two-step") {
    const FitResult fit = fit_dataset(ds, Method::LT, 0.9, 1.0, opts);
    CHECK(fit.converged);
    CHECK(fit.beta.positive_definite());
    CHECK(fit.param_names ==
          std::vector<std::string>{"sigma11", "sigma22", "sigma12"});
    CHECK(fit.xi > -0.5);
    CHECK(fit.xi < 1.0);
  }
  SUBCASE("PRS") {
    const FitResult fit = fit_dataset(ds, Method::PRS, 0.9, 1.0, opts);
    CHECK(fit.converged);
    CHECK(fit.param_names ==
          std::vector<std::string>{"mu", "sigma_g", "sigma11", "sigma22",
                                   "sigma12"});
    // yearly maxima of 60 daily unit-Frechet values: location ~ log 60
    CHECK(fit.mu == doctest::Approx(std::log(60.0)).epsilon(0.25));
  }
  SUBCASE("raw scale is refused") {
    Dataset raw = ds;
    raw.scale = Scale::Raw;
    CHECK_THROWS_AS(fit_dataset(raw, Method::RT, 0.9, 1.0, opts), domain_error);
  }
}

TEST_CASE("two-step LT plumbing") {
  const Dataset ds = small_study_data(999, 4, 50);
  const WeightScheme ws = make_weights(ds.sites, 1.0);
  const double u = empirical_quantile(ds.values, 0.9);
  double zeta = 0.0;
  for (double y : ds.values) zeta += y > u ? 1.0 : 0.0;
  zeta /= static_cast<double>(ds.values.size());

  SUBCASE("margins pinned at truth beat badly misspecified margins") {
    CompositeLikelihood cl(ds, ws, Method::LT, u, zeta);
    // step-2 maximization over beta only, margins held fixed
    auto step2_optimum = [&](double sigma_u, double xi) {
      auto objective = [&](const std::vector<double>& x) {
        ThetaLT t{sigma_u, xi, unpack_sigma(x.data())};
        const double v = cl.eval(t);
        return std::isfinite(v) ? -v : 1e300;
      };
      const auto r =
          nelder_mead(objective, pack_sigma(SmithParams{150, 250, 100}));
      return -r.value;
    };
    // Gumbel tail: unit scale, zero shape vs a badly wrong margin
    CHECK(step2_optimum(1.0, 0.0) > step2_optimum(5.0, 0.45));
  }
  SUBCASE("zero exceedances abort with a marginal-fit error") {
    CHECK_THROWS(fit_two_step_lt(ds, ws, 1e9, 0.5));
  }
}

TEST_CASE("subsample_J on a small fitted problem") {
  const Dataset ds = small_study_data(777);
  const WeightScheme ws = make_weights(ds.sites, 1.0);
  FitOptions opts;
  opts.rt_fix_sigma_u_one = false;  // exercise the full parameter vector
  const FitResult fit = fit_dataset(ds, Method::RT, 0.9, 1.0, opts);
  REQUIRE(fit.converged);
  CompositeLikelihood cl(ds, ws, Method::RT, fit.threshold);

  SubsampleConfig sc;
  sc.window_days = 40;
  sc.stride_days = 20;
  std::string diag;
  const Matrix J = subsample_J(cl, fit, sc, &diag);
  REQUIRE(J.size() == fit.theta_hat.size());
  SUBCASE("symmetric positive semidefinite") {
    for (std::size_t i = 0; i < J.size(); ++i)
      for (std::size_t j = 0; j < J.size(); ++j)
        CHECK(J[i][j] == doctest::Approx(J[j][i]));
    // PSD: v'Jv >= 0 for a few random directions
    SplitMix64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> v(J.size());
      for (auto& e : v) e = rng.uniform(-1, 1);
      double quad = 0.0;
      for (std::size_t i = 0; i < J.size(); ++i)
        for (std::size_t j = 0; j < J.size(); ++j) quad += v[i] * J[i][j] * v[j];
      CHECK(quad >= -1e-9);
    }
  }
  SUBCASE("H_T at the optimum is positive definite and FD-stable") {
    const Matrix H = hessian_cl(cl, fit);
    CHECK(is_positive_definite(H));
    auto f = [&](const std::vector<double>& th) {
      ThetaRT t;
      t.sigma_u = th[0];
      t.beta = SmithParams{th[1], th[2], th[3]};
      return cl.eval(t);
    };
    const Matrix H2 = fd_hessian(f, fit.theta_hat, 5e-5);
    double scale = 0.0;
    for (const auto& row : H)
      for (double v : row) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < H.size(); ++i)
      for (std::size_t j = 0; j < H.size(); ++j)
        CHECK(std::abs(-H2[i][j] - H[i][j]) <=
              1e-3 * (std::abs(H[i][j]) + 1e-2 * scale));
  }
}

