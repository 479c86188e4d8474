#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "spex/rng.hpp"
#include "spex/smith.hpp"

using namespace spex;

namespace {
const SmithParams kPaperSigma{200.0, 300.0, 150.0};
}

TEST_CASE("pair_coefficient") {
  SUBCASE("zero separation") {
    CHECK(pair_coefficient({3.2, -1.0}, {3.2, -1.0}, kPaperSigma) == 0.0);
  }
  SUBCASE("unit lag under the study covariance") {
    // 2x2 inverse by hand: h' Sigma^{-1} h = 300/37500 for h = (1,0)
    const double a = pair_coefficient({0, 0}, {1, 0}, kPaperSigma);
    CHECK(a == doctest::Approx(std::sqrt(300.0 / 37500.0)).epsilon(1e-13));
    CHECK(a == doctest::Approx(0.0894427).epsilon(1e-6));
  }
  SUBCASE("identity metric") {
    CHECK(pair_coefficient({0, 0}, {0, 1}, SmithParams{1, 1, 0}) ==
          doctest::Approx(1.0));
  }
  SUBCASE("symmetry") {
    const Point si{0.3, 2.0}, sj{-1.0, 0.7};
    CHECK(pair_coefficient(si, sj, kPaperSigma) ==
          pair_coefficient(sj, si, kPaperSigma));
  }
  SUBCASE("non-positive-definite covariance rejected") {
    CHECK_THROWS_AS(pair_coefficient({0, 0}, {1, 0}, SmithParams{1, 1, 2}),
                    domain_error);
    CHECK_THROWS_AS(pair_coefficient({0, 0}, {1, 0}, SmithParams{-1, 1, 0}),
                    domain_error);
  }
}

TEST_CASE("cdf_frechet_pair") {
  SUBCASE("independence limit") {
    const double expect = std::exp(-1.0 / 1.5 - 1.0 / 0.8);
    CHECK(cdf_frechet_pair(1.5, 0.8, 50.0) == doctest::Approx(expect));
    CHECK(cdf_frechet_pair(1.5, 0.8, 37.9) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("perfect dependence limit") {
    CHECK(cdf_frechet_pair(1.0, 2.0, 0.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(cdf_frechet_pair(1.0, 2.0, 1e-9) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  SUBCASE("paper-scale value at equal unit coordinates") {
    const double a = 0.0894427;
    const double expect = std::exp(-2.0 * oracle::phi_cdf(a / 2.0));
    CHECK(cdf_frechet_pair(1.0, 1.0, a) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(cdf_frechet_pair(1.0, 1.0, a) == doctest::Approx(0.35499).epsilon(1e-4));
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(cdf_frechet_pair(0.0, 1.0, 0.5), domain_error);
    CHECK_THROWS_AS(cdf_frechet_pair(1.0, -2.0, 0.5), domain_error);
    CHECK_THROWS_AS(cdf_frechet_pair(1.0, 2.0, -0.1), domain_error);
  }
  SUBCASE("value in (0,1) and nondecreasing in each argument") {
    double prev = 0.0;
    for (double z = 0.25; z < 8.0; z += 0.25) {
      const double g = cdf_frechet_pair(z, 1.3, 0.7);
      CHECK(g > 0.0);
      CHECK(g < 1.0);
      CHECK(g >= prev);
      prev = g;
    }
  }
}

TEST_CASE("cdf_gumbel_pair") {
  SUBCASE("equals the Frechet CDF after the change of margins") {
    SplitMix64 rng(2024);
    for (int i = 0; i < 50; ++i) {
      const double z1 = rng.uniform(-2.0, 4.0), z2 = rng.uniform(-2.0, 4.0);
      const double a = rng.uniform(0.05, 6.0);
      CHECK(cdf_gumbel_pair(z1, z2, a) ==
            doctest::Approx(cdf_frechet_pair(std::exp(z1), std::exp(z2), a))
                .epsilon(1e-12));
    }
  }
  SUBCASE("perfect dependence gives the Gumbel margin") {
    for (double z : {-1.0, 0.0, 2.0})
      CHECK(cdf_gumbel_pair(z, z, 0.0) ==
            doctest::Approx(std::exp(-std::exp(-z))));
  }
  SUBCASE("marginal consistency as one coordinate grows") {
    CHECK(cdf_gumbel_pair(40.0, 0.3, 0.8) ==
          doctest::Approx(std::exp(-std::exp(-0.3))).epsilon(1e-12));
  }
  SUBCASE("consistency with the Frechet example at z = 0") {
    CHECK(cdf_gumbel_pair(0.0, 0.0, 0.0894427) ==
          doctest::Approx(0.35499).epsilon(1e-4));
  }
}

TEST_CASE("partials_pair analytic derivatives match finite differences") {
  SUBCASE("reference point") {
    for (Margin m : {Margin::Frechet, Margin::Gumbel}) {
      const double z1 = 1.3, z2 = 0.7, a = 0.5;
      auto cdf = [&](double x, double y) {
        return m == Margin::Frechet ? cdf_frechet_pair(x, y, a)
                                    : cdf_gumbel_pair(x, y, a);
      };
      const PairPartials pp = partials_pair(z1, z2, a, m);
      CHECK(pp.cdf == doctest::Approx(cdf(z1, z2)).epsilon(1e-12));
      CHECK(pp.d1 ==
            doctest::Approx(oracle::fd1([&](double x) { return cdf(x, z2); }, z1))
                .epsilon(1e-6));
      CHECK(pp.d2 ==
            doctest::Approx(oracle::fd1([&](double y) { return cdf(z1, y); }, z2))
                .epsilon(1e-6));
      CHECK(pp.d12 == doctest::Approx(oracle::fd_cross(cdf, z1, z2)).epsilon(1e-6));
    }
  }
  SUBCASE("100 random interior points, both margins") {
    SplitMix64 rng(77);
    // floored relative error: the oracle resolves nothing once the true
    // derivative drops below the CDF's representational noise
    auto rel = [](double analytic, double fd) {
      return std::abs(analytic - fd) /
             std::max(std::abs(fd), 1e-9 * (1.0 + std::abs(analytic)));
    };
    for (int i = 0; i < 100; ++i) {
      const double a = rng.uniform(0.1, 4.0);
      {
        const double z1 = rng.uniform(0.3, 5.0), z2 = rng.uniform(0.3, 5.0);
        auto cdf = [&](double x, double y) { return cdf_frechet_pair(x, y, a); };
        const PairPartials pp = partials_pair(z1, z2, a, Margin::Frechet);
        CHECK(rel(pp.d1, oracle::fd1([&](double x) { return cdf(x, z2); }, z1)) <
              1e-5);
        CHECK(rel(pp.d12, oracle::fd_cross(cdf, z1, z2)) < 1e-5);
      }
      {
        const double z1 = rng.uniform(-1.5, 3.0), z2 = rng.uniform(-1.5, 3.0);
        auto cdf = [&](double x, double y) { return cdf_gumbel_pair(x, y, a); };
        const PairPartials pp = partials_pair(z1, z2, a, Margin::Gumbel);
        CHECK(rel(pp.d1, oracle::fd1([&](double x) { return cdf(x, z2); }, z1)) <
              1e-5);
        CHECK(rel(pp.d12, oracle::fd_cross(cdf, z1, z2)) < 1e-5);
      }
    }
  }
  SUBCASE("independence factorization at large a") {
    const double z1 = 1.7, z2 = 0.9;
    const PairPartials pp = partials_pair(z1, z2, 40.0, Margin::Frechet);
    auto frechet_density = [](double z) {
      return std::exp(-1.0 / z) / (z * z);
    };
    CHECK(pp.d12 ==
          doctest::Approx(frechet_density(z1) * frechet_density(z2)).epsilon(1e-12));
  }
  SUBCASE("mixed density integrates to one") {
    // substitute z = -1/log(v): dz/dv = z^2 / v maps (0,inf) to (0,1)
    const oracle::GaussLegendre gl(160);
    const double a = 0.6;
    const double total = gl.integrate2([&](double v1, double v2) {
      const double z1 = -1.0 / std::log(v1), z2 = -1.0 / std::log(v2);
      const PairPartials pp = partials_pair(z1, z2, a, Margin::Frechet);
      return pp.d12 * (z1 * z1 / v1) * (z2 * z2 / v2);
    });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("singular model error at a = 0") {
    CHECK_THROWS_AS(partials_pair(1.0, 1.0, 0.0, Margin::Frechet),
                    singular_model_error);
    CHECK_THROWS_AS(partials_pair(1.0, 1.0, 1e-11, Margin::Gumbel),
                    singular_model_error);
    CHECK_THROWS_AS(log_mixed_density(1.0, 1.0, 0.0, Margin::Frechet),
                    singular_model_error);
  }
}

TEST_CASE("log-scale evaluation is consistent") {
  SplitMix64 rng(5150);
  for (int i = 0; i < 30; ++i) {
    const double a = rng.uniform(0.1, 3.0);
    const double z1 = rng.uniform(0.5, 4.0), z2 = rng.uniform(0.5, 4.0);
    CHECK(log_cdf_frechet_pair(z1, z2, a) ==
          doctest::Approx(std::log(cdf_frechet_pair(z1, z2, a))).epsilon(1e-12));
    CHECK(log_mixed_density(z1, z2, a, Margin::Frechet) ==
          doctest::Approx(std::log(partials_pair(z1, z2, a, Margin::Frechet).d12))
              .epsilon(1e-10));
    const double g1 = rng.uniform(-1.0, 2.0), g2 = rng.uniform(-1.0, 2.0);
    CHECK(log_mixed_density(g1, g2, a, Margin::Gumbel) ==
          doctest::Approx(std::log(partials_pair(g1, g2, a, Margin::Gumbel).d12))
              .epsilon(1e-10));
  }
}

TEST_CASE("distribution identities") {
  SUBCASE("exchangeability") {
    SplitMix64 rng(10);
    for (int i = 0; i < 40; ++i) {
      const double z1 = rng.uniform(0.2, 6.0), z2 = rng.uniform(0.2, 6.0);
      const double a = rng.uniform(0.02, 8.0);
      CHECK(cdf_frechet_pair(z1, z2, a) == cdf_frechet_pair(z2, z1, a));
      CHECK(cdf_gumbel_pair(std::log(z1), std::log(z2), a) ==
            cdf_gumbel_pair(std::log(z2), std::log(z1), a));
    }
  }
  SUBCASE("marginal consistency at a distant coordinate") {
    for (double z1 : {0.4, 1.0, 3.0})
      for (double a : {0.2, 1.0, 4.0})
        CHECK(cdf_frechet_pair(z1, 1e8, a) ==
              doctest::Approx(std::exp(-1.0 / z1)).epsilon(1e-10));
  }
  SUBCASE("max-stability") {
    for (int n : {2, 3, 10}) {
      for (double a : {0.1, 0.9, 2.5}) {
        const double z1 = 0.8, z2 = 1.7;
        const double lhs =
            std::pow(cdf_frechet_pair(n * z1, n * z2, a), static_cast<double>(n));
        CHECK(lhs == doctest::Approx(cdf_frechet_pair(z1, z2, a)).epsilon(1e-10));
      }
    }
  }
  SUBCASE("diagonal CDF is nonincreasing in a") {
    const double z = 1.4;
    double prev = 1.0;
    for (double a = 0.05; a < 10.0; a += 0.05) {
      const double g = cdf_frechet_pair(z, z, a);
      CHECK(g <= prev + 1e-15);
      prev = g;
    }
    CHECK(prev == doctest::Approx(std::exp(-2.0 / z)).epsilon(1e-6));
  }
  SUBCASE("extremal coefficient relation on the diagonal") {
    for (double lag : {1.0, 5.0, 10.0, 25.0}) {
      const Point h{lag, 0.7 * lag};
      const double a = pair_coefficient({0, 0}, h, kPaperSigma);
      const double v = extremal_coefficient(h, kPaperSigma);
      for (double z : {0.5, 1.0, 2.0}) {
        CHECK(cdf_frechet_pair(z, z, a) ==
              doctest::Approx(std::exp(-v / z)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("extremal_coefficient") {
  CHECK(extremal_coefficient({0, 0}, kPaperSigma) == doctest::Approx(1.0));
  CHECK(extremal_coefficient({1, 0}, kPaperSigma) ==
        doctest::Approx(2.0 * oracle::phi_cdf(0.5 * std::sqrt(300.0 / 37500.0)))
            .epsilon(1e-13));
  CHECK(extremal_coefficient({1, 0}, kPaperSigma) ==
        doctest::Approx(1.03567).epsilon(1e-5));
  CHECK(extremal_coefficient({1e6, 1e6}, kPaperSigma) == doctest::Approx(2.0));
  SUBCASE("bounds and monotonicity along a direction") {
    double prev = 1.0;
    for (double t = 0.0; t < 500.0; t += 2.5) {
      const double v = extremal_coefficient({t, -0.5 * t}, kPaperSigma);
      CHECK(v >= 1.0);
      CHECK(v <= 2.0);
      CHECK(v >= prev - 1e-15);
      prev = v;
    }
  }
}
