#include "doctest.h"
#include "oracles.hpp"
#include "spex/normal.hpp"

using namespace spex;

TEST_CASE("norm_cdf matches the series oracle") {
  for (double x : {-3.5, -2.0, -1.0, -0.3, 0.0, 0.0447214, 0.5, 1.0, 2.19, 3.9}) {
    CHECK(norm_cdf(x) == doctest::Approx(oracle::phi_cdf(x)).epsilon(1e-14));
  }
  CHECK(norm_cdf(0.0) == doctest::Approx(0.5));
  CHECK(norm_cdf(40.0) == doctest::Approx(1.0));
  CHECK(norm_cdf(-40.0) == doctest::Approx(0.0));
}

TEST_CASE("norm_pdf is the derivative of norm_cdf") {
  for (double x : {-2.0, -0.5, 0.0, 1.3, 2.7}) {
    const double fd = oracle::fd1([](double t) { return norm_cdf(t); }, x);
    CHECK(norm_pdf(x) == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("norm_quantile inverts norm_cdf") {
  for (double p : {1e-6, 0.01, 0.25, 0.5, 0.9, 0.999999}) {
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(norm_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(norm_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(norm_quantile(1.0), std::domain_error);
}
