#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace spex {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double sq_dist(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Error taxonomy; the CLI maps these onto stable exit codes.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Perfectly dependent pair (zero Mahalanobis separation): the bivariate
// model degenerates and has no density.
class singular_model_error : public domain_error {
 public:
  using domain_error::domain_error;
};

class nonconvergence_error : public std::runtime_error {
 public:
  explicit nonconvergence_error(const std::string& what, std::string diag = {})
      : std::runtime_error(what), diagnostics(std::move(diag)) {}
  std::string diagnostics;
};

class empty_likelihood_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spex
