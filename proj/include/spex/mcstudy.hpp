#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spex/estimate.hpp"

namespace spex {

// One factorial Monte Carlo experiment: a grid/lag defines the simulated
// fields; threshold levels, weight levels and methods span the fitting
// cells, all sharing the same simulated replications.
struct StudyConfig {
  int grid_n = 7;
  double lag = 1.0;
  int replications = 100;
  int years = 40;
  int days_per_year = 91;
  std::vector<double> threshold_levels{0.98};
  std::vector<double> weight_levels{0.25};
  std::vector<Method> methods{Method::RT, Method::LT, Method::PRS};
  SmithParams truth{200.0, 300.0, 150.0};
  std::uint64_t master_seed = 1;
  int threads = 1;
  FitOptions fit;
  std::string out_dir;  // when set, cell/summary CSVs stream here

  void validate() const;
};

struct CellKey {
  double threshold_level = 0.98;
  double weight_level = 1.0;
  Method method = Method::RT;

  std::string id() const;  // filesystem-safe identifier
  bool operator==(const CellKey&) const = default;
};

// One fitted replication inside a cell. Margin fields are NaN where the
// method has none.
struct RepRecord {
  int replication = 0;
  double sigma11 = 0, sigma22 = 0, sigma12 = 0;
  double sigma_u = 0, xi = 0;
  bool converged = false;
  double seconds = 0;
};

struct CellSummary {
  std::vector<std::string> param_names;
  std::vector<double> mean, sd, bias, rmse;  // sd is NaN when R = 1
  int n_total = 0, n_used = 0, n_failed = 0;
};

struct CellResult {
  CellKey key;
  std::vector<RepRecord> reps;
  CellSummary summary;
};

struct StudyResult {
  std::vector<CellResult> cells;
};

// Componentwise mean, sample SD, bias about the truth and RMSE about the
// truth (RMSE^2 = bias^2 + SD^2 (R-1)/R). estimates holds one row per
// replication.
CellSummary summarize(const std::vector<std::vector<double>>& estimates,
                      const std::vector<double>& truth,
                      const std::vector<std::string>& names);

// Runs the full factorial study. Replications execute in parallel; the
// aggregation is a deterministic fold by (cell, replication). When
// cfg.out_dir is set, completed cells found there (matching row counts)
// are loaded instead of recomputed, and results stream to CSV per cell.
StudyResult run_study(const StudyConfig& cfg);

// Extremal coefficient at every inter-site displacement, sorted by
// distance, with the q25/q50 distance markers used for the cut-off
// weights.
struct ExtremalProfile {
  std::vector<std::pair<double, double>> points;  // (distance, v)
  double q25 = 0.0, q50 = 0.0;
};
ExtremalProfile extremal_profile(const std::vector<Point>& sites,
                                 const SmithParams& params);

}  // namespace spex
