#include "spex/mcstudy.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "spex/io.hpp"
#include "spex/margins.hpp"
#include "spex/simulate.hpp"
#include "spex/threads.hpp"

namespace spex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t sim_group_id(const StudyConfig& cfg) {
  std::uint64_t h = hash_combine(0x5731D9u, static_cast<std::uint64_t>(cfg.grid_n));
  h = hash_combine(h, static_cast<std::uint64_t>(std::llround(cfg.lag * 1000.0)));
  h = hash_combine(h, static_cast<std::uint64_t>(cfg.years));
  return hash_combine(h, static_cast<std::uint64_t>(cfg.days_per_year));
}

std::string level_tag(double level) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", static_cast<int>(std::llround(level * 100)));
  return buf;
}

void write_cell_csv(const std::string& path, const CellResult& cell) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << "replication,method,sigma11,sigma22,sigma12,sigma_u,xi,converged,"
         "seconds\n";
  auto field = [](double v) { return std::isnan(v) ? std::string() : format_g17(v); };
  for (const RepRecord& r : cell.reps) {
    out << r.replication << ',' << to_string(cell.key.method) << ','
        << field(r.sigma11) << ',' << field(r.sigma22) << ','
        << field(r.sigma12) << ',' << field(r.sigma_u) << ',' << field(r.xi)
        << ',' << (r.converged ? 1 : 0) << ',' << format_g17(r.seconds)
        << '\n';
  }
  if (!out) throw io_error("write failed: " + path);
}

bool load_cell_csv(const std::string& path, int expected_rows,
                   CellResult* cell) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  if (!std::getline(in, line)) return false;
  std::vector<RepRecord> reps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    RepRecord r;
    auto next = [&]() {
      if (!std::getline(ss, tok, ',')) throw io_error("short row in " + path);
      return tok;
    };
    r.replication = std::stoi(next());
    next();  // method, implied by the cell
    auto num = [&]() {
      const std::string s = next();
      return s.empty() ? kNaN : std::stod(s);
    };
    r.sigma11 = num();
    r.sigma22 = num();
    r.sigma12 = num();
    r.sigma_u = num();
    r.xi = num();
    r.converged = next() == "1";
    r.seconds = std::stod(next());
    reps.push_back(r);
  }
  if (static_cast<int>(reps.size()) != expected_rows) return false;
  cell->reps = std::move(reps);
  return true;
}

}  // namespace

void StudyConfig::validate() const {
  if (grid_n < 2) throw config_error("StudyConfig: grid_n must be >= 2");
  if (!(lag > 0.0)) throw config_error("StudyConfig: lag must be positive");
  if (replications < 1) throw config_error("StudyConfig: replications >= 1");
  if (years < 1 || days_per_year < 1)
    throw config_error("StudyConfig: years and days_per_year must be >= 1");
  if (threshold_levels.empty() || weight_levels.empty() || methods.empty())
    throw config_error("StudyConfig: empty design axis");
  for (double q : threshold_levels)
    if (!(q > 0.0 && q < 1.0))
      throw config_error("StudyConfig: threshold level outside (0,1)");
  for (double a : weight_levels)
    if (!(a > 0.0 && a <= 1.0))
      throw config_error("StudyConfig: weight level outside (0,1]");
  truth.validate();
}

std::string CellKey::id() const {
  return "u" + level_tag(threshold_level) + "_a" + level_tag(weight_level) +
         "_" + to_string(method);
}

CellSummary summarize(const std::vector<std::vector<double>>& estimates,
                      const std::vector<double>& truth,
                      const std::vector<std::string>& names) {
  CellSummary s;
  s.param_names = names;
  const std::size_t dim = truth.size();
  const std::size_t n = estimates.size();
  s.n_total = static_cast<int>(n);
  s.n_used = static_cast<int>(n);
  s.mean.assign(dim, kNaN);
  s.sd.assign(dim, kNaN);
  s.bias.assign(dim, kNaN);
  s.rmse.assign(dim, kNaN);
  if (n == 0) return s;
  for (std::size_t k = 0; k < dim; ++k) {
    double mean = 0.0, mse = 0.0;
    for (const auto& row : estimates) {
      mean += row[k];
      mse += (row[k] - truth[k]) * (row[k] - truth[k]);
    }
    mean /= static_cast<double>(n);
    mse /= static_cast<double>(n);
    s.mean[k] = mean;
    s.bias[k] = mean - truth[k];
    s.rmse[k] = std::sqrt(mse);
    if (n > 1) {
      double acc = 0.0;
      for (const auto& row : estimates) acc += (row[k] - mean) * (row[k] - mean);
      s.sd[k] = std::sqrt(acc / static_cast<double>(n - 1));
    }
  }
  return s;
}

StudyResult run_study(const StudyConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  const bool streaming = !cfg.out_dir.empty();
  fs::path cells_dir;
  if (streaming) {
    cells_dir = fs::path(cfg.out_dir) / "cells";
    fs::create_directories(cells_dir);
  }

  const std::vector<Point> sites = regular_grid(cfg.grid_n, cfg.lag);
  const std::uint64_t group = sim_group_id(cfg);

  std::vector<CellKey> keys;
  for (double tq : cfg.threshold_levels)
    for (double wq : cfg.weight_levels)
      for (Method m : cfg.methods) keys.push_back({tq, wq, m});

  StudyResult result;
  result.cells.resize(keys.size());

  for (std::size_t c = 0; c < keys.size(); ++c) {
    CellResult& cell = result.cells[c];
    cell.key = keys[c];
    const std::string cell_path =
        streaming ? (cells_dir / (keys[c].id() + ".csv")).string() : "";
    if (streaming &&
        load_cell_csv(cell_path, cfg.replications, &cell)) {
      // completed on a previous run
    } else {
      cell.reps.assign(cfg.replications, {});
      parallel_for_index(
          static_cast<std::size_t>(cfg.replications), cfg.threads,
          [&](std::size_t r) {
            SimConfig sim;
            sim.sites = sites;
            sim.params = cfg.truth;
            sim.years = cfg.years;
            sim.days_per_year = cfg.days_per_year;
            sim.seed = hash_combine(hash_combine(cfg.master_seed, group), r);
            RepRecord rec;
            rec.replication = static_cast<int>(r);
            const auto t0 = std::chrono::steady_clock::now();
            try {
              const Dataset ds = to_gumbel(simulate_dataset(sim));
              const FitResult fit =
                  fit_dataset(ds, cell.key.method, cell.key.threshold_level,
                              cell.key.weight_level, cfg.fit);
              rec.converged = fit.converged;
              rec.sigma11 = fit.beta.sigma11;
              rec.sigma22 = fit.beta.sigma22;
              rec.sigma12 = fit.beta.sigma12;
              if (cell.key.method == Method::PRS) {
                rec.sigma_u = kNaN;
                rec.xi = kNaN;
              } else {
                rec.sigma_u = fit.sigma_u;
                rec.xi = fit.xi;
              }
            } catch (const std::exception&) {
              rec.converged = false;
              rec.sigma11 = rec.sigma22 = rec.sigma12 = kNaN;
              rec.sigma_u = rec.xi = kNaN;
            }
            rec.seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            cell.reps[r] = rec;
          });
      if (streaming) write_cell_csv(cell_path, cell);
    }

    std::vector<std::vector<double>> used;
    for (const RepRecord& r : cell.reps)
      if (r.converged && std::isfinite(r.sigma11))
        used.push_back({r.sigma11, r.sigma22, r.sigma12});
    cell.summary = summarize(
        used, {cfg.truth.sigma11, cfg.truth.sigma22, cfg.truth.sigma12},
        {"sigma11", "sigma22", "sigma12"});
    cell.summary.n_total = cfg.replications;
    cell.summary.n_failed = cfg.replications - cell.summary.n_used;
  }

  if (streaming) {
    std::ofstream sum(fs::path(cfg.out_dir) / "summary.csv");
    if (!sum) throw io_error("cannot write study summary");
    sum << "threshold_level,weight_level,method,parameter,truth,mean,sd,bias,"
           "rmse,n_used,n_failed\n";
    const double truths[3] = {cfg.truth.sigma11, cfg.truth.sigma22,
                              cfg.truth.sigma12};
    for (const CellResult& cell : result.cells) {
      for (std::size_t k = 0; k < 3; ++k) {
        sum << format_g17(cell.key.threshold_level) << ','
            << format_g17(cell.key.weight_level) << ','
            << to_string(cell.key.method) << ','
            << cell.summary.param_names[k] << ',' << format_g17(truths[k])
            << ',' << format_g17(cell.summary.mean[k]) << ','
            << (std::isnan(cell.summary.sd[k]) ? std::string()
                                               : format_g17(cell.summary.sd[k]))
            << ',' << format_g17(cell.summary.bias[k]) << ','
            << format_g17(cell.summary.rmse[k]) << ',' << cell.summary.n_used
            << ',' << cell.summary.n_failed << '\n';
      }
    }

    std::ofstream fig(fs::path(cfg.out_dir) / "figure_estimates.csv");
    if (!fig) throw io_error("cannot write figure data");
    fig << "method,delta_level,lag,parameter,estimate\n";
    for (const CellResult& cell : result.cells) {
      for (const RepRecord& r : cell.reps) {
        if (!r.converged || !std::isfinite(r.sigma11)) continue;
        const double est[3] = {r.sigma11, r.sigma22, r.sigma12};
        const char* names[3] = {"sigma11", "sigma22", "sigma12"};
        for (int k = 0; k < 3; ++k)
          fig << to_string(cell.key.method) << ','
              << format_g17(cell.key.weight_level) << ',' << format_g17(cfg.lag)
              << ',' << names[k] << ',' << format_g17(est[k]) << '\n';
      }
    }
  }
  return result;
}

ExtremalProfile extremal_profile(const std::vector<Point>& sites,
                                 const SmithParams& params) {
  params.validate();
  if (sites.size() < 2)
    throw domain_error("extremal_profile: need at least 2 sites");
  ExtremalProfile prof;
  std::vector<double> dists;
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      const Point h{sites[i].x - sites[j].x, sites[i].y - sites[j].y};
      const double d = std::sqrt(h.x * h.x + h.y * h.y);
      prof.points.emplace_back(d, extremal_coefficient(h, params));
      dists.push_back(d);
    }
  std::sort(prof.points.begin(), prof.points.end());
  prof.q25 = empirical_quantile(dists, 0.25);
  prof.q50 = empirical_quantile(dists, 0.50);
  return prof;
}

}  // namespace spex
