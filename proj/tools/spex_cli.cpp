// Command-line front end: simulate Smith-process datasets, fit them by
// pairwise composite likelihood, run Monte Carlo studies, and evaluate
// extremal-coefficient profiles.
//
// Exit codes: 0 success, 1 config error, 2 numerical nonconvergence,
// 3 I/O error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "spex/io.hpp"
#include "spex/mcstudy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spex;

namespace {

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

SimConfig sim_config_from_json(const json& cfg, std::uint64_t seed_override,
                               bool seed_given) {
  SimConfig sim;
  if (cfg.contains("grid")) {
    const auto& g = cfg["grid"];
    sim.sites = regular_grid(g.at("n").get<int>(), g.at("lag").get<double>());
  } else if (cfg.contains("sites")) {
    for (const auto& s : cfg["sites"])
      sim.sites.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
  } else {
    throw config_error("config needs either 'grid' {n, lag} or 'sites'");
  }
  sim.params = smith_params_from_json(cfg.at("params"));
  sim.years = cfg.value("years", 1);
  sim.days_per_year = cfg.value("days_per_year", 1);
  if (seed_given)
    sim.seed = seed_override;
  else if (cfg.contains("seed"))
    sim.seed = cfg["seed"].get<std::uint64_t>();
  else
    throw config_error("config key 'seed' is required (or pass --seed)");
  sim.buffer_radius = cfg.value("buffer_radius", 0.0);
  sim.stop_tolerance = cfg.value("stop_tolerance", 1e-6);
  return sim;
}

json sim_config_echo(const SimConfig& sim) {
  json j;
  j["params"] = smith_params_to_json(sim.params);
  j["years"] = sim.years;
  j["days_per_year"] = sim.days_per_year;
  j["seed"] = sim.seed;
  j["buffer_radius"] = sim.effective_buffer();
  j["stop_tolerance"] = sim.stop_tolerance;
  j["sites"] = json::array();
  for (const Point& s : sim.sites) j["sites"].push_back({s.x, s.y});
  return j;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed_override,
                 bool seed_given, bool gumbel, const std::string& out_dir) {
  RunManifest man;
  man.command = "simulate";
  man.started_at = timestamp_utc_now();
  const json cfg = read_json_file(config_path);
  const SimConfig sim = sim_config_from_json(cfg, seed_override, seed_given);
  Dataset ds = simulate_dataset(sim);
  if (gumbel || cfg.value("gumbel", false)) ds = to_gumbel(ds);
  fs::create_directories(out_dir);
  const std::string csv = (fs::path(out_dir) / "dataset.csv").string();
  write_dataset(ds, csv, sim_config_echo(sim));
  man.config = sim_config_echo(sim);
  man.config["gumbel"] = gumbel || cfg.value("gumbel", false);
  man.seed = sim.seed;
  man.outputs = {csv, csv + ".meta.json"};
  man.finished_at = timestamp_utc_now();
  write_manifest(man, (fs::path(out_dir) / "manifest.json").string());
  std::printf("wrote %s (%zu rows x %zu sites, %s scale)\n", csv.c_str(),
              ds.rows(), ds.cols(), to_string(ds.scale).c_str());
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& method_name,
            double tq, double wq, bool lt_joint, bool rt_free_scale,
            bool rt_free_shape, bool prs_pin_margins, bool sandwich,
            int window, int stride, int threads, const std::string& out_path) {
  RunManifest man;
  man.command = "fit";
  man.started_at = timestamp_utc_now();
  const Method method = method_from_string(method_name);

  Dataset ds = read_dataset(data_path);
  if (ds.scale == Scale::Raw)
    throw config_error(
        "dataset is tagged 'raw'; fitting expects the Gumbel scale. "
        "Simulate with this tool (Frechet output is log-transformed "
        "automatically) or supply data tagged frechet/gumbel.");
  if (ds.scale == Scale::Frechet) ds = to_gumbel(ds);

  FitOptions opts;
  opts.lt_two_step = !lt_joint;
  opts.rt_fix_sigma_u_one = !rt_free_scale;
  opts.rt_fix_xi_zero = !rt_free_shape;
  opts.prs_fit_margins = !prs_pin_margins;
  opts.threads = threads;

  FitResult fit = fit_dataset(ds, method, tq, wq, opts);

  if (sandwich && fit.converged) {
    const WeightScheme ws = make_weights(ds.sites, wq);
    const Dataset block = method == Method::PRS ? yearly_maxima(ds) : Dataset{};
    const Dataset& fit_ds = method == Method::PRS ? block : ds;
    CompositeLikelihood cl(fit_ds, ws, method, fit.threshold, fit.zeta,
                           threads);
    SubsampleConfig sc;
    if (method == Method::PRS) {
      // block rows, not days; default to quarter-length windows
      sc.window_days = std::max(2, static_cast<int>(fit_ds.rows()) / 4);
      sc.stride_days = std::max(1, sc.window_days / 2);
    }
    if (window > 0) sc.window_days = window;
    if (stride > 0) sc.stride_days = stride;
    fit.H = hessian_cl(cl, fit);
    std::string diag;
    fit.J = subsample_J(cl, fit, sc, &diag);
    if (!diag.empty())
      fit.diagnostics += (fit.diagnostics.empty() ? "" : "; ") + diag;
    if (!is_positive_definite(fit.H))
      fit.diagnostics += (fit.diagnostics.empty() ? "" : "; ") +
                         std::string("H_T not positive definite (boundary or "
                                     "nonconverged optimum)");
    fit.V = godambe_variance(fit.H, fit.J);
    fit.std_errors.clear();
    for (std::size_t k = 0; k < fit.V.size(); ++k)
      fit.std_errors.push_back(std::sqrt(std::max(0.0, fit.V[k][k])));
  }

  json out = fit_result_to_json(fit);
  out["data"] = data_path;
  out["threshold_quantile"] = tq;
  out["weights_quantile"] = wq;
  if (ds.seed) out["data_seed"] = *ds.seed;
  if (ds.truth) {
    out["truth"] = smith_params_to_json(*ds.truth);
    out["delta_vs_truth"] = {
        {"sigma11", fit.beta.sigma11 - ds.truth->sigma11},
        {"sigma22", fit.beta.sigma22 - ds.truth->sigma22},
        {"sigma12", fit.beta.sigma12 - ds.truth->sigma12}};
  }
  write_json_file(out, out_path);
  man.config = {{"data", data_path},
                {"method", method_name},
                {"threshold_quantile", tq},
                {"weights_quantile", wq},
                {"lt_joint", lt_joint},
                {"rt_free_scale", rt_free_scale},
                {"rt_free_shape", rt_free_shape},
                {"prs_pin_margins", prs_pin_margins},
                {"sandwich", sandwich},
                {"threads", threads}};
  if (ds.seed) man.seed = *ds.seed;
  man.outputs = {out_path};
  man.finished_at = timestamp_utc_now();
  write_manifest(man, out_path + ".manifest.json");

  if (!fit.converged) {
    std::fprintf(stderr, "fit did not converge: %s\n",
                 fit.diagnostics.c_str());
    return 2;
  }
  std::printf("%s fit: sigma11=%.4g sigma22=%.4g sigma12=%.4g (cl=%.6g)\n",
              method_name.c_str(), fit.beta.sigma11, fit.beta.sigma22,
              fit.beta.sigma12, fit.cl_value);
  return 0;
}

StudyConfig study_config_from_json(const json& cfg,
                                   std::uint64_t seed_override,
                                   bool seed_given, int threads) {
  StudyConfig sc;
  sc.grid_n = cfg.value("grid_n", 7);
  sc.lag = cfg.value("lag", 1.0);
  sc.replications = cfg.value("replications", 100);
  sc.years = cfg.value("years", 40);
  sc.days_per_year = cfg.value("days_per_year", 91);
  if (cfg.contains("threshold_levels"))
    sc.threshold_levels = cfg["threshold_levels"].get<std::vector<double>>();
  if (cfg.contains("weight_levels"))
    sc.weight_levels = cfg["weight_levels"].get<std::vector<double>>();
  if (cfg.contains("methods")) {
    sc.methods.clear();
    for (const auto& m : cfg["methods"])
      sc.methods.push_back(method_from_string(m.get<std::string>()));
  }
  if (cfg.contains("truth")) sc.truth = smith_params_from_json(cfg["truth"]);
  if (seed_given)
    sc.master_seed = seed_override;
  else if (cfg.contains("master_seed"))
    sc.master_seed = cfg["master_seed"].get<std::uint64_t>();
  else
    throw config_error("config key 'master_seed' is required (or pass --seed)");
  sc.fit.lt_two_step = !cfg.value("lt_joint", false);
  sc.fit.rt_fix_sigma_u_one = !cfg.value("rt_free_scale", false);
  sc.fit.rt_fix_xi_zero = !cfg.value("rt_free_shape", false);
  sc.fit.prs_fit_margins = !cfg.value("prs_pin_margins", false);
  sc.threads = threads;
  return sc;
}

json study_config_echo(const StudyConfig& sc) {
  json j;
  j["grid_n"] = sc.grid_n;
  j["lag"] = sc.lag;
  j["replications"] = sc.replications;
  j["years"] = sc.years;
  j["days_per_year"] = sc.days_per_year;
  j["threshold_levels"] = sc.threshold_levels;
  j["weight_levels"] = sc.weight_levels;
  j["methods"] = json::array();
  for (Method m : sc.methods) j["methods"].push_back(to_string(m));
  j["truth"] = smith_params_to_json(sc.truth);
  j["master_seed"] = sc.master_seed;
  j["lt_joint"] = !sc.fit.lt_two_step;
  j["rt_free_scale"] = !sc.fit.rt_fix_sigma_u_one;
  j["rt_free_shape"] = !sc.fit.rt_fix_xi_zero;
  j["prs_pin_margins"] = !sc.fit.prs_fit_margins;
  j["threads"] = sc.threads;
  return j;
}

int cmd_study(const std::string& config_path, std::uint64_t seed_override,
              bool seed_given, int threads, const std::string& out_dir) {
  RunManifest man;
  man.command = "study";
  man.started_at = timestamp_utc_now();
  const json cfg = read_json_file(config_path);
  StudyConfig sc =
      study_config_from_json(cfg, seed_override, seed_given, threads);
  fs::create_directories(out_dir);
  sc.out_dir = out_dir;
  const StudyResult res = run_study(sc);
  man.config = study_config_echo(sc);
  man.seed = sc.master_seed;
  for (const CellResult& cell : res.cells)
    man.outputs.push_back(
        (fs::path(out_dir) / "cells" / (cell.key.id() + ".csv")).string());
  man.outputs.push_back((fs::path(out_dir) / "summary.csv").string());
  man.outputs.push_back((fs::path(out_dir) / "figure_estimates.csv").string());
  man.finished_at = timestamp_utc_now();
  write_manifest(man, (fs::path(out_dir) / "manifest.json").string());
  int failures = 0;
  for (const CellResult& cell : res.cells) failures += cell.summary.n_failed;
  std::printf("study complete: %zu cells x %d replications, %d failed fits\n",
              res.cells.size(), sc.replications, failures);
  return 0;
}

int cmd_extcoef(const std::string& config_path, int grid_n, double lag,
                const std::string& out_path) {
  RunManifest man;
  man.command = "extcoef";
  man.started_at = timestamp_utc_now();
  SmithParams params;
  if (!config_path.empty()) {
    const json cfg = read_json_file(config_path);
    params = smith_params_from_json(cfg.at("params"));
    if (cfg.contains("grid")) {
      grid_n = cfg["grid"].at("n").get<int>();
      lag = cfg["grid"].at("lag").get<double>();
    }
  } else {
    throw config_error("extcoef requires --config with a 'params' object");
  }
  const auto sites = regular_grid(grid_n, lag);
  const ExtremalProfile prof = extremal_profile(sites, params);
  std::ofstream out(out_path);
  if (!out) throw io_error("cannot open for writing: " + out_path);
  out << "distance,v\n";
  for (const auto& [d, v] : prof.points)
    out << format_g17(d) << ',' << format_g17(v) << '\n';
  if (!out) throw io_error("write failed: " + out_path);
  man.config = {{"params", smith_params_to_json(params)},
                {"grid", {{"n", grid_n}, {"lag", lag}}},
                {"q25_distance", prof.q25},
                {"q50_distance", prof.q50}};
  man.outputs = {out_path};
  man.finished_at = timestamp_utc_now();
  write_manifest(man, out_path + ".manifest.json");
  std::printf("extremal profile: %zu pairs, q25 distance %.6g, q50 %.6g\n",
              prof.points.size(), prof.q25, prof.q50);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smith max-stable process: simulation and composite-likelihood "
               "inference from threshold exceedances"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, method_name;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = default_threads();
  bool gumbel = false;
  double tq = 0.98, wq = 0.25;
  bool lt_joint = false, rt_free_scale = false, rt_free_shape = false,
       prs_pin_margins = false, no_sandwich = false;
  int window = 0, stride = 0;
  int grid_n = 7;
  double lag = 1.0;

  auto* sim = app.add_subcommand("simulate", "simulate a dataset");
  sim->add_option("--config", config_path, "JSON config")->required();
  sim->add_option("--seed", seed, "seed override")
      ->each([&](const std::string&) { seed_given = true; });
  sim->add_flag("--gumbel", gumbel, "emit Gumbel-scale values");
  sim->add_option("--out", out_path, "output directory")->required();

  auto* fit = app.add_subcommand("fit", "fit one dataset");
  fit->add_option("--data", data_path, "dataset CSV (with .meta.json sidecar)")
      ->required();
  fit->add_option("--method", method_name, "rt | lt | prs")->required();
  fit->add_option("--threshold-quantile", tq, "pooled threshold level");
  fit->add_option("--weights-quantile", wq, "distance cut-off level");
  fit->add_flag("--joint", lt_joint, "LT: joint fit instead of two-step");
  fit->add_flag("--free-scale", rt_free_scale, "RT: estimate sigma_u");
  fit->add_flag("--free-shape", rt_free_shape, "RT: estimate xi");
  fit->add_flag("--pin-margins", prs_pin_margins, "PRS: pin margins to (0,1)");
  fit->add_flag("--no-sandwich", no_sandwich, "skip H/J/V computation");
  fit->add_option("--window", window, "subsample window length (days)");
  fit->add_option("--stride", stride, "subsample stride (days)");
  fit->add_option("--threads", threads, "worker threads");
  fit->add_option("--out", out_path, "output JSON path")->required();

  auto* study = app.add_subcommand("study", "run a Monte Carlo study");
  study->add_option("--config", config_path, "JSON config")->required();
  study->add_option("--seed", seed, "master seed override")
      ->each([&](const std::string&) { seed_given = true; });
  study->add_option("--threads", threads, "worker threads");
  study->add_option("--out", out_path, "output directory")->required();

  auto* ext = app.add_subcommand("extcoef", "extremal coefficient profile");
  ext->add_option("--config", config_path, "JSON config with 'params'")
      ->required();
  ext->add_option("--n", grid_n, "grid side");
  ext->add_option("--lag", lag, "grid lag");
  ext->add_option("--out", out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(config_path, seed, seed_given, gumbel, out_path);
    if (fit->parsed())
      return cmd_fit(data_path, method_name, tq, wq, lt_joint, rt_free_scale,
                     rt_free_shape, prs_pin_margins, !no_sandwich, window,
                     stride, threads, out_path);
    if (study->parsed())
      return cmd_study(config_path, seed, seed_given, threads, out_path);
    if (ext->parsed()) return cmd_extcoef(config_path, grid_n, lag, out_path);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const nonconvergence_error& e) {
    std::fprintf(stderr, "nonconvergence: %s\n", e.what());
    return 2;
  } catch (const io_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
