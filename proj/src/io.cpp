#include "spex/io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace spex {

using nlohmann::json;

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset(const Dataset& ds, const std::string& csv_path,
                   const json& config_echo) {
  std::ofstream out(csv_path);
  if (!out) throw io_error("cannot open for writing: " + csv_path);
  const std::size_t p = ds.cols();
  for (std::size_t i = 0; i < p; ++i) {
    if (i) out << ',';
    out << 's' << (i + 1) << "_x" << ds.sites[i].x << "_y" << ds.sites[i].y;
  }
  out << '\n';
  for (std::size_t t = 0; t < ds.rows(); ++t) {
    for (std::size_t i = 0; i < p; ++i) {
      if (i) out << ',';
      out << format_g17(ds(t, i));
    }
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + csv_path);

  json meta;
  meta["schema"] = "spex.dataset.v1";
  meta["scale"] = to_string(ds.scale);
  meta["sites"] = json::array();
  for (const Point& s : ds.sites) meta["sites"].push_back({s.x, s.y});
  meta["year_of"] = ds.year_of;
  if (ds.seed) meta["seed"] = *ds.seed;
  if (ds.truth) meta["truth"] = smith_params_to_json(*ds.truth);
  if (!config_echo.is_null() && !config_echo.empty())
    meta["config"] = config_echo;
  write_json_file(meta, csv_path + ".meta.json");
}

Dataset read_dataset(const std::string& csv_path) {
  const json meta = read_json_file(csv_path + ".meta.json");
  Dataset ds;
  ds.scale = scale_from_string(meta.at("scale").get<std::string>());
  for (const auto& s : meta.at("sites"))
    ds.sites.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
  ds.year_of = meta.at("year_of").get<std::vector<int>>();
  if (meta.contains("seed")) ds.seed = meta["seed"].get<std::uint64_t>();
  if (meta.contains("truth")) ds.truth = smith_params_from_json(meta["truth"]);

  std::ifstream in(csv_path);
  if (!in) throw io_error("cannot open dataset: " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw io_error("empty dataset: " + csv_path);
  const std::size_t p = ds.sites.size();
  ds.values.reserve(ds.year_of.size() * p);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t got = 0;
    while (std::getline(ss, cell, ',')) {
      ds.values.push_back(std::stod(cell));
      ++got;
    }
    if (got != p)
      throw io_error("dataset row with wrong column count in " + csv_path);
  }
  if (ds.values.size() != ds.year_of.size() * p)
    throw io_error("dataset shape does not match its sidecar: " + csv_path);
  return ds;
}

json fit_result_to_json(const FitResult& fit) {
  json j;
  j["method"] = to_string(fit.method);
  j["param_names"] = fit.param_names;
  j["theta_hat"] = fit.theta_hat;
  j["beta"] = smith_params_to_json(fit.beta);
  if (fit.method != Method::PRS) {
    j["sigma_u"] = fit.sigma_u;
    j["xi"] = fit.xi;
    j["threshold"] = fit.threshold;
    j["zeta"] = fit.zeta;
  } else {
    j["mu"] = fit.mu;
    j["sigma_g"] = fit.sigma_g;
  }
  j["cl_value"] = fit.cl_value;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["evaluations"] = fit.evaluations;
  j["runtime_seconds"] = fit.runtime_seconds;
  if (!fit.diagnostics.empty()) j["diagnostics"] = fit.diagnostics;
  if (!fit.H.empty()) j["H"] = fit.H;
  if (!fit.J.empty()) j["J"] = fit.J;
  if (!fit.V.empty()) j["V"] = fit.V;
  if (!fit.std_errors.empty()) j["std_errors"] = fit.std_errors;
  return j;
}

std::string timestamp_utc_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  json j;
  j["version"] = kVersionTag;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["outputs"] = m.outputs;
  write_json_file(j, path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw config_error("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw io_error("write failed: " + path);
}

SmithParams smith_params_from_json(const json& j) {
  SmithParams p;
  p.sigma11 = j.at("sigma11").get<double>();
  p.sigma22 = j.at("sigma22").get<double>();
  p.sigma12 = j.at("sigma12").get<double>();
  return p;
}

json smith_params_to_json(const SmithParams& p) {
  return json{{"sigma11", p.sigma11},
              {"sigma22", p.sigma22},
              {"sigma12", p.sigma12}};
}

}  // namespace spex
