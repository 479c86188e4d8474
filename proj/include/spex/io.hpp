#pragma once

#include <string>

#include "spex/dataset.hpp"
#include "spex/estimate.hpp"
#include "spex/simulate.hpp"

#include "json.hpp"

namespace spex {

inline constexpr const char* kVersionTag = "spex 0.1.0";

// Round-trippable numeric formatting (17 significant digits).
std::string format_g17(double v);

// Dataset CSV (one column per site, coordinates embedded in the header)
// plus a JSON sidecar at <csv_path>.meta.json carrying sites, scale, seed
// and the simulation config echo.
void write_dataset(const Dataset& ds, const std::string& csv_path,
                   const nlohmann::json& config_echo = {});
Dataset read_dataset(const std::string& csv_path);

nlohmann::json fit_result_to_json(const FitResult& fit);

// Run manifest: every CLI output directory gets one, carrying the fully
// resolved configuration so any result can be regenerated from it.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
};

std::string timestamp_utc_now();
void write_manifest(const RunManifest& m, const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

SmithParams smith_params_from_json(const nlohmann::json& j);
nlohmann::json smith_params_to_json(const SmithParams& p);

}  // namespace spex
