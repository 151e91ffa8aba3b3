#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "qhd/core_model.hpp"
#include "qhd/estimator.hpp"
#include "qhd/inference.hpp"
#include "qhd/simulator.hpp"

namespace qhd {

// Environment variable naming the default configuration file.
inline constexpr const char* kConfigEnvVar = "QHD_CONFIG";

struct ServeConfig {
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string static_dir;                   // UI assets; empty serves a placeholder page
  std::string output = "sessions.csv";      // completed sessions are appended here
  bool require_implemented_tasks = true;    // implemented work must be counted out task by task
  int mandatory_tasks = 10;
};

struct RunConfig {
  double omega = kDefaultOmega;
  RateSchedule schedule{};
  // Subjects per cell, indexed by TreatmentCell::index(). Illustrative defaults.
  std::array<int, 4> cell_sizes{50, 100, 50, 100};
  // Generative betas per cell (baseline, CD, CR, CR+CD) and common delta, alpha.
  std::array<double, 4> betas{1.009, 0.921, 0.679, 0.581};
  double delta = 0.986;
  double alpha = 1.282;
  double sigma = 0.8;
  std::uint64_t seed = 20191028;
  bool cluster_correction = true;
  TestScale test_scale = TestScale::beta;
  int restarts = 4;
  ServeConfig serve{};

  void validate() const;
  PopulationSpec population() const;
  FitOptions fit_options() const;
};

nlohmann::json to_json(const RunConfig& config);
// Keys absent from `j` keep their current value in `config`; unknown keys are errors.
void merge_json(RunConfig& config, const nlohmann::json& j);

// Defaults, overlaid by `path` when given, else by the file named in
// QHD_CONFIG when set.
RunConfig load_config(const std::optional<std::filesystem::path>& path);

} // namespace qhd
