#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pushcraft/gp.hpp"
#include "pushcraft/io.hpp"
#include "pushcraft/mdn.hpp"
#include "pushcraft/mppi.hpp"
#include "pushcraft/sim.hpp"
#include "pushcraft/trajopt.hpp"

namespace pushcraft {

struct DataConfig {
  std::size_t pushes = 326;
  std::size_t reset_period = 20;
  FrameMode frame_mode = FrameMode::object;
  bool lesion = false;
  Rect lesion_region{-0.5, 0.0, -0.25, 0.25};

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct ModelConfig {
  std::string kind = "emdn";  // emdn | gp | oracle
  int members = 10;
  TrainConfig train;
  GpFitOptions gp;
};

struct HeatmapConfig {
  int resolution = 20;
  int n_mc = 32;
};

struct TrajoptSection {
  TrajOptConfig optimizer;
  BoxState start{0.0, -0.4, 0.0};
  BoxState goal{0.0, 0.4, 0.0};
  std::string field = "model";  // model | flat | two_lobe
};

/// Every setting of one run. All fields have defaults; JSON input may give
/// any subset, and unknown keys are rejected.
struct ExperimentConfig {
  SimParams sim;
  DataConfig data;
  ModelConfig model;
  MppiConfig mppi;
  BoxState start{-0.25, -0.25, 0.0};
  HeatmapConfig heatmap;
  TrajoptSection trajopt;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  void validate() const;
};

/// Fully resolved document with every field present.
Json to_json(const ExperimentConfig& cfg);
/// Overlays `j` on the defaults. Throws ConfigError naming the offending key
/// for unknown keys and wrong types. An "h" key in "mppi" is read into lambda
/// when lambda itself is absent.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the compact dump of the resolved config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace pushcraft
