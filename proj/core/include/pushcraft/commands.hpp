#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pushcraft/config.hpp"

namespace pushcraft {

/// Dataset per config: collection seeded from cfg.seed, lesioned when
/// cfg.data.lesion is set.
LesionResult collect_for(const ExperimentConfig& cfg);

/// Trains the configured backend; `score` receives the final training NLL
/// (emdn) or the log marginal likelihood (gp).
std::unique_ptr<ForwardModel> train_model(const ExperimentConfig& cfg, const PushDataset& data,
                                          double* score = nullptr);

/// Loads `model_path`, or builds the oracle when the path is empty and
/// model.kind is "oracle".
std::unique_ptr<ForwardModel> resolve_model(const ExperimentConfig& cfg,
                                            const std::filesystem::path& model_path);

/// Writes <out>/dataset.jsonl and returns the record count.
std::size_t cmd_collect(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Writes <out>/model.json.
void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& dataset,
               const std::filesystem::path& out, std::ostream& log);

/// Writes <out>/episode.jsonl and appends to <out>/summary.csv.
EpisodeLog cmd_plan(const ExperimentConfig& cfg, const ForwardModel& model,
                    const std::filesystem::path& out, std::ostream& log);

/// Writes <out>/heatmap.csv and <out>/heatmap.svg.
HeatMap cmd_heatmap(const ExperimentConfig& cfg, const ForwardModel& model,
                    const std::filesystem::path& out, std::ostream& log);

struct TrajoptOutcome {
  HeatMap map;
  StatePath initial;
  OptimizeResult optimized;
  EpisodeLog tracking;
};

/// initial_path, optimize_path and track_path against the configured field.
/// Writes path.json, trajopt_costs.csv, tracking.jsonl and the heat map.
TrajoptOutcome cmd_trajopt(const ExperimentConfig& cfg, const ForwardModel& model,
                           const std::filesystem::path& out, std::ostream& log);

struct Check {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

struct ReproReport {
  int experiment = 0;
  std::vector<Check> checks;
  /// CSV and JSON outputs, relative to the experiment directory.
  std::vector<std::filesystem::path> data_files;
  double seconds = 0.0;

  bool passed() const;
};

/// Canned configuration of reproduction experiment 1..4.
ExperimentConfig canned_config(int experiment);

/// Runs experiment 1..4 end to end into <out>/exp<N>, writing a report.txt
/// with measured values against their thresholds. A failing stage is
/// rethrown with the stage name prepended.
ReproReport cmd_repro(int experiment, const ExperimentConfig& cfg, const std::filesystem::path& out,
                      std::ostream& log);

}  // namespace pushcraft
