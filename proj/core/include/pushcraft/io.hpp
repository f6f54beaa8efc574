#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushcraft/forward_model.hpp"
#include "pushcraft/mppi.hpp"
#include "pushcraft/sim.hpp"
#include "pushcraft/trajopt.hpp"

namespace pushcraft {

using Json = nlohmann::json;

Json to_json(const SimParams& p);
SimParams sim_params_from_json(const Json& j);
Json to_json(const BoxState& s);
BoxState box_state_from_json(const Json& j);

/// Header line, then one {"state","action","next"} object per line.
void write_dataset(std::ostream& out, const PushDataset& dataset);
void write_dataset(const std::filesystem::path& path, const PushDataset& dataset);
/// Throws ParseError with the offending 1-based line number.
PushDataset read_dataset(std::istream& in, const std::string& name = "<stream>");
PushDataset read_dataset(const std::filesystem::path& path);

Json to_json(const Ensemble& ensemble);
Json to_json(const GpModel& model);
Ensemble ensemble_from_json(const Json& j);
GpModel gp_model_from_json(const Json& j);

/// Serializes an "emdn", "gp" or "oracle" model.
Json model_to_json(const ForwardModel& model);
std::unique_ptr<ForwardModel> model_from_json(const Json& j);
void save_model(const std::filesystem::path& path, const ForwardModel& model);
std::unique_ptr<ForwardModel> load_model(const std::filesystem::path& path);

/// Header object (model, initial state and cost), one object per push, then
/// a footer with the final state, cost and convergence flag.
void write_episode(const std::filesystem::path& path, const EpisodeLog& log);

struct SummaryRow {
  std::string experiment;
  std::string config_hash;
  std::string model;
  std::string label;
  std::uint64_t seed = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::size_t steps = 0;
  bool converged = false;
};

inline constexpr const char* kSummaryHeader =
    "experiment,config_hash,model,label,seed,initial_cost,final_cost,steps,converged";
std::string summary_line(const SummaryRow& row);
/// Creates the file with a header if it does not exist, then appends a row.
void append_summary(const std::filesystem::path& path, const SummaryRow& row);

/// One CSV row per grid row (y ascending), one column per cell (x ascending).
void write_heatmap_csv(const std::filesystem::path& path, const HeatMap& map);
HeatMap read_heatmap_csv(const std::filesystem::path& path, const Rect& bounds);

struct Overlay {
  std::vector<Vec2> points;
  std::string color;
};
void write_heatmap_svg(const std::filesystem::path& path, const HeatMap& map,
                       const std::vector<Overlay>& overlays = {});

Json to_json(const StatePath& path);
StatePath state_path_from_json(const Json& j);
void write_state_path(const std::filesystem::path& path, const StatePath& states);
StatePath read_state_path(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace pushcraft
