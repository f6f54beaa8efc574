#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pushcraft/forward_model.hpp"
#include "pushcraft/mppi.hpp"
#include "pushcraft/sim.hpp"

namespace pushcraft {

/// Action-marginalized uncertainty sampled at the centers of a regular
/// resolution x resolution grid over `bounds`. values[iy * resolution + ix].
struct HeatMap {
  Rect bounds;
  int resolution = 0;
  std::vector<double> values;

  double cell(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * resolution + ix]; }
  double& cell(int ix, int iy) { return values[static_cast<std::size_t>(iy) * resolution + ix]; }
  double cell_width() const { return bounds.width() / resolution; }
  double cell_height() const { return bounds.height() / resolution; }
  Vec2 cell_center(int ix, int iy) const;

  /// Bilinear interpolation between cell centers (constant extension to the
  /// border). Throws ConstraintViolation outside bounds.
  double sample(double x, double y) const;
  /// As sample(), with the query clamped into bounds first.
  double sample_clamped(double x, double y) const;
  /// Value of the cell containing (x, y); throws ConstraintViolation outside bounds.
  double nearest(double x, double y) const;

  double min_value() const;
  double max_value() const;
  /// Mean over cells whose centers satisfy `inside` (NaN if none).
  double mean_where(const std::function<bool(const Vec2&)>& inside) const;
};

/// Grid filled by evaluating `field` at each cell center.
HeatMap tabulate_field(const Rect& bounds, int resolution,
                       const std::function<double(const Vec2&)>& field);

/// Monte-Carlo estimate of the mean sigma over `n_mc` random pushes at every
/// cell-center state. Object-frame models use theta = 0; world-frame models
/// cycle sample k through theta = -pi + (k mod 8 + 1) * pi / 4.
/// Cells draw from independent streams derived from `seed`.
HeatMap build_heatmap(const ForwardModel& model, const SimParams& params, const Rect& bounds,
                      int resolution, int n_mc, std::uint64_t seed);

/// Synthetic two-lobe field: a broad high-uncertainty lobe straddling
/// x = center.x - 0.05 * width and a narrower one near the +x edge, leaving a
/// low-uncertainty corridor between them. Base level 0.1, lobe peaks ~1.1.
double two_lobe_value(const Rect& bounds, const Vec2& p);
HeatMap two_lobe_field(const Rect& bounds, int resolution);

/// Mean of sample_clamped over a list of states.
double mean_heat(const HeatMap& map, std::span<const BoxState> states);

struct StateBounds {
  Vec3 lower{-0.5, -0.5, -std::numbers::pi};
  Vec3 upper{0.5, 0.5, std::numbers::pi};

  static StateBounds from_workspace(const Rect& r) {
    return {{r.x_min, r.y_min, -std::numbers::pi}, {r.x_max, r.y_max, std::numbers::pi}};
  }
  bool contains(const BoxState& s) const;
};

/// Way-points; the first and last are the fixed start and goal.
struct StatePath {
  std::vector<BoxState> waypoints;

  std::size_t size() const { return waypoints.size(); }
};

struct TrajOptConfig {
  int samples = 30;      // N perturbed paths per iteration
  int waypoints = 12;    // T
  double alpha = 1.0;
  double lambda = 0.05;  // weight temperature
  double perturbation_std = 0.05;  // [m] per way-point, x and y
  double eps_threshold = 1e-6;     // minimum cost improvement per iteration
  int patience = 15;     // consecutive sub-threshold iterations before stopping
  int max_iters = 300;
  bool normalize_by_length = false;  // use alpha / T instead of alpha
  StateBounds bounds;

  void validate() const;
};

/// alpha * sum_i sigma(x_i) over every way-point (alpha / T if normalized).
/// Throws ConstraintViolation when a way-point lies outside the map.
double path_uncertainty_cost(const StatePath& path, const HeatMap& map, double alpha,
                             bool normalize_by_length = false);

/// Evenly spaced interpolation; theta follows the shorter arc.
StatePath initial_path(const BoxState& start, const BoxState& goal, int waypoints);

/// Wraps theta, then clamps each component into [lower, upper].
BoxState enforce_state_constraints(const BoxState& x, const StateBounds& bounds);

struct OptimizeResult {
  StatePath path;
  std::vector<double> cost_history;  // [initial, after iteration 1, ...]
  int iterations = 0;
};

/// Path-integral way-point refinement. Each iteration perturbs the interior
/// way-points in (x, y), weights the samples per way-point by their local
/// cost, moves every interior way-point by its weighted mean perturbation,
/// and keeps the result only if the path cost strictly decreases.
OptimizeResult optimize_path(const StatePath& init, const HeatMap& map, const TrajOptConfig& cfg,
                             Rng& rng);

/// Tracks way-points 1..T-1 in order with run_mppi (gamma forced to 0),
/// moving on once the current way-point is within tolerance. max_pushes is
/// the budget for the whole path.
EpisodeLog track_path(const StatePath& path, const ForwardModel& model, PushSystem& system,
                      const MppiConfig& mppi_cfg, Rng& rng);

}  // namespace pushcraft
