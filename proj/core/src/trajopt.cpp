#include "pushcraft/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pushcraft/errors.hpp"
#include "pushcraft/parallel.hpp"

namespace pushcraft {

Vec2 HeatMap::cell_center(int ix, int iy) const {
  return {bounds.x_min + (ix + 0.5) * cell_width(), bounds.y_min + (iy + 0.5) * cell_height()};
}

namespace {

void require_inside(const HeatMap& map, double x, double y) {
  if (!map.bounds.contains(x, y)) {
    throw ConstraintViolation("point (" + std::to_string(x) + ", " + std::to_string(y) +
                              ") lies outside the heat-map bounds");
  }
}

}  // namespace

double HeatMap::sample(double x, double y) const {
  require_inside(*this, x, y);
  return sample_clamped(x, y);
}

double HeatMap::sample_clamped(double x, double y) const {
  const double max_index = resolution - 1;
  const double u = std::clamp((x - bounds.x_min) / cell_width() - 0.5, 0.0, max_index);
  const double v = std::clamp((y - bounds.y_min) / cell_height() - 0.5, 0.0, max_index);
  const int i0 = std::min(static_cast<int>(u), resolution - 1);
  const int j0 = std::min(static_cast<int>(v), resolution - 1);
  const int i1 = std::min(i0 + 1, resolution - 1);
  const int j1 = std::min(j0 + 1, resolution - 1);
  const double fu = u - i0;
  const double fv = v - j0;
  const double bottom = (1.0 - fu) * cell(i0, j0) + fu * cell(i1, j0);
  const double top = (1.0 - fu) * cell(i0, j1) + fu * cell(i1, j1);
  return (1.0 - fv) * bottom + fv * top;
}

double HeatMap::nearest(double x, double y) const {
  require_inside(*this, x, y);
  const int ix = std::clamp(static_cast<int>((x - bounds.x_min) / cell_width()), 0, resolution - 1);
  const int iy = std::clamp(static_cast<int>((y - bounds.y_min) / cell_height()), 0, resolution - 1);
  return cell(ix, iy);
}

double HeatMap::min_value() const { return *std::min_element(values.begin(), values.end()); }
double HeatMap::max_value() const { return *std::max_element(values.begin(), values.end()); }

double HeatMap::mean_where(const std::function<bool(const Vec2&)>& inside) const {
  double sum = 0.0;
  int count = 0;
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      if (inside(cell_center(ix, iy))) {
        sum += cell(ix, iy);
        ++count;
      }
    }
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / count;
}

HeatMap tabulate_field(const Rect& bounds, int resolution,
                       const std::function<double(const Vec2&)>& field) {
  if (resolution < 1) throw ConfigError("heat map resolution must be >= 1");
  if (!bounds.well_ordered()) throw ConfigError("heat map bounds are not well-ordered");
  HeatMap map{bounds, resolution, std::vector<double>(static_cast<std::size_t>(resolution) * resolution)};
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) map.cell(ix, iy) = field(map.cell_center(ix, iy));
  }
  return map;
}

HeatMap build_heatmap(const ForwardModel& model, const SimParams& params, const Rect& bounds,
                      int resolution, int n_mc, std::uint64_t seed) {
  if (resolution < 2) throw ConfigError("build_heatmap: resolution must be >= 2");
  if (n_mc < 1) throw ConfigError("build_heatmap: n_mc must be >= 1");
  HeatMap map = tabulate_field(bounds, resolution, [](const Vec2&) { return 0.0; });
  const bool world = model.frame_mode() == FrameMode::world;
  parallel_for(map.values.size(), [&](std::size_t idx) {
    const int ix = static_cast<int>(idx % resolution);
    const int iy = static_cast<int>(idx / resolution);
    const Vec2 c = map.cell_center(ix, iy);
    Rng rng = make_rng(seed, idx);
    double sum = 0.0;
    for (int k = 0; k < n_mc; ++k) {
      const double theta = world ? -std::numbers::pi + ((k % 8) + 1) * std::numbers::pi / 4.0 : 0.0;
      sum += sigma_at(model, {c.x(), c.y(), theta}, random_push(rng, params));
    }
    map.values[idx] = sum / n_mc;
  });
  return map;
}

double two_lobe_value(const Rect& b, const Vec2& p) {
  const double w = b.width();
  const double h = b.height();
  const Vec2 c = b.center();
  auto lobe = [](double dx, double dy, double sx, double sy) {
    return std::exp(-0.5 * (dx * dx / (sx * sx) + dy * dy / (sy * sy)));
  };
  const double main = lobe(p.x() - (c.x() - 0.05 * w), p.y() - c.y(), 0.15 * w, 0.15 * h);
  const double side = lobe(p.x() - (c.x() + 0.55 * w), p.y() - c.y(), 0.1 * w, 0.2 * h);
  return 0.1 + main + side;
}

HeatMap two_lobe_field(const Rect& bounds, int resolution) {
  return tabulate_field(bounds, resolution, [&](const Vec2& p) { return two_lobe_value(bounds, p); });
}

double mean_heat(const HeatMap& map, std::span<const BoxState> states) {
  if (states.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : states) sum += map.sample_clamped(s.x, s.y);
  return sum / static_cast<double>(states.size());
}

bool StateBounds::contains(const BoxState& s) const {
  const Vec3 v = s.vec();
  return (v.array() >= lower.array()).all() && (v.array() <= upper.array()).all();
}

void TrajOptConfig::validate() const {
  if (samples < 1) throw ConfigError("trajopt: samples must be >= 1");
  if (waypoints < 2) throw ConfigError("trajopt: waypoints must be >= 2");
  if (!(alpha > 0.0)) throw ConfigError("trajopt: alpha must be > 0");
  if (!(lambda > 0.0)) throw ConfigError("trajopt: lambda must be > 0");
  if (!(perturbation_std > 0.0)) throw ConfigError("trajopt: perturbation_std must be > 0");
  if (!(eps_threshold > 0.0)) throw ConfigError("trajopt: eps_threshold must be > 0");
  if (patience < 1) throw ConfigError("trajopt: patience must be >= 1");
  if (max_iters < 0) throw ConfigError("trajopt: max_iters must be >= 0");
  if (!(bounds.lower.array() <= bounds.upper.array()).all()) {
    throw ConfigError("trajopt: state bounds are not well-ordered");
  }
}

double path_uncertainty_cost(const StatePath& path, const HeatMap& map, double alpha,
                             bool normalize_by_length) {
  const double scale = normalize_by_length && !path.waypoints.empty()
                           ? alpha / static_cast<double>(path.size())
                           : alpha;
  double sum = 0.0;
  for (const auto& w : path.waypoints) sum += map.sample(w.x, w.y);
  return scale * sum;
}

StatePath initial_path(const BoxState& start, const BoxState& goal, int waypoints) {
  if (waypoints < 2) throw ConfigError("initial_path: at least two way-points required");
  StatePath path;
  path.waypoints.reserve(static_cast<std::size_t>(waypoints));
  const double dtheta = wrap_angle(goal.theta - start.theta);
  for (int i = 0; i < waypoints; ++i) {
    if (i == 0) {
      path.waypoints.push_back(start);
    } else if (i == waypoints - 1) {
      path.waypoints.push_back(goal);
    } else {
      const double t = static_cast<double>(i) / (waypoints - 1);
      path.waypoints.push_back({start.x + t * (goal.x - start.x), start.y + t * (goal.y - start.y),
                                wrap_angle(start.theta + t * dtheta)});
    }
  }
  return path;
}

BoxState enforce_state_constraints(const BoxState& x, const StateBounds& bounds) {
  return {std::clamp(x.x, bounds.lower[0], bounds.upper[0]),
          std::clamp(x.y, bounds.lower[1], bounds.upper[1]),
          std::clamp(wrap_angle(x.theta), bounds.lower[2], bounds.upper[2])};
}

OptimizeResult optimize_path(const StatePath& init, const HeatMap& map, const TrajOptConfig& cfg,
                             Rng& rng) {
  cfg.validate();
  OptimizeResult result{init, {}, 0};
  StatePath& path = result.path;
  const std::size_t T = path.size();
  if (T < 2) throw ConfigError("optimize_path: path needs at least two way-points");
  if (!cfg.bounds.contains(path.waypoints.front()) || !cfg.bounds.contains(path.waypoints.back())) {
    throw ConstraintViolation("optimize_path: endpoints violate the state bounds");
  }
  for (std::size_t i = 1; i + 1 < T; ++i) {
    path.waypoints[i] = enforce_state_constraints(path.waypoints[i], cfg.bounds);
  }
  const double scale = cfg.normalize_by_length ? cfg.alpha / static_cast<double>(T) : cfg.alpha;
  double cost = path_uncertainty_cost(path, map, cfg.alpha, cfg.normalize_by_length);
  result.cost_history.push_back(cost);
  if (T == 2) return result;

  const auto samples = static_cast<std::size_t>(cfg.samples);
  const std::size_t interior = T - 2;
  // Per sample, per interior way-point: effective (clamped) displacement and local cost.
  std::vector<std::vector<Vec2>> offsets(samples, std::vector<Vec2>(interior));
  std::vector<std::vector<double>> local(samples, std::vector<double>(interior));
  std::vector<double> column(samples);

  int stalled = 0;
  while (result.iterations < cfg.max_iters) {
    ++result.iterations;
    const std::uint64_t iter_seed = rng();
    parallel_for(samples, [&](std::size_t n) {
      Rng stream = make_rng(iter_seed, n);
      for (std::size_t k = 0; k < interior; ++k) {
        const BoxState& x = path.waypoints[k + 1];
        BoxState cand = x;
        cand.x += cfg.perturbation_std * standard_normal(stream);
        cand.y += cfg.perturbation_std * standard_normal(stream);
        cand = enforce_state_constraints(cand, cfg.bounds);
        offsets[n][k] = {cand.x - x.x, cand.y - x.y};
        local[n][k] = scale * map.sample_clamped(cand.x, cand.y);
      }
    });

    StatePath proposal = path;
    for (std::size_t k = 0; k < interior; ++k) {
      for (std::size_t n = 0; n < samples; ++n) column[n] = local[n][k];
      const std::vector<double> w = compute_weights(column, cfg.lambda);
      Vec2 delta = Vec2::Zero();
      for (std::size_t n = 0; n < samples; ++n) delta += w[n] * offsets[n][k];
      BoxState& x = proposal.waypoints[k + 1];
      x.x += delta.x();
      x.y += delta.y();
      x = enforce_state_constraints(x, cfg.bounds);
    }

    const double proposed = path_uncertainty_cost(proposal, map, cfg.alpha, cfg.normalize_by_length);
    double improvement = 0.0;
    if (proposed < cost) {
      improvement = cost - proposed;
      path = std::move(proposal);
      cost = proposed;
    }
    result.cost_history.push_back(cost);
    stalled = improvement < cfg.eps_threshold ? stalled + 1 : 0;
    if (stalled >= cfg.patience) break;
  }
  return result;
}

EpisodeLog track_path(const StatePath& path, const ForwardModel& model, PushSystem& system,
                      const MppiConfig& mppi_cfg, Rng& rng) {
  if (path.size() < 2) throw ConfigError("track_path: path needs at least two way-points");
  mppi_cfg.validate();
  MppiConfig cfg = mppi_cfg;
  cfg.gamma = 0.0;
  cfg.goal = path.waypoints.back();

  EpisodeLog log;
  log.model = model.descriptor();
  log.initial_state = system.state();
  log.initial_cost = final_cost(system.state(), cfg);

  int budget = mppi_cfg.max_pushes;
  for (std::size_t k = 1; k < path.size(); ++k) {
    MppiConfig segment = cfg;
    segment.goal = path.waypoints[k];
    segment.max_pushes = budget;
    EpisodeLog part = run_mppi(model, system, segment, rng);
    budget -= static_cast<int>(part.push_count());
    log.pushes.insert(log.pushes.end(), part.pushes.begin(), part.pushes.end());
    if (!part.converged && budget <= 0) break;
  }
  log.final_state = system.state();
  log.final_cost = final_cost(system.state(), cfg);
  log.converged = log.final_cost <= cfg.goal_tolerance;
  return log;
}

}  // namespace pushcraft
