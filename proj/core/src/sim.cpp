#include "pushcraft/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pushcraft/errors.hpp"

namespace pushcraft {

void SimParams::validate() const {
  if (!(box_half_width > 0.0) || !(box_half_height > 0.0)) {
    throw ConfigError("sim: box half extents must be positive");
  }
  if (!(push_distance > 0.0)) throw ConfigError("sim: push_distance must be positive");
  if (!(rotation_gain > 0.0)) throw ConfigError("sim: rotation_gain must be positive");
  if (!(contact_noise_std >= 0.0)) throw ConfigError("sim: contact_noise_std must be >= 0");
  if (!workspace.well_ordered()) throw ConfigError("sim: workspace bounds are not well-ordered");
}

BoxState SimParams::workspace_center() const {
  const Vec2 c = workspace.center();
  return {c.x(), c.y(), 0.0};
}

namespace {

// Edges walked counterclockwise from the -y midpoint: half bottom, right,
// top, left, half bottom. Returns the edge index in [0, 5) and the arc length
// already consumed along it.
struct EdgeLocation {
  int edge;
  double along;
};

EdgeLocation locate(double a, const SimParams& p) {
  const double w = p.box_half_width;
  const double h = p.box_half_height;
  const double lengths[5] = {w, 2.0 * h, 2.0 * w, 2.0 * h, w};
  double s = std::clamp(a, 0.0, 1.0) * p.perimeter();
  for (int e = 0; e < 4; ++e) {
    if (s < lengths[e]) return {e, s};
    s -= lengths[e];
  }
  return {4, std::min(s, lengths[4])};
}

}  // namespace

Vec2 contact_point(double a, const SimParams& p) {
  const double w = p.box_half_width;
  const double h = p.box_half_height;
  const auto [edge, s] = locate(a, p);
  switch (edge) {
    case 0: return {s, -h};
    case 1: return {w, -h + s};
    case 2: return {w - s, h};
    case 3: return {-w, h - s};
    default: return {-w + s, -h};
  }
}

Vec2 inward_normal(double a, const SimParams& p) {
  switch (locate(a, p).edge) {
    case 1: return {-1.0, 0.0};
    case 2: return {0.0, -1.0};
    case 3: return {1.0, 0.0};
    default: return {0.0, 1.0};
  }
}

Vec3 push_displacement(const PushAction& action, const SimParams& params) {
  const Vec2 c = contact_point(action.a(), params);
  const double lever = c.x() * action.py() - c.y() * action.px();
  return {params.push_distance * action.px(), params.push_distance * action.py(),
          params.rotation_gain * lever};
}

BoxState apply_displacement(const BoxState& state, const Vec3& d) {
  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  return {state.x + c * d[0] - s * d[1], state.y + s * d[0] + c * d[1],
          wrap_angle(state.theta + d[2])};
}

Vec3 object_frame_delta(const BoxState& from, const BoxState& to) {
  const double c = std::cos(from.theta);
  const double s = std::sin(from.theta);
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(to.theta - from.theta)};
}

BoxState step(const BoxState& state, const PushAction& action, const SimParams& params, Rng& rng) {
  Vec3 d = push_displacement(action, params);
  if (params.contact_noise_std > 0.0) {
    for (int i = 0; i < 3; ++i) d[i] += params.contact_noise_std * standard_normal(rng);
  }
  return apply_displacement(state, d);
}

PushAction random_push(Rng& rng, const SimParams& params) {
  const double a = uniform01(rng);
  const Vec2 n = inward_normal(a, params);
  // Angle offset from the inward normal, uniform on [-pi/2, pi/2].
  const double offset = (uniform01(rng) - 0.5) * std::numbers::pi;
  const double c = std::cos(offset);
  const double s = std::sin(offset);
  return PushAction(c * n.x() - s * n.y(), s * n.x() + c * n.y(), a);
}

PushDataset collect_dataset(std::size_t n_pushes, const SimParams& params,
                            std::size_t reset_period, Rng& rng, FrameMode frame_mode) {
  if (n_pushes == 0) throw ConfigError("collect_dataset: n_pushes must be >= 1");
  if (reset_period == 0) throw ConfigError("collect_dataset: reset_period must be >= 1");
  params.validate();

  PushDataset out{params, frame_mode, {}};
  out.records.reserve(n_pushes);
  const BoxState center = params.workspace_center();
  BoxState state = center;
  std::size_t since_reset = 0;
  while (out.records.size() < n_pushes) {
    if (since_reset == reset_period) {
      state = center;
      since_reset = 0;
    }
    const PushAction action = random_push(rng, params);
    const BoxState next = step(state, action, params, rng);
    if (!params.workspace.contains(next.x, next.y)) {
      state = center;
      since_reset = 0;
      continue;
    }
    out.records.push_back({state, action, next});
    state = next;
    ++since_reset;
  }
  return out;
}

LesionResult lesion(const PushDataset& dataset, const Rect& region) {
  LesionResult result{{dataset.params, dataset.frame_mode, {}}, 0, false};
  for (const auto& r : dataset.records) {
    if (region.contains(r.state.x, r.state.y)) {
      ++result.removed;
    } else {
      result.dataset.records.push_back(r);
    }
  }
  result.empty_warning = result.dataset.records.empty();
  return result;
}

PushSystem::PushSystem(SimParams params, BoxState initial, std::uint64_t seed)
    : params_(params), state_(initial), rng_(seed) {
  params_.validate();
}

const BoxState& PushSystem::apply(const PushAction& action) {
  state_ = step(state_, action, params_, rng_);
  return state_;
}

}  // namespace pushcraft
