#pragma once

#include <cstddef>
#include <vector>

#include "pushcraft/random.hpp"
#include "pushcraft/types.hpp"

namespace pushcraft {

/// Parameters of the analytic quasi-static push model.
///
/// A push translates the box by `push_distance` along the push direction and
/// rotates it by `rotation_gain` times the signed lever arm of the push line
/// about the box center. The lever arm is the z-component of c x p, where c is
/// the contact point and p the unit push direction, both in the object frame.
struct SimParams {
  double box_half_width = 0.06;   // along object x [m]
  double box_half_height = 0.04;  // along object y [m]
  double push_distance = 0.05;    // [m] per push
  double rotation_gain = 3.0;     // [rad / m of lever arm]
  double contact_noise_std = 0.002;
  Rect workspace{-0.5, 0.5, -0.5, 0.5};

  /// Throws ConfigError when a length is non-positive, the noise is
  /// negative, or the workspace is not well-ordered.
  void validate() const;

  double perimeter() const { return 4.0 * (box_half_width + box_half_height); }
  BoxState workspace_center() const;

  friend bool operator==(const SimParams&, const SimParams&) = default;
};

/// Contact point on the box boundary (object frame) at perimeter fraction a,
/// measured counterclockwise from the midpoint of the -y edge.
Vec2 contact_point(double a, const SimParams& params);

/// Unit normal pointing into the box at the contact point for fraction a.
Vec2 inward_normal(double a, const SimParams& params);

/// Deterministic object-frame displacement (dx, dy, dtheta) of one push.
Vec3 push_displacement(const PushAction& action, const SimParams& params);

/// Applies an object-frame displacement to a world-frame state and wraps theta.
BoxState apply_displacement(const BoxState& state, const Vec3& object_delta);

/// Object-frame displacement that takes `from` to `to`, inverse of
/// apply_displacement up to angle wrapping.
Vec3 object_frame_delta(const BoxState& from, const BoxState& to);

/// One noisy push. Noise is additive Gaussian on each displacement component.
BoxState step(const BoxState& state, const PushAction& action, const SimParams& params, Rng& rng);

/// Uniform contact location, direction uniform over the inward half-circle at
/// that contact.
PushAction random_push(Rng& rng, const SimParams& params);

struct PushRecord {
  BoxState state;
  PushAction action;
  BoxState next;

  friend bool operator==(const PushRecord&, const PushRecord&) = default;
};

struct PushDataset {
  SimParams params;
  FrameMode frame_mode = FrameMode::object;
  std::vector<PushRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  friend bool operator==(const PushDataset&, const PushDataset&) = default;
};

/// Random pushes from the workspace center. The state is reset to the center
/// every `reset_period` pushes; a push whose outcome leaves the workspace is
/// discarded and also triggers a reset, so every record ends in bounds.
PushDataset collect_dataset(std::size_t n_pushes, const SimParams& params,
                            std::size_t reset_period, Rng& rng,
                            FrameMode frame_mode = FrameMode::object);

struct LesionResult {
  PushDataset dataset;
  std::size_t removed = 0;
  bool empty_warning = false;
};

/// Drops every record whose input (x, y) lies inside `region` (closed).
LesionResult lesion(const PushDataset& dataset, const Rect& region);

/// Stateful ground-truth system the controllers act on.
class PushSystem {
 public:
  PushSystem(SimParams params, BoxState initial, std::uint64_t seed);

  const BoxState& state() const { return state_; }
  const SimParams& params() const { return params_; }
  const BoxState& apply(const PushAction& action);
  void reset(const BoxState& state) { state_ = state; }

 private:
  SimParams params_;
  BoxState state_;
  Rng rng_;
};

}  // namespace pushcraft
