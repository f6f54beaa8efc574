#pragma once

#include <Eigen/Core>
#include <numbers>
#include <string_view>

namespace pushcraft {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Raw 3-vector [px, py, a] as manipulated by samplers, before projection.
using RawAction = Eigen::Vector3d;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Planar pose of the pushed box in the world frame.
struct BoxState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec3 vec() const { return {x, y, theta}; }
  static BoxState from(const Vec3& v) { return {v[0], v[1], wrap_angle(v[2])}; }
  bool finite() const;

  friend bool operator==(const BoxState&, const BoxState&) = default;
};

/// Residual `state - goal` with the angular part wrapped into (-pi, pi].
Vec3 state_residual(const BoxState& state, const BoxState& goal);

/// Push expressed in the object frame: unit direction (px, py) and the
/// perimeter-normalized contact location a in [0, 1].
class PushAction {
 public:
  PushAction() = default;

  /// Normalizes the direction; throws ConfigError on a zero direction,
  /// non-finite input, or a outside [0, 1].
  PushAction(double px, double py, double a);

  /// Projects an arbitrary raw vector onto a valid action: the direction is
  /// renormalized and a is clamped into [0, 1]. A zero direction maps to
  /// (0, 1).
  static PushAction project(const RawAction& raw);

  double px() const { return px_; }
  double py() const { return py_; }
  double a() const { return a_; }
  RawAction raw() const { return {px_, py_, a_}; }

  friend bool operator==(const PushAction&, const PushAction&) = default;

 private:
  double px_ = 0.0;
  double py_ = 1.0;
  double a_ = 0.0;
};

/// Forward-model output in physical units. `sigma` is the scalar uncertainty
/// used by the planners; learned models compute it on standardized outputs.
struct Prediction {
  Vec3 mean = Vec3::Zero();      // object-frame (dx, dy, dtheta)
  Vec3 variance = Vec3::Zero();  // per-dimension
  double sigma = 0.0;
};

/// How model inputs are formed from (state, action).
enum class FrameMode { object, world };

std::string_view to_string(FrameMode mode);
FrameMode frame_mode_from_string(std::string_view name);

/// Axis-aligned rectangle in the world (x, y) plane.
struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool well_ordered() const { return x_min < x_max && y_min < y_max; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

}  // namespace pushcraft
