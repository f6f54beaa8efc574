#include "pushcraft/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pushcraft/errors.hpp"

namespace pushcraft {

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::remainder(angle, two_pi);  // [-pi, pi]
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  return wrapped;
}

bool BoxState::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta);
}

Vec3 state_residual(const BoxState& state, const BoxState& goal) {
  return {state.x - goal.x, state.y - goal.y, wrap_angle(state.theta - goal.theta)};
}

PushAction::PushAction(double px, double py, double a) {
  if (!std::isfinite(px) || !std::isfinite(py) || !std::isfinite(a)) {
    throw ConfigError("PushAction: non-finite component");
  }
  const double norm = std::hypot(px, py);
  if (norm == 0.0) throw ConfigError("PushAction: zero push direction");
  if (a < 0.0 || a > 1.0) throw ConfigError("PushAction: contact location outside [0, 1]");
  px_ = px / norm;
  py_ = py / norm;
  a_ = a;
}

PushAction PushAction::project(const RawAction& raw) {
  PushAction out;
  const double norm = std::hypot(raw[0], raw[1]);
  if (std::isfinite(norm) && norm > 0.0) {
    out.px_ = raw[0] / norm;
    out.py_ = raw[1] / norm;
  }
  out.a_ = std::isfinite(raw[2]) ? std::clamp(raw[2], 0.0, 1.0) : 0.0;
  return out;
}

std::string_view to_string(FrameMode mode) {
  return mode == FrameMode::object ? "object" : "world";
}

FrameMode frame_mode_from_string(std::string_view name) {
  if (name == "object") return FrameMode::object;
  if (name == "world") return FrameMode::world;
  throw ConfigError("unknown frame_mode '" + std::string(name) + "' (expected object|world)");
}

}  // namespace pushcraft
