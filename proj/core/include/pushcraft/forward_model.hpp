#pragma once

#include <memory>
#include <string>

#include "pushcraft/ensemble.hpp"
#include "pushcraft/gp.hpp"
#include "pushcraft/sim.hpp"

namespace pushcraft {

/// Uniform prediction interface shared by the planners. Implementations are
/// immutable and safe for concurrent predict() calls.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  /// Object-frame displacement distribution for (state, action); deterministic.
  virtual Prediction predict(const BoxState& state, const PushAction& action) const = 0;
  /// Backend tag: "emdn", "gp" or "oracle".
  virtual std::string descriptor() const = 0;
  virtual FrameMode frame_mode() const = 0;
};

class EnsembleModel final : public ForwardModel {
 public:
  explicit EnsembleModel(Ensemble ensemble) : ensemble_(std::move(ensemble)) {}
  Prediction predict(const BoxState& state, const PushAction& action) const override {
    return ensemble_predict(ensemble_, state, action);
  }
  std::string descriptor() const override { return "emdn"; }
  FrameMode frame_mode() const override { return ensemble_.frame_mode; }
  const Ensemble& ensemble() const { return ensemble_; }

 private:
  Ensemble ensemble_;
};

class GpForwardModel final : public ForwardModel {
 public:
  explicit GpForwardModel(GpModel model) : model_(std::move(model)) {}
  Prediction predict(const BoxState& state, const PushAction& action) const override {
    return gp_predict(model_, state, action);
  }
  std::string descriptor() const override { return "gp"; }
  FrameMode frame_mode() const override { return model_.frame_mode; }
  const GpModel& model() const { return model_; }

 private:
  GpModel model_;
};

/// The noise-free simulator as a model. Its uncertainty is the known,
/// isotropic injected noise: sigma = sqrt(3) * contact_noise_std.
class OracleModel final : public ForwardModel {
 public:
  explicit OracleModel(SimParams params);
  Prediction predict(const BoxState& state, const PushAction& action) const override;
  std::string descriptor() const override { return "oracle"; }
  FrameMode frame_mode() const override { return FrameMode::object; }
  const SimParams& params() const { return params_; }

 private:
  SimParams params_;
};

struct NextState {
  BoxState state;
  double sigma = 0.0;
};

/// Mean next state: the object-frame mean displacement rotated into the world
/// frame and added to the state.
NextState predict_next_state(const ForwardModel& model, const BoxState& state,
                             const PushAction& action);

double sigma_at(const ForwardModel& model, const BoxState& state, const PushAction& action);

}  // namespace pushcraft
