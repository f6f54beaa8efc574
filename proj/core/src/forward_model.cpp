#include "pushcraft/forward_model.hpp"

#include <cmath>

namespace pushcraft {

OracleModel::OracleModel(SimParams params) : params_(params) { params_.validate(); }

Prediction OracleModel::predict(const BoxState&, const PushAction& action) const {
  const double var = params_.contact_noise_std * params_.contact_noise_std;
  Prediction p;
  p.mean = push_displacement(action, params_);
  p.variance = Vec3::Constant(var);
  p.sigma = std::sqrt(3.0) * params_.contact_noise_std;
  return p;
}

NextState predict_next_state(const ForwardModel& model, const BoxState& state,
                             const PushAction& action) {
  const Prediction p = model.predict(state, action);
  return {apply_displacement(state, p.mean), p.sigma};
}

double sigma_at(const ForwardModel& model, const BoxState& state, const PushAction& action) {
  return model.predict(state, action).sigma;
}

}  // namespace pushcraft
