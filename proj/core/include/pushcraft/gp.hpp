#pragma once

#include <Eigen/Core>
#include <array>

#include "pushcraft/ensemble.hpp"
#include "pushcraft/random.hpp"
#include "pushcraft/sim.hpp"

namespace pushcraft {

/// Squared-exponential ARD hyperparameters for one output dimension.
struct GpHyper {
  double signal_variance = 1.0;
  Eigen::VectorXd length_scales;
  double noise_variance = 1e-2;

  static GpHyper defaults(int input_dim);
  /// [log s2, log l_1 .. log l_d, log noise]
  Eigen::VectorXd to_log() const;
  static GpHyper from_log(const Eigen::VectorXd& log_params);
  void validate() const;

  friend bool operator==(const GpHyper&, const GpHyper&) = default;
};

/// s2 * exp(-0.5 * sum_j ((a_j - b_j) / l_j)^2)
double se_ard_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                     const Eigen::Ref<const Eigen::VectorXd>& b, const GpHyper& hyper);

struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;  // includes observation noise
};

/// Exact single-output GP on standardized data with a cached Cholesky factor.
class GpDimension {
 public:
  GpDimension() = default;
  /// Factorizes K + noise*I, escalating jitter 1e-10 .. 1e-6 if needed;
  /// throws FitError when that still fails.
  GpDimension(RowMatrix inputs, Eigen::VectorXd targets, GpHyper hyper);

  GpPosterior predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double log_marginal_likelihood() const { return lml_; }
  const GpHyper& hyper() const { return hyper_; }
  double jitter() const { return jitter_; }
  const RowMatrix& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }

 private:
  RowMatrix inputs_;
  Eigen::VectorXd targets_;
  GpHyper hyper_;
  Eigen::MatrixXd chol_;  // lower-triangular factor
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
  double jitter_ = 0.0;
};

/// Log marginal likelihood and its gradient with respect to GpHyper::to_log().
struct LmlGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
LmlGradient log_marginal_likelihood_gradient(const RowMatrix& inputs,
                                             const Eigen::VectorXd& targets,
                                             const GpHyper& hyper);

struct GpFitOptions {
  bool optimize = true;
  int restarts = 2;     // random restarts in addition to the default start
  int iterations = 60;  // ascent steps per start

  friend bool operator==(const GpFitOptions&, const GpFitOptions&) = default;
};

/// Independent GP per output dimension over standardized inputs/targets.
struct GpModel {
  FrameMode frame_mode = FrameMode::object;
  Normalization normalization;
  std::array<GpDimension, kOutputDim> dims;

  double log_marginal_likelihood() const;
};

inline constexpr std::size_t kMaxGpPoints = 5000;

/// Fits hyperparameters by gradient ascent on the log marginal likelihood
/// (best of the default start and `restarts` random starts) when
/// options.optimize, else uses GpHyper::defaults.
GpModel gp_fit(const PushDataset& dataset, const GpFitOptions& options, Rng& rng);

/// Builds a model with fixed hyperparameters per dimension.
GpModel gp_fit_fixed(const PushDataset& dataset, const std::array<GpHyper, kOutputDim>& hyper);

/// Rebuilds a model from standardized training data (used on load).
GpModel gp_from_standardized(FrameMode mode, Normalization normalization, const RowMatrix& inputs,
                             const RowMatrix& targets,
                             const std::array<GpHyper, kOutputDim>& hyper);

Prediction gp_predict(const GpModel& model, const BoxState& state, const PushAction& action);

}  // namespace pushcraft
