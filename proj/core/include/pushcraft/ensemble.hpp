#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pushcraft/mdn.hpp"
#include "pushcraft/sim.hpp"
#include "pushcraft/types.hpp"

namespace pushcraft {

/// Model input h for a (state, action) pair:
/// object mode [px, py, a]; world mode [x, y, theta, px, py, a].
Eigen::VectorXd model_input(FrameMode mode, const BoxState& state, const PushAction& action);
int model_input_dim(FrameMode mode);

/// Raw regression data: inputs per frame mode, targets are object-frame
/// displacements (dx, dy, dtheta).
struct TrainingData {
  RowMatrix inputs;
  RowMatrix targets;
};
TrainingData make_training_data(const PushDataset& dataset);

/// Per-dimension standardization of inputs and targets.
struct Normalization {
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_std;
  Vec3 target_mean = Vec3::Zero();
  Vec3 target_std = Vec3::Ones();

  /// Identity transform for `input_dim` inputs.
  static Normalization identity(int input_dim);
  /// Column means and population standard deviations (std floored to 1 when
  /// a column is constant).
  static Normalization fit(const TrainingData& data);

  Eigen::VectorXd standardize_input(const Eigen::VectorXd& h) const;
  Vec3 standardize_target(const Vec3& t) const;
  Vec3 destandardize_mean(const Vec3& m) const;
  Vec3 destandardize_variance(const Vec3& v) const;
  TrainingData standardize(const TrainingData& data) const;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// First two moments of one member's predictive distribution.
struct MemberMoments {
  Vec3 mean = Vec3::Zero();
  Vec3 variance = Vec3::Zero();
};

/// Collapses a mixture to its mean and total variance per dimension.
MemberMoments mixture_moments(const Mixture& mixture);

/// Uniform mixture over members: mean is the average member mean, variance
/// is mean(sigma^2 + mu^2) - mean^2, clamped at zero.
MemberMoments combine_member_moments(std::span<const MemberMoments> members);

struct Ensemble {
  FrameMode frame_mode = FrameMode::object;
  Normalization normalization;
  std::vector<MdnParams> members;

  std::size_t size() const { return members.size(); }
  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

/// Moments in standardized output units, before de-normalization.
MemberMoments ensemble_moments_standardized(const Ensemble& ensemble, const BoxState& state,
                                            const PushAction& action);

/// Predictive mean and variance in physical units; sigma is
/// sqrt(sum of standardized variances).
Prediction ensemble_predict(const Ensemble& ensemble, const BoxState& state,
                            const PushAction& action);

/// Trains one member on a dataset using its own normalization.
TrainResult train_member(const PushDataset& dataset, const TrainConfig& cfg, Rng& rng);

struct EnsembleTrainingReport {
  std::vector<std::vector<double>> loss_histories;
  double final_loss() const;
};

/// Trains `members` MDNs; member i is initialized and shuffled by an
/// Rng seeded with seed + i. Members train concurrently.
Ensemble train_ensemble(const PushDataset& dataset, const TrainConfig& cfg, int members,
                        std::uint64_t seed, EnsembleTrainingReport* report = nullptr);

}  // namespace pushcraft
