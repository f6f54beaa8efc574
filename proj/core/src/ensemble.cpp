#include "pushcraft/ensemble.hpp"

#include <cassert>
#include <cmath>

#include "pushcraft/errors.hpp"
#include "pushcraft/parallel.hpp"

namespace pushcraft {

int model_input_dim(FrameMode mode) { return mode == FrameMode::object ? 3 : 6; }

Eigen::VectorXd model_input(FrameMode mode, const BoxState& state, const PushAction& action) {
  if (mode == FrameMode::object) {
    return Eigen::Vector3d(action.px(), action.py(), action.a());
  }
  Eigen::VectorXd h(6);
  h << state.x, state.y, state.theta, action.px(), action.py(), action.a();
  return h;
}

TrainingData make_training_data(const PushDataset& dataset) {
  const int dim = model_input_dim(dataset.frame_mode);
  TrainingData data;
  data.inputs.resize(static_cast<Eigen::Index>(dataset.size()), dim);
  data.targets.resize(static_cast<Eigen::Index>(dataset.size()), kOutputDim);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset.records[i];
    const auto row = static_cast<Eigen::Index>(i);
    data.inputs.row(row) = model_input(dataset.frame_mode, r.state, r.action).transpose();
    data.targets.row(row) = object_frame_delta(r.state, r.next).transpose();
  }
  return data;
}

Normalization Normalization::identity(int input_dim) {
  Normalization n;
  n.input_mean = Eigen::VectorXd::Zero(input_dim);
  n.input_std = Eigen::VectorXd::Ones(input_dim);
  return n;
}

namespace {

void column_stats(const RowMatrix& m, Eigen::VectorXd& mean, Eigen::VectorXd& stddev) {
  const auto rows = static_cast<double>(m.rows());
  mean = m.colwise().sum().transpose() / rows;
  stddev.resize(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double var = (m.col(c).array() - mean[c]).square().sum() / rows;
    const double s = std::sqrt(var);
    stddev[c] = s > 1e-12 ? s : 1.0;
  }
}

}  // namespace

Normalization Normalization::fit(const TrainingData& data) {
  if (data.inputs.rows() == 0) throw ConfigError("Normalization::fit: empty data");
  Normalization n;
  column_stats(data.inputs, n.input_mean, n.input_std);
  Eigen::VectorXd tm, ts;
  column_stats(data.targets, tm, ts);
  n.target_mean = tm;
  n.target_std = ts;
  return n;
}

Eigen::VectorXd Normalization::standardize_input(const Eigen::VectorXd& h) const {
  return (h - input_mean).cwiseQuotient(input_std);
}

Vec3 Normalization::standardize_target(const Vec3& t) const {
  return (t - target_mean).cwiseQuotient(target_std);
}

Vec3 Normalization::destandardize_mean(const Vec3& m) const {
  return m.cwiseProduct(target_std) + target_mean;
}

Vec3 Normalization::destandardize_variance(const Vec3& v) const {
  return v.cwiseProduct(target_std.cwiseProduct(target_std));
}

TrainingData Normalization::standardize(const TrainingData& data) const {
  TrainingData out;
  out.inputs = (data.inputs.rowwise() - input_mean.transpose()).array().rowwise() /
               input_std.transpose().array();
  out.targets = (data.targets.rowwise() - target_mean.transpose()).array().rowwise() /
                target_std.transpose().array();
  return out;
}

MemberMoments mixture_moments(const Mixture& m) {
  MemberMoments out;
  for (int k = 0; k < m.components(); ++k) {
    const Vec3 mu = m.means.row(k).transpose();
    const Vec3 var = m.sigmas.row(k).transpose().array().square();
    out.mean += m.weights[k] * mu;
    out.variance += m.weights[k] * (var + mu.cwiseProduct(mu));
  }
  out.variance -= out.mean.cwiseProduct(out.mean);
  out.variance = out.variance.cwiseMax(0.0);
  return out;
}

MemberMoments combine_member_moments(std::span<const MemberMoments> members) {
  if (members.empty()) throw ConfigError("combine_member_moments: no members");
  MemberMoments out;
  Vec3 second = Vec3::Zero();
  for (const auto& m : members) {
    out.mean += m.mean;
    second += m.variance + m.mean.cwiseProduct(m.mean);
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  out.mean *= inv;
  out.variance = second * inv - out.mean.cwiseProduct(out.mean);
  assert((out.variance.array() >= -1e-12 * (1.0 + (second * inv).array())).all());
  out.variance = out.variance.cwiseMax(0.0);
  return out;
}

MemberMoments ensemble_moments_standardized(const Ensemble& ensemble, const BoxState& state,
                                            const PushAction& action) {
  if (ensemble.members.empty()) throw ConfigError("ensemble has no members");
  const Eigen::VectorXd h = ensemble.normalization.standardize_input(
      model_input(ensemble.frame_mode, state, action));
  std::vector<MemberMoments> moments;
  moments.reserve(ensemble.members.size());
  for (const auto& member : ensemble.members) {
    moments.push_back(mixture_moments(mdn_forward(member, {h.data(), static_cast<std::size_t>(h.size())})));
  }
  return combine_member_moments(moments);
}

Prediction ensemble_predict(const Ensemble& ensemble, const BoxState& state,
                            const PushAction& action) {
  const MemberMoments m = ensemble_moments_standardized(ensemble, state, action);
  Prediction p;
  p.mean = ensemble.normalization.destandardize_mean(m.mean);
  p.variance = ensemble.normalization.destandardize_variance(m.variance);
  p.sigma = std::sqrt(m.variance.sum());
  return p;
}

TrainResult train_member(const PushDataset& dataset, const TrainConfig& cfg, Rng& rng) {
  if (dataset.empty()) throw ConfigError("train_member: empty dataset");
  const TrainingData raw = make_training_data(dataset);
  const TrainingData data = Normalization::fit(raw).standardize(raw);
  return train_member(data.inputs, data.targets, cfg, rng);
}

double EnsembleTrainingReport::final_loss() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& h : loss_histories) {
    if (!h.empty()) {
      sum += h.back();
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

Ensemble train_ensemble(const PushDataset& dataset, const TrainConfig& cfg, int members,
                        std::uint64_t seed, EnsembleTrainingReport* report) {
  if (members < 1) throw ConfigError("train_ensemble: ensemble size M must be >= 1");
  if (dataset.empty()) throw ConfigError("train_ensemble: empty dataset");
  cfg.validate();

  const TrainingData raw = make_training_data(dataset);
  Ensemble ensemble;
  ensemble.frame_mode = dataset.frame_mode;
  ensemble.normalization = Normalization::fit(raw);
  const TrainingData data = ensemble.normalization.standardize(raw);

  std::vector<TrainResult> results(static_cast<std::size_t>(members));
  parallel_for(results.size(), [&](std::size_t i) {
    Rng rng(seed + i);
    results[i] = train_member(data.inputs, data.targets, cfg, rng);
  });

  for (auto& r : results) {
    ensemble.members.push_back(std::move(r.params));
    if (report != nullptr) report->loss_histories.push_back(std::move(r.loss_history));
  }
  return ensemble;
}

}  // namespace pushcraft
