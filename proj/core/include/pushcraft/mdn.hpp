#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "pushcraft/random.hpp"
#include "pushcraft/types.hpp"

namespace pushcraft {

/// Output dimensionality of every forward model: (dx, dy, dtheta).
inline constexpr int kOutputDim = 3;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully connected tanh MLP whose linear head parameterizes a diagonal
/// Gaussian mixture with `mixtures` components over kOutputDim outputs.
///
/// Head layout: [K logits | K*D means | K*D log-scales], component-major.
struct MdnArchitecture {
  int input_dim = 3;
  std::vector<int> hidden{20, 20, 20};
  int mixtures = 1;

  int head_size() const { return mixtures * (1 + 2 * kOutputDim); }
  /// input, hidden..., head
  std::vector<int> layer_sizes() const;
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const MdnArchitecture&, const MdnArchitecture&) = default;
};

/// Flat parameter vector plus its architecture. Per layer the row-major
/// weight matrix (out x in) is followed by the bias vector.
class MdnParams {
 public:
  MdnParams() = default;
  /// All-zero parameters.
  explicit MdnParams(MdnArchitecture arch);

  /// Weights uniform in +-1/sqrt(fan_in); hidden biases likewise; head biases zero.
  static MdnParams random(MdnArchitecture arch, Rng& rng);

  const MdnArchitecture& architecture() const { return arch_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  int layer_count() const { return static_cast<int>(offsets_.size()); }
  int layer_inputs(int layer) const { return sizes_[layer]; }
  int layer_outputs(int layer) const { return sizes_[layer + 1]; }
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(sizes_[layer]) * sizes_[layer + 1];
  }

  Eigen::Map<RowMatrix> weights(int layer);
  Eigen::Map<const RowMatrix> weights(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  friend bool operator==(const MdnParams& a, const MdnParams& b) {
    return a.arch_ == b.arch_ && a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  MdnArchitecture arch_;
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd values_;
};

/// Diagonal Gaussian mixture (K components x kOutputDim dims).
struct Mixture {
  Eigen::VectorXd weights;      // pi_k, sums to 1
  Eigen::VectorXd log_weights;  // log pi_k
  Eigen::MatrixXd means;        // K x D
  Eigen::MatrixXd log_sigmas;   // K x D
  Eigen::MatrixXd sigmas;       // K x D, exp(log_sigmas)

  int components() const { return static_cast<int>(weights.size()); }
};

/// Throws ConfigError when h has the wrong dimension.
Mixture mdn_forward(const MdnParams& params, std::span<const double> h);

/// -log sum_k pi_k prod_d N(target_d | mu_kd, sigma_kd^2), evaluated with
/// log-sum-exp.
double mdn_nll(const Mixture& mixture, const Vec3& target);

struct NllGradient {
  double loss = 0.0;
  Eigen::VectorXd params;  // d loss / d parameters
  Eigen::VectorXd input;   // d loss / d h
};

/// Exact reverse-mode gradient of mdn_nll(mdn_forward(params, h), target).
NllGradient nll_gradient(const MdnParams& params, std::span<const double> h, const Vec3& target);

/// Fast-gradient-sign example h + eps * sign(d nll / d h).
std::vector<double> adversarial_example(const MdnParams& params, std::span<const double> h,
                                        const Vec3& target, double eps);

struct TrainConfig {
  int epochs = 3000;
  int batch_size = 5;
  double learning_rate = 1e-3;
  double adversarial_eps = 0.005;
  std::vector<int> hidden_layers{20, 20, 20};
  int mixtures = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainResult {
  MdnParams params;
  std::vector<double> loss_history;  // mean minibatch loss per epoch
};

/// Minibatch Adam on the mean NLL over clean and adversarial copies of each
/// example. Inputs and targets must already be standardized (n x d, n x 3).
/// Throws TrainingError when the loss becomes non-finite.
TrainResult train_member(const RowMatrix& inputs, const RowMatrix& targets,
                         const TrainConfig& cfg, Rng& rng);

}  // namespace pushcraft
