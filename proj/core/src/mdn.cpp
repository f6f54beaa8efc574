#include "pushcraft/mdn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pushcraft/errors.hpp"

namespace pushcraft {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

// Scratch buffers for one forward/backward pass; reused across examples.
struct Workspace {
  std::vector<std::vector<double>> act;    // act[0] = input, act[L] = head
  std::vector<std::vector<double>> delta;  // delta[l] = dL/d pre-activation of layer l
  std::vector<double> input_grad;
  std::vector<double> comp;  // per-component log densities

  explicit Workspace(const MdnParams& p) {
    const int layers = p.layer_count();
    act.resize(layers + 1);
    delta.resize(layers);
    act[0].resize(p.layer_inputs(0));
    for (int l = 0; l < layers; ++l) {
      act[l + 1].resize(p.layer_outputs(l));
      delta[l].resize(p.layer_outputs(l));
    }
    input_grad.resize(p.layer_inputs(0));
    comp.resize(p.architecture().mixtures);
  }
};

void forward(const MdnParams& p, const double* h, Workspace& ws) {
  const double* theta = p.values().data();
  std::copy(h, h + p.layer_inputs(0), ws.act[0].begin());
  const int layers = p.layer_count();
  for (int l = 0; l < layers; ++l) {
    const int in = p.layer_inputs(l);
    const int out = p.layer_outputs(l);
    const double* w = theta + p.weight_offset(l);
    const double* b = theta + p.bias_offset(l);
    const double* x = ws.act[l].data();
    double* y = ws.act[l + 1].data();
    const bool hidden = l + 1 < layers;
    for (int i = 0; i < out; ++i) {
      const double* row = w + static_cast<std::size_t>(i) * in;
      double s = b[i];
      for (int j = 0; j < in; ++j) s += row[j] * x[j];
      y[i] = hidden ? std::tanh(s) : s;
    }
  }
}

// Loss of the raw head z against target; writes dL/dz into dz when non-null.
double head_loss(int K, const double* z, const double* target, double* dz,
                 std::vector<double>& comp) {
  constexpr int D = kOutputDim;
  const double* logits = z;
  const double* mu = z + K;
  const double* ls = z + K + K * D;

  double max_logit = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) max_logit = std::max(max_logit, logits[k]);
  double logit_sum = 0.0;
  for (int k = 0; k < K; ++k) logit_sum += std::exp(logits[k] - max_logit);
  const double logit_lse = max_logit + std::log(logit_sum);

  double max_comp = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    double c = logits[k] - logit_lse;
    for (int d = 0; d < D; ++d) {
      const double r = (target[d] - mu[k * D + d]) * std::exp(-ls[k * D + d]);
      c -= kHalfLog2Pi + ls[k * D + d] + 0.5 * r * r;
    }
    comp[k] = c;
    max_comp = std::max(max_comp, c);
  }
  double comp_sum = 0.0;
  for (int k = 0; k < K; ++k) comp_sum += std::exp(comp[k] - max_comp);
  const double lse = max_comp + std::log(comp_sum);

  if (dz != nullptr) {
    for (int k = 0; k < K; ++k) {
      const double resp = std::exp(comp[k] - lse);
      const double pi = std::exp(logits[k] - logit_lse);
      dz[k] = pi - resp;
      for (int d = 0; d < D; ++d) {
        const double inv_sigma = std::exp(-ls[k * D + d]);
        const double r = (target[d] - mu[k * D + d]) * inv_sigma;
        dz[K + k * D + d] = -resp * r * inv_sigma;
        dz[K + K * D + k * D + d] = resp * (1.0 - r * r);
      }
    }
  }
  return -lse;
}

// Backpropagates ws.delta.back(); accumulates scale * dL/dtheta into grad and
// writes dL/dh into ws.input_grad when requested.
void backward(const MdnParams& p, Workspace& ws, double* grad, double scale, bool want_input) {
  const double* theta = p.values().data();
  for (int l = p.layer_count() - 1; l >= 0; --l) {
    const int in = p.layer_inputs(l);
    const int out = p.layer_outputs(l);
    const double* w = theta + p.weight_offset(l);
    const double* x = ws.act[l].data();
    const double* dl = ws.delta[l].data();
    if (grad != nullptr) {
      double* gw = grad + p.weight_offset(l);
      double* gb = grad + p.bias_offset(l);
      for (int i = 0; i < out; ++i) {
        const double di = scale * dl[i];
        double* grow = gw + static_cast<std::size_t>(i) * in;
        for (int j = 0; j < in; ++j) grow[j] += di * x[j];
        gb[i] += di;
      }
    }
    if (l == 0 && !want_input) break;
    double* prev = l > 0 ? ws.delta[l - 1].data() : ws.input_grad.data();
    std::fill(prev, prev + in, 0.0);
    for (int i = 0; i < out; ++i) {
      const double* row = w + static_cast<std::size_t>(i) * in;
      const double di = dl[i];
      for (int j = 0; j < in; ++j) prev[j] += row[j] * di;
    }
    if (l > 0) {
      for (int j = 0; j < in; ++j) prev[j] *= 1.0 - x[j] * x[j];
    }
  }
}

double evaluate(const MdnParams& p, const double* h, const double* target, Workspace& ws,
                double* grad, double scale, bool want_input) {
  forward(p, h, ws);
  const bool need_backward = grad != nullptr || want_input;
  const double loss = head_loss(p.architecture().mixtures, ws.act.back().data(), target,
                                need_backward ? ws.delta.back().data() : nullptr, ws.comp);
  if (need_backward) backward(p, ws, grad, scale, want_input);
  return loss;
}

void check_input(const MdnParams& p, std::size_t n) {
  if (static_cast<int>(n) != p.architecture().input_dim) {
    throw ConfigError("MDN input has dimension " + std::to_string(n) + ", network expects " +
                      std::to_string(p.architecture().input_dim));
  }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::vector<int> MdnArchitecture::layer_sizes() const {
  std::vector<int> sizes;
  sizes.push_back(input_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(head_size());
  return sizes;
}

std::size_t MdnArchitecture::parameter_count() const {
  const auto sizes = layer_sizes();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += static_cast<std::size_t>(sizes[l]) * sizes[l + 1] + sizes[l + 1];
  }
  return n;
}

void MdnArchitecture::validate() const {
  if (input_dim < 1) throw ConfigError("MDN: input_dim must be >= 1");
  if (mixtures < 1) throw ConfigError("MDN: mixture count K must be >= 1");
  for (int w : hidden) {
    if (w < 1) throw ConfigError("MDN: hidden layer widths must be >= 1");
  }
}

MdnParams::MdnParams(MdnArchitecture arch) : arch_(std::move(arch)) {
  arch_.validate();
  sizes_ = arch_.layer_sizes();
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

MdnParams MdnParams::random(MdnArchitecture arch, Rng& rng) {
  MdnParams p(std::move(arch));
  for (int l = 0; l < p.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.layer_inputs(l)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = p.weights(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    if (l + 1 < p.layer_count()) {
      auto b = p.bias(l);
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = dist(rng);
    }
  }
  return p;
}

Eigen::Map<RowMatrix> MdnParams::weights(int layer) {
  return {values_.data() + weight_offset(layer), layer_outputs(layer), layer_inputs(layer)};
}
Eigen::Map<const RowMatrix> MdnParams::weights(int layer) const {
  return {values_.data() + weight_offset(layer), layer_outputs(layer), layer_inputs(layer)};
}
Eigen::Map<Eigen::VectorXd> MdnParams::bias(int layer) {
  return {values_.data() + bias_offset(layer), layer_outputs(layer)};
}
Eigen::Map<const Eigen::VectorXd> MdnParams::bias(int layer) const {
  return {values_.data() + bias_offset(layer), layer_outputs(layer)};
}

Mixture mdn_forward(const MdnParams& params, std::span<const double> h) {
  check_input(params, h.size());
  Workspace ws(params);
  forward(params, h.data(), ws);
  const int K = params.architecture().mixtures;
  constexpr int D = kOutputDim;
  const double* z = ws.act.back().data();

  Mixture m;
  m.weights.resize(K);
  m.log_weights.resize(K);
  m.means.resize(K, D);
  m.log_sigmas.resize(K, D);
  const double max_logit = *std::max_element(z, z + K);
  double sum = 0.0;
  for (int k = 0; k < K; ++k) sum += std::exp(z[k] - max_logit);
  const double lse = max_logit + std::log(sum);
  for (int k = 0; k < K; ++k) {
    m.log_weights[k] = z[k] - lse;
    m.weights[k] = std::exp(z[k] - max_logit) / sum;
    for (int d = 0; d < D; ++d) {
      m.means(k, d) = z[K + k * D + d];
      m.log_sigmas(k, d) = z[K + K * D + k * D + d];
    }
  }
  m.sigmas = m.log_sigmas.array().exp();
  return m;
}

double mdn_nll(const Mixture& m, const Vec3& target) {
  const int K = m.components();
  Eigen::VectorXd comp(K);
  for (int k = 0; k < K; ++k) {
    double c = m.log_weights[k];
    for (int d = 0; d < kOutputDim; ++d) {
      const double r = (target[d] - m.means(k, d)) / m.sigmas(k, d);
      c -= kHalfLog2Pi + m.log_sigmas(k, d) + 0.5 * r * r;
    }
    comp[k] = c;
  }
  const double max_comp = comp.maxCoeff();
  if (!std::isfinite(max_comp)) return -max_comp;
  return -(max_comp + std::log((comp.array() - max_comp).exp().sum()));
}

NllGradient nll_gradient(const MdnParams& params, std::span<const double> h, const Vec3& target) {
  check_input(params, h.size());
  Workspace ws(params);
  NllGradient g;
  g.params = Eigen::VectorXd::Zero(params.values().size());
  g.loss = evaluate(params, h.data(), target.data(), ws, g.params.data(), 1.0, true);
  g.input = Eigen::Map<const Eigen::VectorXd>(ws.input_grad.data(),
                                              static_cast<Eigen::Index>(ws.input_grad.size()));
  return g;
}

std::vector<double> adversarial_example(const MdnParams& params, std::span<const double> h,
                                        const Vec3& target, double eps) {
  if (!(eps >= 0.0)) throw ConfigError("adversarial_example: eps must be >= 0");
  check_input(params, h.size());
  std::vector<double> out(h.begin(), h.end());
  if (eps == 0.0) return out;
  Workspace ws(params);
  evaluate(params, h.data(), target.data(), ws, nullptr, 1.0, true);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += eps * sign(ws.input_grad[j]);
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (!(adversarial_eps >= 0.0)) throw ConfigError("train: adversarial_eps must be >= 0");
  if (mixtures < 1) throw ConfigError("train: mixtures must be >= 1");
  for (int w : hidden_layers) {
    if (w < 1) throw ConfigError("train: hidden layer widths must be >= 1");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("train: adam_epsilon must be > 0");
}

TrainResult train_member(const RowMatrix& inputs, const RowMatrix& targets,
                         const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (n == 0) throw ConfigError("train_member: empty training set");
  if (targets.rows() != inputs.rows() || targets.cols() != kOutputDim) {
    throw ConfigError("train_member: inputs and targets disagree in shape");
  }

  MdnArchitecture arch{static_cast<int>(inputs.cols()), cfg.hidden_layers, cfg.mixtures};
  TrainResult result{MdnParams::random(arch, rng), {}};
  MdnParams& params = result.params;
  const auto count = static_cast<std::size_t>(params.values().size());

  Workspace ws(params);
  std::vector<double> grad(count), m(count, 0.0), v(count, 0.0);
  std::vector<double> adv(inputs.cols());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool adversarial = cfg.adversarial_eps > 0.0;
  const double copies = adversarial ? 2.0 : 1.0;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  result.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      const double scale = 1.0 / (copies * static_cast<double>(stop - start));
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const double* h = inputs.row(static_cast<Eigen::Index>(order[b])).data();
        const double* t = targets.row(static_cast<Eigen::Index>(order[b])).data();
        batch_loss += evaluate(params, h, t, ws, grad.data(), scale, adversarial);
        if (adversarial) {
          for (std::size_t j = 0; j < adv.size(); ++j) {
            adv[j] = h[j] + cfg.adversarial_eps * sign(ws.input_grad[j]);
          }
          batch_loss += evaluate(params, adv.data(), t, ws, grad.data(), scale, false);
        }
      }
      epoch_loss += batch_loss / copies;

      beta1_pow *= cfg.beta1;
      beta2_pow *= cfg.beta2;
      const double step = cfg.learning_rate * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
      double* theta = params.values().data();
      for (std::size_t i = 0; i < count; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        theta[i] -= step * m[i] / (std::sqrt(v[i]) + cfg.adam_epsilon);
      }
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("MDN training produced a non-finite loss at epoch " +
                          std::to_string(epoch) + " (learning rate " +
                          std::to_string(cfg.learning_rate) + " too high?)");
    }
    result.loss_history.push_back(epoch_loss);
  }
  return result;
}

}  // namespace pushcraft
