#include "pushcraft/gp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pushcraft/errors.hpp"
#include "pushcraft/parallel.hpp"

namespace pushcraft {

namespace {

// Box on log-hyperparameters keeps the ascent away from degenerate kernels.
constexpr double kLogMin = -13.8;  // ~1e-6
constexpr double kLogMax = 6.9;    // ~1e3

Eigen::MatrixXd kernel_matrix(const RowMatrix& x, const GpHyper& hyper) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = hyper.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = se_ard_kernel(x.row(i).transpose(), x.row(j).transpose(), hyper);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

struct Factor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

Factor factorize(Eigen::MatrixXd k, double noise) {
  const Eigen::Index n = k.rows();
  k.diagonal().array() += noise;
  const double schedule[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  for (double jitter : schedule) {
    Eigen::MatrixXd trial = k;
    trial.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(trial);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      if (lower.diagonal().allFinite() && (lower.diagonal().array() > 0.0).all()) {
        return {std::move(lower), jitter};
      }
    }
  }
  throw FitError("GP kernel matrix (" + std::to_string(n) + "x" + std::to_string(n) +
                 ") not positive definite after jitter escalation to 1e-6");
}

double lml_from_factor(const Factor& f, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha) {
  const auto n = static_cast<double>(y.size());
  return -0.5 * y.dot(alpha) - f.lower.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd solve_alpha(const Factor& f, const Eigen::VectorXd& y) {
  const auto lower = f.lower.triangularView<Eigen::Lower>();
  return lower.transpose().solve(lower.solve(y));
}

double lml_only(const RowMatrix& x, const Eigen::VectorXd& y, const GpHyper& hyper) {
  const Factor f = factorize(kernel_matrix(x, hyper), hyper.noise_variance);
  return lml_from_factor(f, y, solve_alpha(f, y));
}

Eigen::VectorXd clamp_log(Eigen::VectorXd v) { return v.cwiseMax(kLogMin).cwiseMin(kLogMax); }

// Adaptive-step gradient ascent; only improving steps are accepted, so the
// result is never worse than the start.
std::pair<GpHyper, double> ascend(const RowMatrix& x, const Eigen::VectorXd& y, GpHyper start,
                                  int iterations) {
  Eigen::VectorXd theta = clamp_log(start.to_log());
  LmlGradient current = log_marginal_likelihood_gradient(x, y, GpHyper::from_log(theta));
  double step = 0.1;
  for (int it = 0; it < iterations; ++it) {
    const double gnorm = current.gradient.norm();
    if (!(gnorm > 1e-9)) break;
    const Eigen::VectorXd proposal = clamp_log(theta + step * current.gradient / gnorm);
    double value = -std::numeric_limits<double>::infinity();
    try {
      value = lml_only(x, y, GpHyper::from_log(proposal));
    } catch (const FitError&) {
    }
    if (value > current.value) {
      theta = proposal;
      current = log_marginal_likelihood_gradient(x, y, GpHyper::from_log(theta));
      step = std::min(step * 1.5, 2.0);
    } else {
      step *= 0.5;
      if (step < 1e-6) break;
    }
  }
  return {GpHyper::from_log(theta), current.value};
}

}  // namespace

GpHyper GpHyper::defaults(int input_dim) {
  return {1.0, Eigen::VectorXd::Ones(input_dim), 1e-2};
}

Eigen::VectorXd GpHyper::to_log() const {
  Eigen::VectorXd v(length_scales.size() + 2);
  v[0] = std::log(signal_variance);
  v.segment(1, length_scales.size()) = length_scales.array().log();
  v[v.size() - 1] = std::log(noise_variance);
  return v;
}

GpHyper GpHyper::from_log(const Eigen::VectorXd& v) {
  GpHyper h;
  h.signal_variance = std::exp(v[0]);
  h.length_scales = v.segment(1, v.size() - 2).array().exp();
  h.noise_variance = std::exp(v[v.size() - 1]);
  return h;
}

void GpHyper::validate() const {
  if (!(signal_variance > 0.0) || !(noise_variance > 0.0) || length_scales.size() == 0 ||
      !(length_scales.array() > 0.0).all()) {
    throw ConfigError("GP hyperparameters must be strictly positive");
  }
}

double se_ard_kernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                     const Eigen::Ref<const Eigen::VectorXd>& b, const GpHyper& hyper) {
  double r2 = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double d = (a[j] - b[j]) / hyper.length_scales[j];
    r2 += d * d;
  }
  return hyper.signal_variance * std::exp(-0.5 * r2);
}

GpDimension::GpDimension(RowMatrix inputs, Eigen::VectorXd targets, GpHyper hyper)
    : inputs_(std::move(inputs)), targets_(std::move(targets)), hyper_(std::move(hyper)) {
  hyper_.validate();
  if (inputs_.rows() == 0 || inputs_.rows() != targets_.size()) {
    throw ConfigError("GP: inputs and targets must be non-empty and aligned");
  }
  if (hyper_.length_scales.size() != inputs_.cols()) {
    throw ConfigError("GP: length-scale count does not match input dimension");
  }
  Factor f = factorize(kernel_matrix(inputs_, hyper_), hyper_.noise_variance);
  alpha_ = solve_alpha(f, targets_);
  lml_ = lml_from_factor(f, targets_, alpha_);
  jitter_ = f.jitter;
  chol_ = std::move(f.lower);
}

GpPosterior GpDimension::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::Index n = inputs_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k[i] = se_ard_kernel(inputs_.row(i).transpose(), x, hyper_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
  const double latent = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  return {k.dot(alpha_), latent + hyper_.noise_variance};
}

LmlGradient log_marginal_likelihood_gradient(const RowMatrix& x, const Eigen::VectorXd& y,
                                             const GpHyper& hyper) {
  hyper.validate();
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::MatrixXd kf = kernel_matrix(x, hyper);
  const Factor f = factorize(kf, hyper.noise_variance);
  const Eigen::VectorXd alpha = solve_alpha(f, y);

  const auto lower = f.lower.triangularView<Eigen::Lower>();
  Eigen::MatrixXd kinv = lower.solve(Eigen::MatrixXd::Identity(n, n));
  kinv = lower.transpose().solve(kinv);
  const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;

  LmlGradient out;
  out.value = lml_from_factor(f, y, alpha);
  out.gradient = Eigen::VectorXd::Zero(d + 2);
  out.gradient[0] = 0.5 * (w.array() * kf.array()).sum();
  for (Eigen::Index j = 0; j < d; ++j) {
    const double inv_l2 = 1.0 / (hyper.length_scales[j] * hyper.length_scales[j]);
    double acc = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < a; ++b) {
        const double diff = x(a, j) - x(b, j);
        acc += w(a, b) * kf(a, b) * diff * diff * inv_l2;
      }
    }
    out.gradient[1 + j] = acc;  // symmetric: 2 * 0.5 * lower-triangle sum
  }
  out.gradient[d + 1] = 0.5 * hyper.noise_variance * w.trace();
  return out;
}

double GpModel::log_marginal_likelihood() const {
  double sum = 0.0;
  for (const auto& dim : dims) sum += dim.log_marginal_likelihood();
  return sum;
}

namespace {

struct StandardizedData {
  Normalization normalization;
  RowMatrix inputs;
  RowMatrix targets;
};

StandardizedData prepare(const PushDataset& dataset) {
  if (dataset.empty()) throw ConfigError("gp_fit: empty dataset");
  if (dataset.size() > kMaxGpPoints) {
    throw ConfigError("gp_fit: " + std::to_string(dataset.size()) +
                      " records exceed the dense GP limit of " + std::to_string(kMaxGpPoints));
  }
  const TrainingData raw = make_training_data(dataset);
  StandardizedData s;
  s.normalization = Normalization::fit(raw);
  TrainingData std_data = s.normalization.standardize(raw);
  s.inputs = std::move(std_data.inputs);
  s.targets = std::move(std_data.targets);
  return s;
}

}  // namespace

GpModel gp_from_standardized(FrameMode mode, Normalization normalization, const RowMatrix& inputs,
                             const RowMatrix& targets,
                             const std::array<GpHyper, kOutputDim>& hyper) {
  GpModel model;
  model.frame_mode = mode;
  model.normalization = std::move(normalization);
  parallel_for(kOutputDim, [&](std::size_t d) {
    model.dims[d] = GpDimension(inputs, targets.col(static_cast<Eigen::Index>(d)), hyper[d]);
  });
  return model;
}

GpModel gp_fit_fixed(const PushDataset& dataset, const std::array<GpHyper, kOutputDim>& hyper) {
  StandardizedData s = prepare(dataset);
  return gp_from_standardized(dataset.frame_mode, std::move(s.normalization), s.inputs, s.targets,
                              hyper);
}

GpModel gp_fit(const PushDataset& dataset, const GpFitOptions& options, Rng& rng) {
  StandardizedData s = prepare(dataset);
  const auto dim = static_cast<int>(s.inputs.cols());
  std::array<GpHyper, kOutputDim> hyper;
  hyper.fill(GpHyper::defaults(dim));

  if (options.optimize) {
    if (options.restarts < 0 || options.iterations < 0) {
      throw ConfigError("gp_fit: restarts and iterations must be >= 0");
    }
    // Random starts are drawn up front so the result does not depend on
    // how the dimensions are scheduled.
    std::array<std::vector<GpHyper>, kOutputDim> starts;
    for (auto& list : starts) {
      list.push_back(GpHyper::defaults(dim));
      for (int r = 0; r < options.restarts; ++r) {
        Eigen::VectorXd theta(dim + 2);
        theta[0] = -1.0 + 2.0 * uniform01(rng);
        for (int j = 0; j < dim; ++j) theta[1 + j] = -1.0 + 2.5 * uniform01(rng);
        theta[dim + 1] = -7.0 + 6.0 * uniform01(rng);
        list.push_back(GpHyper::from_log(theta));
      }
    }
    parallel_for(kOutputDim, [&](std::size_t d) {
      const Eigen::VectorXd y = s.targets.col(static_cast<Eigen::Index>(d));
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& start : starts[d]) {
        try {
          auto [h, value] = ascend(s.inputs, y, start, options.iterations);
          if (value > best) {
            best = value;
            hyper[d] = std::move(h);
          }
        } catch (const FitError&) {
          // a random start may be unfactorizable; others remain
        }
      }
      if (!std::isfinite(best)) throw FitError("gp_fit: no start produced a valid factorization");
    });
  }
  return gp_from_standardized(dataset.frame_mode, std::move(s.normalization), s.inputs, s.targets,
                              hyper);
}

Prediction gp_predict(const GpModel& model, const BoxState& state, const PushAction& action) {
  const Eigen::VectorXd h =
      model.normalization.standardize_input(model_input(model.frame_mode, state, action));
  Vec3 mean, var;
  for (int d = 0; d < kOutputDim; ++d) {
    const GpPosterior post = model.dims[d].predict(h);
    mean[d] = post.mean;
    var[d] = post.variance;
  }
  Prediction p;
  p.mean = model.normalization.destandardize_mean(mean);
  p.variance = model.normalization.destandardize_variance(var);
  p.sigma = std::sqrt(var.sum());
  return p;
}

}  // namespace pushcraft
