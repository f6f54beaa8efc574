#include "pushcraft/mppi.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pushcraft/errors.hpp"
#include "pushcraft/parallel.hpp"

namespace pushcraft {

namespace {

bool positive_semidefinite(const Eigen::Matrix3d& m) {
  if (!m.allFinite() || !m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(m);
  return eig.eigenvalues().minCoeff() >= -1e-12;
}

}  // namespace

void MppiConfig::validate() const {
  if (samples < 1) throw ConfigError("mppi: samples N must be >= 1");
  if (horizon < 2) throw ConfigError("mppi: horizon T must be >= 2");
  if (decay_steps < 0) throw ConfigError("mppi: decay_steps L must be >= 0");
  if (!(lambda > 0.0)) throw ConfigError("mppi: lambda must be > 0");
  if (!(rho > 0.0)) throw ConfigError("mppi: rho must be > 0");
  if (!(delta_t > 0.0)) throw ConfigError("mppi: delta_t must be > 0");
  if (!(gamma >= 0.0)) throw ConfigError("mppi: gamma must be >= 0");
  if (!(eta_init >= 0.0)) throw ConfigError("mppi: eta_init must be >= 0");
  if (!(q_diag.array() >= 0.0).all()) throw ConfigError("mppi: Q must be positive semidefinite");
  if (!positive_semidefinite(r)) throw ConfigError("mppi: R must be symmetric positive semidefinite");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0)) throw ConfigError("mppi: decay_rate must lie in (0, 1]");
  if (max_pushes < 0) throw ConfigError("mppi: max_pushes must be >= 0");
  if (!(goal_tolerance >= 0.0)) throw ConfigError("mppi: goal_tolerance must be >= 0");
  if (!u_init.allFinite()) throw ConfigError("mppi: u_init must be finite");
}

double final_cost(const BoxState& x, const MppiConfig& cfg) {
  const Vec3 e = state_residual(x, cfg.goal);
  return e.dot(cfg.q_diag.cwiseProduct(e));
}

double running_cost(const BoxState& x, const RawAction& u, double sigma, const MppiConfig& cfg) {
  return cfg.gamma * sigma + final_cost(x, cfg) + u.dot(cfg.r * u);
}

RawAction sample_perturbation(double eta, const MppiConfig& cfg, Rng& rng) {
  const double scale = eta / std::sqrt(cfg.rho) / std::sqrt(cfg.delta_t);
  RawAction du;
  for (int i = 0; i < 3; ++i) du[i] = scale * standard_normal(rng);
  return du;
}

Trajectory rollout(const ForwardModel& model, const BoxState& x0,
                   std::span<const RawAction> nominal, std::span<const RawAction> perturbations,
                   const MppiConfig& cfg) {
  const std::size_t horizon = nominal.size();
  if (horizon == 0 || perturbations.size() != horizon) {
    throw ConfigError("rollout: nominal and perturbation sequences must have equal, non-zero length");
  }
  Trajectory traj;
  traj.steps.resize(horizon);
  traj.steps[0].state = x0;
  traj.steps[0].sigma = sigma_at(model, x0, PushAction::project(RawAction::Zero()));

  BoxState x = x0;
  for (std::size_t i = 0; i < horizon; ++i) {
    const RawAction u = nominal[i] + perturbations[i];
    traj.steps[i].action = u;
    const NextState next = predict_next_state(model, x, PushAction::project(u));
    if (i + 1 < horizon) {
      traj.steps[i + 1].state = next.state;
      traj.steps[i + 1].sigma = next.sigma;
    } else {
      traj.terminal = next.state;
      traj.terminal_sigma = next.sigma;
    }
    x = next.state;
  }

  double cost = 0.0;
  for (std::size_t i = 1; i < horizon; ++i) {
    const auto& s = traj.steps[i];
    cost += running_cost(s.state, s.action, s.sigma, cfg);
  }
  traj.cost_to_go = cost + final_cost(traj.terminal, cfg);
  return traj;
}

std::vector<double> compute_weights(std::span<const double> costs, double lambda) {
  if (costs.empty()) throw PlanningError("compute_weights: no samples");
  if (!(lambda > 0.0)) throw ConfigError("compute_weights: lambda must be > 0");
  double min_cost = std::numeric_limits<double>::infinity();
  for (double c : costs) {
    if (std::isfinite(c)) min_cost = std::min(min_cost, c);
  }
  if (!std::isfinite(min_cost)) throw PlanningError("every rollout cost is non-finite");

  std::vector<double> w(costs.size(), 0.0);
  double sum = 0.0;
  for (std::size_t n = 0; n < costs.size(); ++n) {
    if (std::isfinite(costs[n])) {
      w[n] = std::exp(-(costs[n] - min_cost) / lambda);
      sum += w[n];
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

std::vector<RawAction> control_update(std::span<const double> weights,
                                      std::span<const std::vector<RawAction>> perturbations) {
  if (weights.size() != perturbations.size() || perturbations.empty()) {
    throw ConfigError("control_update: one weight per perturbation sequence required");
  }
  const std::size_t horizon = perturbations.front().size();
  std::vector<RawAction> delta(horizon, RawAction::Zero());
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (perturbations[n].size() != horizon) {
      throw ConfigError("control_update: ragged perturbation sequences");
    }
    if (weights[n] == 0.0) continue;
    for (std::size_t i = 0; i < horizon; ++i) delta[i] += weights[n] * perturbations[n][i];
  }
  return delta;
}

PlanResult mppi_plan_once(const ForwardModel& model, const BoxState& x_init,
                          std::span<const RawAction> nominal, const MppiConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto horizon = static_cast<std::size_t>(cfg.horizon);
  if (nominal.size() != horizon) throw ConfigError("mppi_plan_once: nominal length must equal T");
  const auto samples = static_cast<std::size_t>(cfg.samples);

  PlanResult result;
  result.optimized.assign(nominal.begin(), nominal.end());
  std::vector<std::vector<RawAction>> perturbations(samples, std::vector<RawAction>(horizon));
  std::vector<double> costs(samples);

  double eta = cfg.eta_init;
  for (int pass = 0; pass < cfg.passes(); ++pass) {
    const std::uint64_t pass_seed = rng();
    parallel_for(samples, [&](std::size_t n) {
      Rng stream = make_rng(pass_seed, n);
      for (auto& du : perturbations[n]) du = sample_perturbation(eta, cfg, stream);
      const double c = rollout(model, x_init, result.optimized, perturbations[n], cfg).cost_to_go;
      costs[n] = std::isnan(c) ? std::numeric_limits<double>::infinity() : c;
    });
    const std::vector<double> weights = compute_weights(costs, cfg.lambda);
    const std::vector<RawAction> delta = control_update(weights, perturbations);
    for (std::size_t i = 0; i < horizon; ++i) result.optimized[i] += delta[i];
    eta *= cfg.decay_rate;
    ++result.passes;
  }

  result.eta_final = eta;
  result.last_costs = costs;
  result.action = PushAction::project(result.optimized.front());
  result.nominal.assign(result.optimized.begin() + 1, result.optimized.end());
  result.nominal.push_back(cfg.u_init);
  return result;
}

std::vector<BoxState> EpisodeLog::visited_states() const {
  std::vector<BoxState> states{initial_state};
  for (const auto& p : pushes) states.push_back(p.result);
  return states;
}

EpisodeLog run_mppi(const ForwardModel& model, PushSystem& system, const MppiConfig& cfg, Rng& rng) {
  cfg.validate();
  EpisodeLog log;
  log.model = model.descriptor();
  log.initial_state = system.state();
  log.initial_cost = final_cost(system.state(), cfg);

  std::vector<RawAction> nominal(static_cast<std::size_t>(cfg.horizon), cfg.u_init);
  MppiConfig step_cfg = cfg;
  double cost = log.initial_cost;
  while (cost > cfg.goal_tolerance && static_cast<int>(log.pushes.size()) < cfg.max_pushes) {
    const int done = static_cast<int>(log.pushes.size());
    step_cfg.gamma = (cfg.gamma_pushes < 0 || done < cfg.gamma_pushes) ? cfg.gamma : 0.0;
    const BoxState before = system.state();
    PlanResult plan = mppi_plan_once(model, before, nominal, step_cfg, rng);
    const double predicted_sigma = sigma_at(model, before, plan.action);
    const BoxState after = system.apply(plan.action);
    cost = final_cost(after, cfg);
    log.pushes.push_back({before, plan.action, after, cost, predicted_sigma, step_cfg.gamma});
    nominal = std::move(plan.nominal);
  }
  log.final_state = system.state();
  log.final_cost = cost;
  log.converged = cost <= cfg.goal_tolerance;
  return log;
}

}  // namespace pushcraft
