#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "pushcraft/forward_model.hpp"
#include "pushcraft/random.hpp"
#include "pushcraft/sim.hpp"

namespace pushcraft {

/// Model predictive path integral controller settings.
struct MppiConfig {
  int samples = 150;    // N rollouts per pass
  int horizon = 2;      // T actions per rollout
  int decay_steps = 20; // L optimization passes (at least one)
  double eta_init = 1.0;
  double rho = 1.0;
  double delta_t = 0.05;
  double lambda = 1.0;  // softmax temperature
  Vec3 q_diag{1.5, 1.5, 0.01};
  Eigen::Matrix3d r = Eigen::Matrix3d::Zero();
  double gamma = 0.0;   // uncertainty penalty weight
  int gamma_pushes = -1;  // pushes for which gamma applies; < 0 means always
  RawAction u_init{0.0, 1.0, 0.0};
  BoxState goal;
  double goal_tolerance = 0.12;
  int max_pushes = 20;
  double decay_rate = 0.99;

  /// Throws ConfigError for N < 1, T < 2, non-positive lambda/rho/delta_t,
  /// negative gamma, indefinite Q/R, or decay_rate outside (0, 1].
  void validate() const;
  int passes() const { return decay_steps > 0 ? decay_steps : 1; }
};

struct TrajectoryStep {
  BoxState state;
  RawAction action = RawAction::Zero();
  double sigma = 0.0;
};

/// One sampled rollout: steps[i] holds x_i, the raw action applied at x_i and
/// the uncertainty of the transition that produced x_i (steps[0].sigma is
/// the zero-action uncertainty at x_0).
struct Trajectory {
  std::vector<TrajectoryStep> steps;
  BoxState terminal;
  double terminal_sigma = 0.0;
  double cost_to_go = 0.0;
};

/// gamma * sigma + (x - goal)' Q (x - goal) + u' R u, angular residual wrapped.
double running_cost(const BoxState& x, const RawAction& u, double sigma, const MppiConfig& cfg);

/// (x - goal)' Q (x - goal), angular residual wrapped.
double final_cost(const BoxState& x, const MppiConfig& cfg);

/// eta / sqrt(rho) * eps / sqrt(delta_t), eps ~ N(0, I3).
RawAction sample_perturbation(double eta, const MppiConfig& cfg, Rng& rng);

/// Propagates x0 with the model mean under project(nominal + perturbation).
/// Cost: running cost of x_1 .. x_{T-1} plus the final cost of x_T.
Trajectory rollout(const ForwardModel& model, const BoxState& x0,
                   std::span<const RawAction> nominal, std::span<const RawAction> perturbations,
                   const MppiConfig& cfg);

/// Softmax of -cost / lambda computed relative to the minimum cost.
/// Non-finite costs get weight zero; throws PlanningError if none is finite.
std::vector<double> compute_weights(std::span<const double> costs, double lambda);

/// Delta u_i = sum_n w_n * du_{i,n}; perturbations[n] has one entry per step.
std::vector<RawAction> control_update(std::span<const double> weights,
                                      std::span<const std::vector<RawAction>> perturbations);

struct PlanResult {
  PushAction action;                 // projected first action
  std::vector<RawAction> optimized;  // nominal after all passes
  std::vector<RawAction> nominal;    // shifted left with u_init appended
  double eta_final = 0.0;
  int passes = 0;
  std::vector<double> last_costs;    // rollout costs of the final pass
};

PlanResult mppi_plan_once(const ForwardModel& model, const BoxState& x_init,
                          std::span<const RawAction> nominal, const MppiConfig& cfg, Rng& rng);

struct PushLogEntry {
  BoxState state;
  PushAction action;
  BoxState result;
  double goal_cost = 0.0;       // of `result`
  double predicted_sigma = 0.0; // model uncertainty of the executed push
  double gamma = 0.0;           // penalty weight in force for this push
};

struct EpisodeLog {
  std::string model;
  BoxState initial_state;
  BoxState final_state;
  std::vector<PushLogEntry> pushes;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;

  std::size_t push_count() const { return pushes.size(); }
  /// Every visited state: the initial state followed by each push result.
  std::vector<BoxState> visited_states() const;
};

/// Receding-horizon loop: plan, execute the first action on `system`,
/// observe, repeat until the goal cost is within tolerance or max_pushes.
EpisodeLog run_mppi(const ForwardModel& model, PushSystem& system, const MppiConfig& cfg, Rng& rng);

}  // namespace pushcraft
