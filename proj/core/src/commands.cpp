#include "pushcraft/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "pushcraft/errors.hpp"

namespace pushcraft {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t {
  kData = 1,
  kTrain = 2,
  kSystem = 3,
  kPlanner = 4,
  kHeatmap = 5,
  kTrajopt = 6,
  kTest = 7,
};

std::uint64_t stream_seed(const ExperimentConfig& cfg, std::uint64_t stream) {
  return derive_seed(cfg.seed, stream);
}

template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage '" + name + "' failed: " + e.what());
  }
}

std::vector<Vec2> xy_points(std::span<const BoxState> states) {
  std::vector<Vec2> points;
  points.reserve(states.size());
  for (const auto& s : states) points.emplace_back(s.x, s.y);
  return points;
}

Overlay rect_overlay(const Rect& r, std::string color) {
  return {{{r.x_min, r.y_min}, {r.x_max, r.y_min}, {r.x_max, r.y_max}, {r.x_min, r.y_max}, {r.x_min, r.y_min}},
          std::move(color)};
}

SummaryRow summary_row(const std::string& experiment, const ExperimentConfig& cfg, const EpisodeLog& log,
                       const std::string& label, std::uint64_t seed) {
  return {experiment, config_hash(cfg), log.model, label, seed,
          log.initial_cost, log.final_cost, log.push_count(), log.converged};
}

HeatMap field_for(const ExperimentConfig& cfg, const ForwardModel& model) {
  const Rect& ws = cfg.sim.workspace;
  if (cfg.trajopt.field == "flat") return tabulate_field(ws, cfg.heatmap.resolution, [](const Vec2&) { return 1.0; });
  if (cfg.trajopt.field == "two_lobe") return two_lobe_field(ws, cfg.heatmap.resolution);
  return build_heatmap(model, cfg.sim, ws, cfg.heatmap.resolution, cfg.heatmap.n_mc, stream_seed(cfg, kHeatmap));
}

double max_offset_from_line(const StatePath& path) {
  const Vec2 a(path.waypoints.front().x, path.waypoints.front().y);
  const Vec2 b(path.waypoints.back().x, path.waypoints.back().y);
  const Vec2 d = b - a;
  double worst = 0.0;
  for (const auto& w : path.waypoints) {
    const Vec2 p(w.x, w.y);
    const double t = d.squaredNorm() > 0.0 ? std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0) : 0.0;
    worst = std::max(worst, (p - (a + t * d)).norm());
  }
  return worst;
}

void write_cost_curve(const fs::path& path, std::span<const double> costs) {
  std::ostringstream s;
  s << "iteration,cost\n";
  for (std::size_t i = 0; i < costs.size(); ++i) s << i << ',' << format_double(costs[i]) << '\n';
  write_text(path, s.str());
}

Check at_least(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured, threshold, measured >= threshold, std::move(detail)};
}

Check at_most(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured, threshold, measured <= threshold, std::move(detail)};
}

double heat_ratio(const HeatMap& map, const Rect& region) {
  const double in = map.mean_where([&](const Vec2& c) { return region.contains(c.x(), c.y()); });
  const double out = map.mean_where([&](const Vec2& c) { return !region.contains(c.x(), c.y()); });
  return in / out;
}

}  // namespace

bool ReproReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

LesionResult collect_for(const ExperimentConfig& cfg) {
  Rng rng = make_rng(cfg.seed, kData);
  PushDataset ds = collect_dataset(cfg.data.pushes, cfg.sim, cfg.data.reset_period, rng, cfg.data.frame_mode);
  if (cfg.data.lesion) return lesion(ds, cfg.data.lesion_region);
  return {std::move(ds), 0, false};
}

std::unique_ptr<ForwardModel> train_model(const ExperimentConfig& cfg, const PushDataset& data, double* score) {
  if (cfg.model.kind == "oracle") {
    if (score) *score = 0.0;
    return std::make_unique<OracleModel>(cfg.sim);
  }
  if (data.empty()) throw ConfigError("cannot train on an empty dataset");
  if (cfg.model.kind == "gp") {
    if (data.size() > kMaxGpPoints) throw ConfigError("dataset too large for a dense GP");
    Rng rng = make_rng(cfg.seed, kTrain);
    GpModel gp = gp_fit(data, cfg.model.gp, rng);
    if (score) *score = gp.log_marginal_likelihood();
    return std::make_unique<GpForwardModel>(std::move(gp));
  }
  EnsembleTrainingReport report;
  Ensemble ens = train_ensemble(data, cfg.model.train, cfg.model.members, stream_seed(cfg, kTrain), &report);
  if (score) *score = report.final_loss();
  return std::make_unique<EnsembleModel>(std::move(ens));
}

std::unique_ptr<ForwardModel> resolve_model(const ExperimentConfig& cfg, const fs::path& model_path) {
  if (!model_path.empty()) return load_model(model_path);
  if (cfg.model.kind == "oracle") return std::make_unique<OracleModel>(cfg.sim);
  throw ConfigError("a --model file is required unless model.kind is oracle");
}

std::size_t cmd_collect(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  cfg.validate();
  const LesionResult result = collect_for(cfg);
  write_dataset(out / "dataset.jsonl", result.dataset);
  write_json(out / "config.json", to_json(cfg));
  log << "collected " << result.dataset.size() << " records";
  if (cfg.data.lesion) log << " (" << result.removed << " removed by lesion)";
  log << " -> " << (out / "dataset.jsonl").string() << '\n';
  if (result.empty_warning) log << "warning: lesion removed every record\n";
  return result.dataset.size();
}

void cmd_train(const ExperimentConfig& cfg, const fs::path& dataset, const fs::path& out, std::ostream& log) {
  cfg.validate();
  const PushDataset data = read_dataset(dataset);
  double score = 0.0;
  const auto model = train_model(cfg, data, &score);
  save_model(out / "model.json", *model);
  write_json(out / "config.json", to_json(cfg));
  if (cfg.model.kind == "gp") {
    log << "gp log marginal likelihood " << format_double(score) << '\n';
  } else if (cfg.model.kind == "emdn") {
    log << "emdn final training nll " << format_double(score) << '\n';
  }
  log << "model -> " << (out / "model.json").string() << '\n';
}

EpisodeLog cmd_plan(const ExperimentConfig& cfg, const ForwardModel& model, const fs::path& out, std::ostream& log) {
  cfg.validate();
  PushSystem system(cfg.sim, cfg.start, stream_seed(cfg, kSystem));
  Rng rng = make_rng(cfg.seed, kPlanner);
  EpisodeLog episode = run_mppi(model, system, cfg.mppi, rng);
  write_episode(out / "episode.jsonl", episode);
  append_summary(out / "summary.csv", summary_row("plan", cfg, episode, "mppi", cfg.seed));
  write_json(out / "config.json", to_json(cfg));
  log << "model " << episode.model << ": " << episode.push_count() << " pushes, cost "
      << format_double(episode.initial_cost) << " -> " << format_double(episode.final_cost)
      << (episode.converged ? " (converged)" : " (not converged)") << '\n';
  return episode;
}

HeatMap cmd_heatmap(const ExperimentConfig& cfg, const ForwardModel& model, const fs::path& out, std::ostream& log) {
  cfg.validate();
  HeatMap map = build_heatmap(model, cfg.sim, cfg.sim.workspace, cfg.heatmap.resolution, cfg.heatmap.n_mc,
                              stream_seed(cfg, kHeatmap));
  write_heatmap_csv(out / "heatmap.csv", map);
  std::vector<Overlay> overlays;
  if (cfg.data.lesion) overlays.push_back(rect_overlay(cfg.data.lesion_region, "white"));
  write_heatmap_svg(out / "heatmap.svg", map, overlays);
  write_json(out / "config.json", to_json(cfg));
  log << "heat map " << map.resolution << "x" << map.resolution << ": min " << format_double(map.min_value())
      << ", max " << format_double(map.max_value()) << '\n';
  if (cfg.data.lesion) {
    log << "lesion / elsewhere mean ratio " << format_double(heat_ratio(map, cfg.data.lesion_region)) << '\n';
  }
  return map;
}

TrajoptOutcome cmd_trajopt(const ExperimentConfig& cfg, const ForwardModel& model, const fs::path& out,
                           std::ostream& log) {
  cfg.validate();
  TrajoptOutcome result;
  result.map = field_for(cfg, model);
  result.initial = initial_path(cfg.trajopt.start, cfg.trajopt.goal, cfg.trajopt.optimizer.waypoints);
  Rng rng = make_rng(cfg.seed, kTrajopt);
  result.optimized = optimize_path(result.initial, result.map, cfg.trajopt.optimizer, rng);

  PushSystem system(cfg.sim, cfg.trajopt.start, stream_seed(cfg, kSystem));
  Rng planner = make_rng(cfg.seed, kPlanner);
  result.tracking = track_path(result.optimized.path, model, system, cfg.mppi, planner);

  write_state_path(out / "path.json", result.optimized.path);
  write_cost_curve(out / "trajopt_costs.csv", result.optimized.cost_history);
  write_episode(out / "tracking.jsonl", result.tracking);
  write_heatmap_csv(out / "heatmap.csv", result.map);
  const auto executed = result.tracking.visited_states();
  write_heatmap_svg(out / "heatmap.svg", result.map,
                    {{xy_points(result.initial.waypoints), "gray"},
                     {xy_points(result.optimized.path.waypoints), "white"},
                     {xy_points(executed), "lime"}});
  write_json(out / "config.json", to_json(cfg));
  log << "path cost " << format_double(result.optimized.cost_history.front()) << " -> "
      << format_double(result.optimized.cost_history.back()) << " in " << result.optimized.iterations
      << " iterations; tracking " << result.tracking.push_count() << " pushes"
      << (result.tracking.converged ? " (converged)" : " (not converged)") << '\n';
  return result;
}

ExperimentConfig canned_config(int experiment) {
  ExperimentConfig cfg;
  switch (experiment) {
    case 1:
      cfg.data.pushes = 326;
      cfg.data.frame_mode = FrameMode::object;
      cfg.data.lesion_region = {-0.5, 0.0, -0.25, 0.25};
      cfg.model.members = 10;
      cfg.model.train.hidden_layers = {20, 20, 20};
      break;
    case 2:
      cfg.data.pushes = 326;
      cfg.model.members = 10;
      cfg.mppi.samples = 150;
      cfg.mppi.horizon = 2;
      cfg.mppi.decay_steps = 20;
      cfg.mppi.rho = 1.0;
      cfg.mppi.delta_t = 0.05;
      cfg.mppi.q_diag = {1.5, 1.5, 0.01};
      cfg.mppi.gamma = 0.0;
      cfg.mppi.lambda = 1.0;
      cfg.mppi.max_pushes = 20;
      cfg.start = {-0.25, -0.25, 0.0};
      cfg.mppi.goal = {0.25, 0.28, 0.0};
      break;
    case 3:
      cfg.data.pushes = 261;
      cfg.data.frame_mode = FrameMode::world;
      cfg.data.lesion = true;
      cfg.data.lesion_region = {-0.5, 0.0, -0.25, 0.25};
      cfg.model.members = 10;
      cfg.model.train.hidden_layers = {25};
      cfg.mppi.samples = 10;
      cfg.mppi.decay_steps = 0;
      cfg.mppi.rho = 2.0;
      cfg.mppi.q_diag = {0.5, 0.5, 0.5};
      cfg.mppi.lambda = 2.0;
      cfg.mppi.gamma = 115.0;
      cfg.mppi.gamma_pushes = 150;
      cfg.mppi.max_pushes = 300;
      cfg.start = {-0.25, -0.4, 0.0};
      cfg.mppi.goal = {-0.25, 0.4, 0.0};
      break;
    case 4:
      cfg.model.kind = "oracle";
      cfg.trajopt.field = "two_lobe";
      cfg.trajopt.start = {0.0, -0.4, 0.0};
      cfg.trajopt.goal = {0.0, 0.4, 0.0};
      cfg.trajopt.optimizer.bounds = StateBounds::from_workspace(cfg.sim.workspace);
      cfg.heatmap.resolution = 40;
      cfg.mppi.q_diag = {1.5, 1.5, 0.0};
      cfg.mppi.lambda = 0.02;
      cfg.mppi.goal_tolerance = 0.005;
      cfg.mppi.max_pushes = 80;
      cfg.start = cfg.trajopt.start;
      cfg.mppi.goal = cfg.trajopt.goal;
      break;
    default:
      throw ConfigError("experiment must be 1, 2, 3 or 4");
  }
  cfg.output_dir = "repro";
  return cfg;
}

namespace {

constexpr int kLesionSeeds = 3;
constexpr std::size_t kLesionPushes = 1000;
constexpr int kLesionMembers = 5;
constexpr int kTestPushes = 200;
constexpr int kEpisodeSeeds = 5;

void repro_prediction(const ExperimentConfig& cfg, const fs::path& dir, ReproReport& report, std::ostream& log) {
  const PushDataset train = stage("collect", [&] { return collect_for(cfg).dataset; });
  write_dataset(dir / "dataset.jsonl", train);
  report.data_files.push_back("dataset.jsonl");
  report.checks.push_back(at_least("training pushes", static_cast<double>(train.size()), 326.0));

  ExperimentConfig emdn_cfg = cfg;
  emdn_cfg.model.kind = "emdn";
  double nll = 0.0;
  const auto emdn = stage("train-emdn", [&] { return train_model(emdn_cfg, train, &nll); });
  save_model(dir / "emdn.json", *emdn);
  report.data_files.push_back("emdn.json");
  log << "emdn trained, final nll " << format_double(nll) << '\n';

  ExperimentConfig gp_cfg = cfg;
  gp_cfg.model.kind = "gp";
  double lml = 0.0;
  const auto gp = stage("train-gp", [&] { return train_model(gp_cfg, train, &lml); });
  save_model(dir / "gp.json", *gp);
  report.data_files.push_back("gp.json");
  log << "gp fitted, log marginal likelihood " << format_double(lml) << '\n';

  stage("evaluate", [&] {
    Rng rng = make_rng(cfg.seed, kTest);
    const PushDataset test = collect_dataset(kTestPushes, cfg.sim, cfg.data.reset_period, rng, cfg.data.frame_mode);
    std::ostringstream scatter;
    std::ostringstream metrics;
    scatter << "model,record,dim,true,predicted,std\n";
    metrics << "model,dim,rmse,mean_std\n";
    for (const ForwardModel* model : {emdn.get(), gp.get()}) {
      Vec3 sq = Vec3::Zero();
      Vec3 sd = Vec3::Zero();
      for (std::size_t i = 0; i < test.size(); ++i) {
        const PushRecord& r = test.records[i];
        const Vec3 truth = object_frame_delta(r.state, r.next);
        const Prediction p = model->predict(r.state, r.action);
        for (int d = 0; d < 3; ++d) {
          const double s = std::sqrt(p.variance[d]);
          scatter << model->descriptor() << ',' << i << ',' << d << ',' << format_double(truth[d]) << ','
                  << format_double(p.mean[d]) << ',' << format_double(s) << '\n';
          sq[d] += (truth[d] - p.mean[d]) * (truth[d] - p.mean[d]);
          sd[d] += s;
        }
      }
      for (int d = 0; d < 3; ++d) {
        const double rmse = std::sqrt(sq[d] / static_cast<double>(test.size()));
        metrics << model->descriptor() << ',' << d << ',' << format_double(rmse) << ','
                << format_double(sd[d] / static_cast<double>(test.size())) << '\n';
        log << model->descriptor() << " dim " << d << " rmse " << format_double(rmse) << '\n';
      }
    }
    write_text(dir / "scatter.csv", scatter.str());
    write_text(dir / "metrics.csv", metrics.str());
    return 0;
  });
  report.data_files.push_back("scatter.csv");
  report.data_files.push_back("metrics.csv");

  stage("lesion", [&] {
    std::ostringstream rows;
    rows << "seed,kept,ratio\n";
    int passing = 0;
    for (int s = 0; s < kLesionSeeds; ++s) {
      ExperimentConfig lc = cfg;
      lc.seed = cfg.seed + static_cast<std::uint64_t>(s);
      lc.data.pushes = kLesionPushes;
      lc.data.frame_mode = FrameMode::world;
      lc.data.lesion = true;
      lc.model.kind = "emdn";
      lc.model.members = kLesionMembers;
      const PushDataset data = collect_for(lc).dataset;
      const auto model = train_model(lc, data);
      const HeatMap map = build_heatmap(*model, lc.sim, lc.sim.workspace, lc.heatmap.resolution, lc.heatmap.n_mc,
                                        stream_seed(lc, kHeatmap));
      const double ratio = heat_ratio(map, lc.data.lesion_region);
      const std::string name = "heatmap_lesion_" + std::to_string(s);
      write_heatmap_csv(dir / (name + ".csv"), map);
      write_heatmap_svg(dir / (name + ".svg"), map, {rect_overlay(lc.data.lesion_region, "white")});
      report.data_files.push_back(name + ".csv");
      rows << lc.seed << ',' << data.size() << ',' << format_double(ratio) << '\n';
      report.checks.push_back(at_least("lesion ratio seed " + std::to_string(lc.seed), ratio, 1.5));
      if (ratio >= 1.5) ++passing;
      log << "lesion seed " << lc.seed << ": inside / outside mean sigma " << format_double(ratio) << '\n';
    }
    write_text(dir / "lesion.csv", rows.str());
    report.checks.push_back(at_least("lesion seeds passing", passing, kLesionSeeds));
    return 0;
  });
  report.data_files.push_back("lesion.csv");
}

void repro_goal_reaching(const ExperimentConfig& cfg, const fs::path& dir, ReproReport& report, std::ostream& log) {
  const fs::path summary = dir / "summary.csv";
  auto run_seeds = [&](const ForwardModel& model, const std::string& label) {
    int successes = 0;
    for (int s = 0; s < kEpisodeSeeds; ++s) {
      ExperimentConfig ec = cfg;
      ec.seed = cfg.seed + static_cast<std::uint64_t>(s);
      PushSystem system(ec.sim, ec.start, stream_seed(ec, kSystem));
      Rng rng = make_rng(ec.seed, kPlanner);
      const EpisodeLog episode = run_mppi(model, system, ec.mppi, rng);
      const std::string name = "episode_" + label + "_" + std::to_string(s) + ".jsonl";
      write_episode(dir / name, episode);
      report.data_files.push_back(name);
      append_summary(summary, summary_row("2", cfg, episode, label, ec.seed));
      if (episode.final_cost <= 0.15 && episode.push_count() <= 20) ++successes;
      log << label << " seed " << ec.seed << ": " << episode.push_count() << " pushes, cost "
          << format_double(episode.initial_cost) << " -> " << format_double(episode.final_cost) << '\n';
    }
    report.checks.push_back(at_least(label + " episodes reaching cost <= 0.15 within 20 pushes", successes, 4));
  };

  const double initial = final_cost(cfg.start, cfg.mppi);
  report.checks.push_back(
      at_most("initial cost deviation from 0.8", std::abs(initial - 0.8), 0.05, "initial " + format_double(initial)));
  const OracleModel oracle(cfg.sim);
  stage("oracle", [&] {
    run_seeds(oracle, "oracle");
    return 0;
  });

  const PushDataset data = stage("collect", [&] { return collect_for(cfg).dataset; });
  ExperimentConfig mc = cfg;
  mc.model.kind = "emdn";
  const auto emdn = stage("train-emdn", [&] { return train_model(mc, data); });
  save_model(dir / "emdn.json", *emdn);
  report.data_files.push_back("emdn.json");
  stage("emdn", [&] {
    run_seeds(*emdn, "emdn");
    return 0;
  });
  report.data_files.push_back("summary.csv");
}

void repro_detour(const ExperimentConfig& cfg, const fs::path& dir, ReproReport& report, std::ostream& log) {
  const LesionResult data = stage("collect", [&] { return collect_for(cfg); });
  write_dataset(dir / "dataset.jsonl", data.dataset);
  report.data_files.push_back("dataset.jsonl");
  ExperimentConfig mc = cfg;
  mc.model.kind = "emdn";
  const auto model = stage("train-emdn", [&] { return train_model(mc, data.dataset); });
  save_model(dir / "emdn.json", *model);
  report.data_files.push_back("emdn.json");

  const HeatMap map = stage("heatmap", [&] {
    return build_heatmap(*model, cfg.sim, cfg.sim.workspace, cfg.heatmap.resolution, cfg.heatmap.n_mc,
                         stream_seed(cfg, kHeatmap));
  });
  write_heatmap_csv(dir / "heatmap.csv", map);
  report.data_files.push_back("heatmap.csv");
  log << "lesion / elsewhere mean sigma " << format_double(heat_ratio(map, cfg.data.lesion_region)) << '\n';

  stage("episodes", [&] {
    std::ostringstream rows;
    rows << "seed,mean_sigma_gamma0,mean_sigma_gamma,converged_gamma0,converged_gamma,pushes_gamma0,pushes_gamma\n";
    int successes = 0;
    std::vector<Overlay> overlays{rect_overlay(cfg.data.lesion_region, "white")};
    for (int s = 0; s < kEpisodeSeeds; ++s) {
      ExperimentConfig ec = cfg;
      ec.seed = cfg.seed + static_cast<std::uint64_t>(s);
      EpisodeLog runs[2];
      double heat[2];
      for (int v = 0; v < 2; ++v) {
        MppiConfig m = ec.mppi;
        if (v == 0) m.gamma = 0.0;
        PushSystem system(ec.sim, ec.start, stream_seed(ec, kSystem));
        Rng rng = make_rng(ec.seed, kPlanner);
        runs[v] = run_mppi(*model, system, m, rng);
        const auto visited = runs[v].visited_states();
        heat[v] = mean_heat(map, visited);
        const std::string label = v == 0 ? "gamma0" : "gamma";
        const std::string name = "episode_" + label + "_" + std::to_string(s) + ".jsonl";
        write_episode(dir / name, runs[v]);
        report.data_files.push_back(name);
        append_summary(dir / "summary.csv", summary_row("3", cfg, runs[v], label, ec.seed));
        if (s == 0) overlays.push_back({xy_points(visited), v == 0 ? "gray" : "lime"});
      }
      if (heat[1] < heat[0] && runs[0].converged && runs[1].converged) ++successes;
      rows << ec.seed << ',' << format_double(heat[0]) << ',' << format_double(heat[1]) << ','
           << runs[0].converged << ',' << runs[1].converged << ',' << runs[0].push_count() << ','
           << runs[1].push_count() << '\n';
      log << "seed " << ec.seed << ": mean sigma " << format_double(heat[0]) << " (gamma 0, "
          << runs[0].push_count() << " pushes) vs " << format_double(heat[1]) << " (gamma "
          << format_double(cfg.mppi.gamma) << ", " << runs[1].push_count() << " pushes)\n";
    }
    write_text(dir / "detour.csv", rows.str());
    write_heatmap_svg(dir / "heatmap.svg", map, overlays);
    report.checks.push_back(at_least("seeds with lower sigma and both runs converged", successes, 4));
    return 0;
  });
  report.data_files.push_back("detour.csv");
  report.data_files.push_back("summary.csv");
}

void repro_decoupled(const ExperimentConfig& cfg, const fs::path& dir, ReproReport& report, std::ostream& log) {
  const auto model = resolve_model(cfg, {});
  const TrajoptOutcome outcome = stage("trajopt", [&] { return cmd_trajopt(cfg, *model, dir, log); });
  for (const char* f : {"path.json", "trajopt_costs.csv", "tracking.jsonl", "heatmap.csv"}) {
    report.data_files.push_back(f);
  }
  const auto& costs = outcome.optimized.cost_history;
  report.checks.push_back(at_most("optimized / straight path cost", costs.back() / costs.front(), 0.8));
  const auto& w = outcome.optimized.path.waypoints;
  const bool fixed = w.front() == outcome.initial.waypoints.front() && w.back() == outcome.initial.waypoints.back();
  report.checks.push_back({"endpoints unchanged", fixed ? 1.0 : 0.0, 1.0, fixed, {}});
  const bool monotone = std::is_sorted(costs.rbegin(), costs.rend());
  report.checks.push_back({"non-increasing cost history", monotone ? 1.0 : 0.0, 1.0, monotone, {}});
  report.checks.push_back(at_most("tracked final goal cost", outcome.tracking.final_cost, cfg.mppi.goal_tolerance));

  stage("direct", [&] {
    PushSystem system(cfg.sim, cfg.trajopt.start, stream_seed(cfg, kSystem));
    Rng rng = make_rng(cfg.seed, kPlanner);
    MppiConfig m = cfg.mppi;
    m.gamma = 0.0;
    m.goal = cfg.trajopt.goal;
    const EpisodeLog direct = run_mppi(*model, system, m, rng);
    write_episode(dir / "direct.jsonl", direct);
    const auto tracked_states = outcome.tracking.visited_states();
    const auto direct_states = direct.visited_states();
    const double tracked = mean_heat(outcome.map, tracked_states);
    const double straight = mean_heat(outcome.map, direct_states);
    std::ostringstream s;
    s << "run,mean_sigma,pushes,final_cost\n"
      << "tracked," << format_double(tracked) << ',' << outcome.tracking.push_count() << ','
      << format_double(outcome.tracking.final_cost) << '\n'
      << "direct," << format_double(straight) << ',' << direct.push_count() << ','
      << format_double(direct.final_cost) << '\n';
    write_text(dir / "comparison.csv", s.str());
    report.checks.push_back(at_most("tracked / direct mean sigma", tracked / straight, 1.0));
    return 0;
  });
  report.data_files.push_back("direct.jsonl");
  report.data_files.push_back("comparison.csv");

  stage("flat", [&] {
    ExperimentConfig fc = cfg;
    fc.trajopt.field = "flat";
    const HeatMap flat = field_for(fc, *model);
    const StatePath init = initial_path(fc.trajopt.start, fc.trajopt.goal, fc.trajopt.optimizer.waypoints);
    Rng rng = make_rng(fc.seed, kTrajopt);
    const OptimizeResult r = optimize_path(init, flat, fc.trajopt.optimizer, rng);
    write_state_path(dir / "path_flat.json", r.path);
    report.checks.push_back(at_most("flat-field offset from straight line", max_offset_from_line(r.path),
                                    fc.trajopt.optimizer.perturbation_std));
    return 0;
  });
  report.data_files.push_back("path_flat.json");
}

std::string render_report(const ReproReport& report, const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << "experiment " << report.experiment << '\n'
    << "config hash " << config_hash(cfg) << '\n'
    << "seed " << cfg.seed << '\n'
    << "wall clock " << report.seconds << " s\n\n";
  for (const auto& c : report.checks) {
    s << (c.pass ? "PASS " : "FAIL ") << c.name << ": measured " << format_double(c.measured) << ", threshold "
      << format_double(c.threshold);
    if (!c.detail.empty()) s << " (" << c.detail << ')';
    s << '\n';
  }
  s << '\n' << (report.passed() ? "all checks passed" : "some checks failed") << '\n';
  return s.str();
}

}  // namespace

ReproReport cmd_repro(int experiment, const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  if (experiment < 1 || experiment > 4) throw ConfigError("experiment must be 1, 2, 3 or 4");
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = out / ("exp" + std::to_string(experiment));
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  ReproReport report;
  report.experiment = experiment;
  write_json(dir / "config.json", to_json(cfg));
  report.data_files.push_back("config.json");
  switch (experiment) {
    case 1: repro_prediction(cfg, dir, report, log); break;
    case 2: repro_goal_reaching(cfg, dir, report, log); break;
    case 3: repro_detour(cfg, dir, report, log); break;
    default: repro_decoupled(cfg, dir, report, log); break;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string text = render_report(report, cfg);
  write_text(dir / "report.txt", text);
  log << text;
  return report;
}

}  // namespace pushcraft
