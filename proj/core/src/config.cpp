#include "pushcraft/config.hpp"

#include <cstdio>

#include "pushcraft/errors.hpp"

namespace pushcraft {

namespace {

Json vec3_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }
Json rect_json(const Rect& r) { return Json::array({r.x_min, r.x_max, r.y_min, r.y_max}); }

Json matrix3_json(const Eigen::Matrix3d& m) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(Json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

/// Checks every key of `given` against the defaults document, recursively.
void check_keys(const Json& given, const Json& schema, const std::string& where) {
  if (!given.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (where == "mppi" && key == "h") continue;
    if (!schema.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    if (schema[key].is_object()) check_keys(value, schema[key], path);
  }
}

template <class T>
T read(const Json& obj, const char* key, const std::string& section) {
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("config key '" + section + "." + key + "': " + e.what());
  }
}

Vec3 read_vec3(const Json& obj, const char* key, const std::string& section) {
  const auto v = read<std::vector<double>>(obj, key, section);
  if (v.size() != 3) throw ConfigError("config key '" + section + "." + key + "' needs 3 values");
  return {v[0], v[1], v[2]};
}

BoxState read_state(const Json& obj, const char* key, const std::string& section) {
  const Vec3 v = read_vec3(obj, key, section);
  return {v[0], v[1], wrap_angle(v[2])};
}

Rect read_rect(const Json& obj, const char* key, const std::string& section) {
  const auto v = read<std::vector<double>>(obj, key, section);
  if (v.size() != 4) throw ConfigError("config key '" + section + "." + key + "' needs 4 values");
  return {v[0], v[1], v[2], v[3]};
}

Eigen::Matrix3d read_matrix3(const Json& obj, const char* key, const std::string& section) {
  const auto rows = read<std::vector<std::vector<double>>>(obj, key, section);
  Eigen::Matrix3d m;
  if (rows.size() != 3) throw ConfigError("config key '" + section + "." + key + "' needs 3 rows");
  for (int r = 0; r < 3; ++r) {
    if (rows[r].size() != 3) throw ConfigError("config key '" + section + "." + key + "' needs 3 columns");
    for (int c = 0; c < 3; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace

void ExperimentConfig::validate() const {
  sim.validate();
  if (data.pushes < 1) throw ConfigError("data.pushes must be >= 1");
  if (data.reset_period < 1) throw ConfigError("data.reset_period must be >= 1");
  if (data.lesion && !data.lesion_region.well_ordered()) throw ConfigError("data.lesion_region is not well-ordered");
  if (model.kind != "emdn" && model.kind != "gp" && model.kind != "oracle") {
    throw ConfigError("model.kind must be emdn, gp or oracle");
  }
  if (model.members < 1) throw ConfigError("model.members must be >= 1");
  model.train.validate();
  if (model.gp.restarts < 0 || model.gp.iterations < 0) throw ConfigError("model.gp counts must be >= 0");
  mppi.validate();
  if (!start.finite()) throw ConfigError("start must be finite");
  if (heatmap.resolution < 2) throw ConfigError("heatmap.resolution must be >= 2");
  if (heatmap.n_mc < 1) throw ConfigError("heatmap.n_mc must be >= 1");
  trajopt.optimizer.validate();
  if (trajopt.field != "model" && trajopt.field != "flat" && trajopt.field != "two_lobe") {
    throw ConfigError("trajopt.field must be model, flat or two_lobe");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

Json to_json(const ExperimentConfig& cfg) {
  const TrainConfig& t = cfg.model.train;
  const MppiConfig& m = cfg.mppi;
  const TrajOptConfig& o = cfg.trajopt.optimizer;
  return {
      {"sim", to_json(cfg.sim)},
      {"data",
       {{"pushes", cfg.data.pushes},
        {"reset_period", cfg.data.reset_period},
        {"frame_mode", std::string(to_string(cfg.data.frame_mode))},
        {"lesion", cfg.data.lesion},
        {"lesion_region", rect_json(cfg.data.lesion_region)}}},
      {"model",
       {{"kind", cfg.model.kind},
        {"members", cfg.model.members},
        {"train",
         {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"adversarial_eps", t.adversarial_eps},
          {"hidden_layers", t.hidden_layers},
          {"mixtures", t.mixtures},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"adam_epsilon", t.adam_epsilon}}},
        {"gp",
         {{"optimize", cfg.model.gp.optimize},
          {"restarts", cfg.model.gp.restarts},
          {"iterations", cfg.model.gp.iterations}}}}},
      {"mppi",
       {{"samples", m.samples},
        {"horizon", m.horizon},
        {"decay_steps", m.decay_steps},
        {"eta_init", m.eta_init},
        {"rho", m.rho},
        {"delta_t", m.delta_t},
        {"lambda", m.lambda},
        {"q_diag", vec3_json(m.q_diag)},
        {"r", matrix3_json(m.r)},
        {"gamma", m.gamma},
        {"gamma_pushes", m.gamma_pushes},
        {"u_init", vec3_json(m.u_init)},
        {"goal", to_json(m.goal)},
        {"goal_tolerance", m.goal_tolerance},
        {"max_pushes", m.max_pushes},
        {"decay_rate", m.decay_rate}}},
      {"start", to_json(cfg.start)},
      {"heatmap", {{"resolution", cfg.heatmap.resolution}, {"n_mc", cfg.heatmap.n_mc}}},
      {"trajopt",
       {{"samples", o.samples},
        {"waypoints", o.waypoints},
        {"alpha", o.alpha},
        {"lambda", o.lambda},
        {"perturbation_std", o.perturbation_std},
        {"eps_threshold", o.eps_threshold},
        {"patience", o.patience},
        {"max_iters", o.max_iters},
        {"normalize_by_length", o.normalize_by_length},
        {"lower", vec3_json(o.bounds.lower)},
        {"upper", vec3_json(o.bounds.upper)},
        {"start", to_json(cfg.trajopt.start)},
        {"goal", to_json(cfg.trajopt.goal)},
        {"field", cfg.trajopt.field}}},
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
  };
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  const Json defaults = to_json(ExperimentConfig{});
  check_keys(j, defaults, "");
  Json doc = defaults;
  doc.merge_patch(j);
  if (j.contains("mppi") && j["mppi"].contains("h")) {
    if (!j["mppi"].contains("lambda")) doc["mppi"]["lambda"] = j["mppi"]["h"];
    doc["mppi"].erase("h");
  }

  ExperimentConfig cfg;
  try {
    cfg.sim = sim_params_from_json(doc["sim"]);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config section 'sim': ") + e.what());
  }

  const Json& d = doc["data"];
  cfg.data.pushes = read<std::size_t>(d, "pushes", "data");
  cfg.data.reset_period = read<std::size_t>(d, "reset_period", "data");
  cfg.data.frame_mode = frame_mode_from_string(read<std::string>(d, "frame_mode", "data"));
  cfg.data.lesion = read<bool>(d, "lesion", "data");
  cfg.data.lesion_region = read_rect(d, "lesion_region", "data");

  const Json& mo = doc["model"];
  cfg.model.kind = read<std::string>(mo, "kind", "model");
  cfg.model.members = read<int>(mo, "members", "model");
  const Json& t = mo["train"];
  TrainConfig& tc = cfg.model.train;
  tc.epochs = read<int>(t, "epochs", "model.train");
  tc.batch_size = read<int>(t, "batch_size", "model.train");
  tc.learning_rate = read<double>(t, "learning_rate", "model.train");
  tc.adversarial_eps = read<double>(t, "adversarial_eps", "model.train");
  tc.hidden_layers = read<std::vector<int>>(t, "hidden_layers", "model.train");
  tc.mixtures = read<int>(t, "mixtures", "model.train");
  tc.beta1 = read<double>(t, "beta1", "model.train");
  tc.beta2 = read<double>(t, "beta2", "model.train");
  tc.adam_epsilon = read<double>(t, "adam_epsilon", "model.train");
  const Json& g = mo["gp"];
  cfg.model.gp.optimize = read<bool>(g, "optimize", "model.gp");
  cfg.model.gp.restarts = read<int>(g, "restarts", "model.gp");
  cfg.model.gp.iterations = read<int>(g, "iterations", "model.gp");

  const Json& m = doc["mppi"];
  MppiConfig& mc = cfg.mppi;
  mc.samples = read<int>(m, "samples", "mppi");
  mc.horizon = read<int>(m, "horizon", "mppi");
  mc.decay_steps = read<int>(m, "decay_steps", "mppi");
  mc.eta_init = read<double>(m, "eta_init", "mppi");
  mc.rho = read<double>(m, "rho", "mppi");
  mc.delta_t = read<double>(m, "delta_t", "mppi");
  mc.lambda = read<double>(m, "lambda", "mppi");
  mc.q_diag = read_vec3(m, "q_diag", "mppi");
  mc.r = read_matrix3(m, "r", "mppi");
  mc.gamma = read<double>(m, "gamma", "mppi");
  mc.gamma_pushes = read<int>(m, "gamma_pushes", "mppi");
  mc.u_init = read_vec3(m, "u_init", "mppi");
  mc.goal = read_state(m, "goal", "mppi");
  mc.goal_tolerance = read<double>(m, "goal_tolerance", "mppi");
  mc.max_pushes = read<int>(m, "max_pushes", "mppi");
  mc.decay_rate = read<double>(m, "decay_rate", "mppi");

  cfg.start = read_state(doc, "start", "");
  cfg.heatmap.resolution = read<int>(doc["heatmap"], "resolution", "heatmap");
  cfg.heatmap.n_mc = read<int>(doc["heatmap"], "n_mc", "heatmap");

  const Json& o = doc["trajopt"];
  TrajOptConfig& oc = cfg.trajopt.optimizer;
  oc.samples = read<int>(o, "samples", "trajopt");
  oc.waypoints = read<int>(o, "waypoints", "trajopt");
  oc.alpha = read<double>(o, "alpha", "trajopt");
  oc.lambda = read<double>(o, "lambda", "trajopt");
  oc.perturbation_std = read<double>(o, "perturbation_std", "trajopt");
  oc.eps_threshold = read<double>(o, "eps_threshold", "trajopt");
  oc.patience = read<int>(o, "patience", "trajopt");
  oc.max_iters = read<int>(o, "max_iters", "trajopt");
  oc.normalize_by_length = read<bool>(o, "normalize_by_length", "trajopt");
  oc.bounds.lower = read_vec3(o, "lower", "trajopt");
  oc.bounds.upper = read_vec3(o, "upper", "trajopt");
  cfg.trajopt.start = read_state(o, "start", "trajopt");
  cfg.trajopt.goal = read_state(o, "goal", "trajopt");
  cfg.trajopt.field = read<std::string>(o, "field", "trajopt");

  cfg.seed = read<std::uint64_t>(doc, "seed", "");
  cfg.output_dir = read<std::string>(doc, "output_dir", "");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return experiment_config_from_json(read_json(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pushcraft
