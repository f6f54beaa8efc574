#include "pushcraft/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pushcraft/errors.hpp"

namespace pushcraft {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::out | std::ios::binary | mode);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

void check_written(std::ostream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

Json vector_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.begin(), v.end())); }

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json matrix_json(const RowMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

RowMatrix matrix_from_json(const Json& j, Eigen::Index cols) {
  RowMatrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Eigen::VectorXd row = vector_from_json(j.at(static_cast<std::size_t>(r)));
    if (row.size() != cols) throw ConfigError("matrix row has the wrong length");
    m.row(r) = row.transpose();
  }
  return m;
}

Json action_json(const PushAction& a) { return Json::array({a.px(), a.py(), a.a()}); }

PushAction action_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("action must be [px, py, a]");
  return PushAction(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Json to_json(const Normalization& n) {
  return {{"input_mean", vector_json(n.input_mean)},
          {"input_std", vector_json(n.input_std)},
          {"target_mean", vector_json(n.target_mean)},
          {"target_std", vector_json(n.target_std)}};
}

Normalization normalization_from_json(const Json& j) {
  Normalization n;
  n.input_mean = vector_from_json(j.at("input_mean"));
  n.input_std = vector_from_json(j.at("input_std"));
  n.target_mean = vector_from_json(j.at("target_mean"));
  n.target_std = vector_from_json(j.at("target_std"));
  return n;
}

Json to_json(const GpHyper& h) {
  return {{"signal_variance", h.signal_variance},
          {"length_scales", vector_json(h.length_scales)},
          {"noise_variance", h.noise_variance}};
}

GpHyper gp_hyper_from_json(const Json& j) {
  GpHyper h;
  h.signal_variance = j.at("signal_variance").get<double>();
  h.length_scales = vector_from_json(j.at("length_scales"));
  h.noise_variance = j.at("noise_variance").get<double>();
  h.validate();
  return h;
}

}  // namespace

Json to_json(const SimParams& p) {
  return {{"box_half_width", p.box_half_width},
          {"box_half_height", p.box_half_height},
          {"push_distance", p.push_distance},
          {"rotation_gain", p.rotation_gain},
          {"contact_noise_std", p.contact_noise_std},
          {"workspace_bounds", {p.workspace.x_min, p.workspace.x_max, p.workspace.y_min, p.workspace.y_max}}};
}

SimParams sim_params_from_json(const Json& j) {
  SimParams p;
  p.box_half_width = j.at("box_half_width").get<double>();
  p.box_half_height = j.at("box_half_height").get<double>();
  p.push_distance = j.at("push_distance").get<double>();
  p.rotation_gain = j.at("rotation_gain").get<double>();
  p.contact_noise_std = j.at("contact_noise_std").get<double>();
  const auto b = j.at("workspace_bounds").get<std::vector<double>>();
  if (b.size() != 4) throw ConfigError("workspace_bounds must have four entries");
  p.workspace = {b[0], b[1], b[2], b[3]};
  p.validate();
  return p;
}

Json to_json(const BoxState& s) { return Json::array({s.x, s.y, s.theta}); }

BoxState box_state_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("state must be [x, y, theta]");
  BoxState s{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  if (!s.finite()) throw ConfigError("state must be finite");
  s.theta = wrap_angle(s.theta);
  return s;
}

void write_dataset(std::ostream& out, const PushDataset& dataset) {
  Json header{{"format", "pushcraft-dataset"},
              {"version", 1},
              {"frame_mode", std::string(to_string(dataset.frame_mode))},
              {"sim", to_json(dataset.params)},
              {"records", dataset.size()}};
  out << header.dump() << '\n';
  for (const auto& r : dataset.records) {
    Json line{{"state", to_json(r.state)}, {"action", action_json(r.action)}, {"next", to_json(r.next)}};
    out << line.dump() << '\n';
  }
}

void write_dataset(const fs::path& path, const PushDataset& dataset) {
  auto out = open_out(path);
  write_dataset(out, dataset);
  check_written(out, path);
}

PushDataset read_dataset(std::istream& in, const std::string& name) {
  PushDataset dataset;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != "pushcraft-dataset") throw ConfigError("missing dataset header");
        dataset.frame_mode = frame_mode_from_string(j.at("frame_mode").get<std::string>());
        dataset.params = sim_params_from_json(j.at("sim"));
        expected = j.at("records").get<std::size_t>();
        dataset.records.reserve(expected);
        have_header = true;
        continue;
      }
      PushRecord r;
      r.state = box_state_from_json(j.at("state"));
      r.action = action_from_json(j.at("action"));
      r.next = box_state_from_json(j.at("next"));
      dataset.records.push_back(r);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(name, line_no, e.what());
    }
  }
  if (!have_header) throw ParseError(name, line_no + 1, "empty dataset file");
  if (dataset.size() != expected) {
    throw ParseError(name, line_no + 1,
                     "header announces " + std::to_string(expected) + " records, found " +
                         std::to_string(dataset.size()));
  }
  return dataset;
}

PushDataset read_dataset(const fs::path& path) {
  auto in = open_in(path);
  return read_dataset(in, path.string());
}

Json to_json(const Ensemble& ensemble) {
  if (ensemble.members.empty()) throw ConfigError("cannot serialize an empty ensemble");
  const MdnArchitecture& arch = ensemble.members.front().architecture();
  Json members = Json::array();
  for (const auto& m : ensemble.members) members.push_back(vector_json(m.values()));
  return {{"kind", "emdn"},
          {"frame_mode", std::string(to_string(ensemble.frame_mode))},
          {"architecture", {{"input_dim", arch.input_dim}, {"hidden", arch.hidden}, {"mixtures", arch.mixtures}}},
          {"normalization", to_json(ensemble.normalization)},
          {"members", members}};
}

Ensemble ensemble_from_json(const Json& j) {
  Ensemble e;
  e.frame_mode = frame_mode_from_string(j.at("frame_mode").get<std::string>());
  MdnArchitecture arch;
  const Json& a = j.at("architecture");
  arch.input_dim = a.at("input_dim").get<int>();
  arch.hidden = a.at("hidden").get<std::vector<int>>();
  arch.mixtures = a.at("mixtures").get<int>();
  arch.validate();
  if (arch.input_dim != model_input_dim(e.frame_mode)) throw ConfigError("input_dim does not match frame_mode");
  e.normalization = normalization_from_json(j.at("normalization"));
  for (const auto& m : j.at("members")) {
    MdnParams params(arch);
    const Eigen::VectorXd values = vector_from_json(m);
    if (values.size() != params.values().size()) throw ConfigError("member parameter count mismatch");
    params.values() = values;
    e.members.push_back(std::move(params));
  }
  if (e.members.empty()) throw ConfigError("ensemble has no members");
  return e;
}

Json to_json(const GpModel& model) {
  Json dims = Json::array();
  for (const auto& d : model.dims) {
    dims.push_back({{"hyper", to_json(d.hyper())}, {"targets", vector_json(d.targets())}});
  }
  return {{"kind", "gp"},
          {"frame_mode", std::string(to_string(model.frame_mode))},
          {"normalization", to_json(model.normalization)},
          {"inputs", matrix_json(model.dims[0].inputs())},
          {"dims", dims}};
}

GpModel gp_model_from_json(const Json& j) {
  const FrameMode mode = frame_mode_from_string(j.at("frame_mode").get<std::string>());
  const Normalization norm = normalization_from_json(j.at("normalization"));
  const RowMatrix inputs = matrix_from_json(j.at("inputs"), model_input_dim(mode));
  const Json& dims = j.at("dims");
  if (dims.size() != kOutputDim) throw ConfigError("gp model needs three output dimensions");
  RowMatrix targets(inputs.rows(), kOutputDim);
  std::array<GpHyper, kOutputDim> hyper;
  for (int d = 0; d < kOutputDim; ++d) {
    hyper[d] = gp_hyper_from_json(dims[d].at("hyper"));
    const Eigen::VectorXd t = vector_from_json(dims[d].at("targets"));
    if (t.size() != inputs.rows()) throw ConfigError("gp targets do not match inputs");
    targets.col(d) = t;
  }
  return gp_from_standardized(mode, norm, inputs, targets, hyper);
}

Json model_to_json(const ForwardModel& model) {
  if (const auto* e = dynamic_cast<const EnsembleModel*>(&model)) return to_json(e->ensemble());
  if (const auto* g = dynamic_cast<const GpForwardModel*>(&model)) return to_json(g->model());
  if (const auto* o = dynamic_cast<const OracleModel*>(&model)) {
    return {{"kind", "oracle"}, {"sim", to_json(o->params())}};
  }
  throw ConfigError("unsupported model type: " + model.descriptor());
}

std::unique_ptr<ForwardModel> model_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "emdn") return std::make_unique<EnsembleModel>(ensemble_from_json(j));
  if (kind == "gp") return std::make_unique<GpForwardModel>(gp_model_from_json(j));
  if (kind == "oracle") return std::make_unique<OracleModel>(sim_params_from_json(j.at("sim")));
  throw ConfigError("unknown model kind '" + kind + "'");
}

void save_model(const fs::path& path, const ForwardModel& model) { write_json(path, model_to_json(model)); }

std::unique_ptr<ForwardModel> load_model(const fs::path& path) {
  const Json j = read_json(path);
  try {
    return model_from_json(j);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_episode(const fs::path& path, const EpisodeLog& log) {
  auto out = open_out(path);
  out << Json{{"model", log.model},
              {"initial_state", to_json(log.initial_state)},
              {"initial_cost", log.initial_cost}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < log.pushes.size(); ++i) {
    const PushLogEntry& p = log.pushes[i];
    out << Json{{"push", i + 1},
                {"state", to_json(p.state)},
                {"action", action_json(p.action)},
                {"result", to_json(p.result)},
                {"goal_cost", p.goal_cost},
                {"sigma", p.predicted_sigma},
                {"gamma", p.gamma}}
               .dump()
        << '\n';
  }
  out << Json{{"final_state", to_json(log.final_state)},
              {"final_cost", log.final_cost},
              {"steps", log.push_count()},
              {"converged", log.converged}}
             .dump()
      << '\n';
  check_written(out, path);
}

std::string format_double(double v) { return Json(v).dump(); }

std::string summary_line(const SummaryRow& row) {
  std::ostringstream s;
  s << row.experiment << ',' << row.config_hash << ',' << row.model << ',' << row.label << ','
    << row.seed << ',' << format_double(row.initial_cost) << ',' << format_double(row.final_cost)
    << ',' << row.steps << ',' << (row.converged ? 1 : 0);
  return s.str();
}

void append_summary(const fs::path& path, const SummaryRow& row) {
  const bool fresh = !fs::exists(path);
  auto out = open_out(path, std::ios::app);
  if (fresh) out << kSummaryHeader << '\n';
  out << summary_line(row) << '\n';
  check_written(out, path);
}

void write_heatmap_csv(const fs::path& path, const HeatMap& map) {
  auto out = open_out(path);
  for (int iy = 0; iy < map.resolution; ++iy) {
    for (int ix = 0; ix < map.resolution; ++ix) {
      if (ix > 0) out << ',';
      out << format_double(map.cell(ix, iy));
    }
    out << '\n';
  }
  check_written(out, path);
}

HeatMap read_heatmap_csv(const fs::path& path, const Rect& bounds) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(path.string(), line_no, "not a number: '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const int res = static_cast<int>(rows.size());
  HeatMap map = tabulate_field(bounds, std::max(res, 1), [](const Vec2&) { return 0.0; });
  for (int iy = 0; iy < res; ++iy) {
    if (static_cast<int>(rows[iy].size()) != res) {
      throw ParseError(path.string(), static_cast<std::size_t>(iy) + 1, "heat map is not square");
    }
    for (int ix = 0; ix < res; ++ix) map.cell(ix, iy) = rows[iy][ix];
  }
  return map;
}

void write_heatmap_svg(const fs::path& path, const HeatMap& map, const std::vector<Overlay>& overlays) {
  constexpr double kSize = 480.0;
  const double lo = map.min_value();
  const double hi = map.max_value();
  const double span = hi > lo ? hi - lo : 1.0;
  const double cw = kSize / map.resolution;
  auto px = [&](double x) { return (x - map.bounds.x_min) / map.bounds.width() * kSize; };
  auto py = [&](double y) { return kSize - (y - map.bounds.y_min) / map.bounds.height() * kSize; };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" viewBox=\"0 0 " << kSize << ' ' << kSize << "\">\n";
  for (int iy = 0; iy < map.resolution; ++iy) {
    for (int ix = 0; ix < map.resolution; ++ix) {
      const double t = (map.cell(ix, iy) - lo) / span;
      const int r = static_cast<int>(255.0 * t);
      const int b = static_cast<int>(255.0 * (1.0 - t));
      out << "<rect x=\"" << ix * cw << "\" y=\"" << kSize - (iy + 1) * cw << "\" width=\"" << cw
          << "\" height=\"" << cw << "\" fill=\"rgb(" << r << ",64," << b << ")\"/>\n";
    }
  }
  for (const auto& o : overlays) {
    out << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << o.color << "\" points=\"";
    for (const auto& p : o.points) out << px(p.x()) << ',' << py(p.y()) << ' ';
    out << "\"/>\n";
  }
  out << "</svg>\n";
  check_written(out, path);
}

Json to_json(const StatePath& path) {
  Json waypoints = Json::array();
  for (const auto& w : path.waypoints) waypoints.push_back(to_json(w));
  return {{"waypoints", waypoints}};
}

StatePath state_path_from_json(const Json& j) {
  StatePath path;
  for (const auto& w : j.at("waypoints")) path.waypoints.push_back(box_state_from_json(w));
  return path;
}

void write_state_path(const fs::path& path, const StatePath& states) { write_json(path, to_json(states)); }

StatePath read_state_path(const fs::path& path) {
  try {
    return state_path_from_json(read_json(path));
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  check_written(out, path);
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string(), 1 + static_cast<std::size_t>(std::count(
                                            text.begin(), text.begin() + std::min(e.byte, text.size()), '\n')),
                     e.what());
  }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(1) + "\n"); }

}  // namespace pushcraft
