#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pushcraft/errors.hpp"
#include "pushcraft/io.hpp"

using namespace pushcraft;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pushcraft_test_io";
  fs::create_directories(dir);
  return dir / name;
}

PushDataset sample_dataset(std::size_t n, FrameMode mode = FrameMode::object) {
  Rng rng(1);
  return collect_dataset(n, SimParams{}, 20, rng, mode);
}

void expect_same_predictions(const ForwardModel& a, const ForwardModel& b) {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const BoxState s{uniform01(rng) - 0.5, uniform01(rng) - 0.5, uniform01(rng)};
    const PushAction u = random_push(rng, SimParams{});
    const Prediction pa = a.predict(s, u);
    const Prediction pb = b.predict(s, u);
    EXPECT_EQ(pa.mean, pb.mean);
    EXPECT_EQ(pa.variance, pb.variance);
    EXPECT_EQ(pa.sigma, pb.sigma);
  }
}

}  // namespace

TEST(Io, DatasetRoundTripIsBitExact) {
  const PushDataset d = sample_dataset(326, FrameMode::world);
  std::stringstream buffer;
  write_dataset(buffer, d);
  const PushDataset back = read_dataset(buffer);
  EXPECT_EQ(back, d);

  std::stringstream again;
  write_dataset(again, back);
  EXPECT_EQ(again.str(), buffer.str());
}

TEST(Io, DatasetFileHasHeaderPlusOneLinePerRecord) {
  const fs::path path = scratch("d326.jsonl");
  write_dataset(path, sample_dataset(326));
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 327u);
  EXPECT_EQ(read_dataset(path).size(), 326u);
}

TEST(Io, MalformedDatasetReportsLineNumber) {
  std::stringstream buffer;
  write_dataset(buffer, sample_dataset(5));
  std::string text = buffer.str();
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
  text.insert(pos, "{not json\n");
  std::stringstream broken(text);
  try {
    read_dataset(broken, "broken.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("broken.jsonl:4"), std::string::npos);
  }
}

TEST(Io, TruncatedDatasetIsRejected) {
  std::stringstream buffer;
  write_dataset(buffer, sample_dataset(5));
  std::string text = buffer.str();
  text.erase(text.rfind('\n', text.size() - 2) + 1);
  std::stringstream truncated(text);
  EXPECT_THROW(read_dataset(truncated), ParseError);
  std::stringstream empty;
  EXPECT_THROW(read_dataset(empty), ParseError);
}

TEST(Io, EnsembleRoundTripReproducesPredictions) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.hidden_layers = {5, 3};
  cfg.mixtures = 2;
  const EnsembleModel model(train_ensemble(sample_dataset(30, FrameMode::world), cfg, 3, 4));
  const fs::path path = scratch("emdn.json");
  save_model(path, model);
  const auto loaded = load_model(path);
  ASSERT_EQ(loaded->descriptor(), "emdn");
  EXPECT_EQ(dynamic_cast<const EnsembleModel&>(*loaded).ensemble(), model.ensemble());
  expect_same_predictions(model, *loaded);
}

TEST(Io, GpRoundTripReproducesPredictions) {
  Rng rng(2);
  GpFitOptions opts;
  opts.restarts = 0;
  opts.iterations = 5;
  const GpForwardModel model(gp_fit(sample_dataset(40), opts, rng));
  const fs::path path = scratch("gp.json");
  save_model(path, model);
  const auto loaded = load_model(path);
  ASSERT_EQ(loaded->descriptor(), "gp");
  expect_same_predictions(model, *loaded);
}

TEST(Io, OracleRoundTrip) {
  SimParams p;
  p.rotation_gain = 4.5;
  const OracleModel model(p);
  const auto loaded = model_from_json(model_to_json(model));
  EXPECT_EQ(dynamic_cast<const OracleModel&>(*loaded).params(), p);
}

TEST(Io, UnknownModelKindIsRejected) {
  EXPECT_THROW(model_from_json(Json{{"kind", "forest"}}), ConfigError);
}

TEST(Io, HeatMapCsvRoundTrip) {
  const Rect bounds{-0.5, 0.5, -0.5, 0.5};
  const HeatMap map = tabulate_field(bounds, 3, [](const Vec2& p) { return 0.1 + p.x() + 3.0 * p.y() * p.y(); });
  const fs::path path = scratch("heat.csv");
  write_heatmap_csv(path, map);
  const HeatMap back = read_heatmap_csv(path, bounds);
  EXPECT_EQ(back.resolution, 3);
  EXPECT_EQ(back.values, map.values);
}

TEST(Io, TwoByTwoHeatMapHasFourCells) {
  const HeatMap map = tabulate_field({-0.5, 0.5, -0.5, 0.5}, 2, [](const Vec2&) { return 1.0; });
  const fs::path path = scratch("heat2.csv");
  write_heatmap_csv(path, map);
  const std::string text = read_text(path);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_EQ(std::count(text.begin(), text.end(), ','), 2);
}

TEST(Io, HeatMapSvgContainsCellsAndOverlay) {
  const HeatMap map = tabulate_field({-0.5, 0.5, -0.5, 0.5}, 4, [](const Vec2& p) { return p.x(); });
  const fs::path path = scratch("heat.svg");
  write_heatmap_svg(path, map, {{{Vec2(0, 0), Vec2(0.2, 0.3)}, "lime"}});
  const std::string svg = read_text(path);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  std::size_t rects = 0;
  for (std::size_t pos = svg.find("<rect"); pos != std::string::npos; pos = svg.find("<rect", pos + 1)) ++rects;
  EXPECT_GE(rects, 16u);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
  EXPECT_NE(svg.find("lime"), std::string::npos);
}

TEST(Io, StatePathRoundTrip) {
  StatePath p{{{0.1, 0.2, 0.3}, {-0.25, 1.0 / 3.0, 3.0}}};
  const fs::path path = scratch("path.json");
  write_state_path(path, p);
  EXPECT_EQ(read_state_path(path).waypoints, p.waypoints);
}

TEST(Io, EpisodeLogLayout) {
  EpisodeLog log;
  log.model = "oracle";
  log.initial_state = {0, 0, 0};
  log.initial_cost = 0.5;
  log.pushes.push_back({{0, 0, 0}, PushAction(0, 1, 0.5), {0, 0.05, 0}, 0.4, 0.003, 0.0});
  log.final_state = {0, 0.05, 0};
  log.final_cost = 0.4;
  const fs::path path = scratch("episode.jsonl");
  write_episode(path, log);
  std::ifstream in(path);
  std::vector<Json> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(Json::parse(line));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0]["model"], "oracle");
  EXPECT_EQ(lines[1]["push"], 1);
  EXPECT_EQ(lines[2]["steps"], 1);
  EXPECT_EQ(lines[2]["converged"], false);
}

TEST(Io, SummaryCreatesHeaderOnce) {
  const fs::path path = scratch("summary.csv");
  fs::remove(path);
  SummaryRow row{"2", "abc", "oracle", "oracle", 3, 0.8, 0.1, 9, true};
  append_summary(path, row);
  append_summary(path, row);
  const std::string text = read_text(path);
  EXPECT_EQ(text.rfind(kSummaryHeader, 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(summary_line(row), "2,abc,oracle,oracle,3,0.8,0.1,9,1");
}

TEST(Io, DoublesRoundTripThroughText) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = standard_normal(rng) * std::pow(10.0, static_cast<int>(uniform01(rng) * 20) - 10);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Io, MissingFileIsIoError) {
  EXPECT_THROW(read_text(scratch("does-not-exist.txt")), IoError);
}
