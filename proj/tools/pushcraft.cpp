#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pushcraft/commands.hpp"
#include "pushcraft/errors.hpp"

namespace fs = std::filesystem;
using namespace pushcraft;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeFault = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string model;
  std::string dataset;
  int experiment = 0;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed, overrides the config");
  cmd->add_option("--out", o.out, "Output directory, overrides the config");
}

ExperimentConfig resolve_config(const Options& o, std::optional<int> canned) {
  ExperimentConfig cfg = !o.config.empty() ? load_config(o.config)
                         : canned          ? canned_config(*canned)
                                           : ExperimentConfig{};
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-averse planar push planning"};
  app.require_subcommand(1);
  Options o;

  auto* collect = app.add_subcommand("collect", "Collect a random push dataset");
  add_common(collect, o);

  auto* train = app.add_subcommand("train", "Train an E-MDN or fit a GP on a dataset");
  add_common(train, o);
  train->add_option("--dataset", o.dataset, "Dataset file (JSON lines)")->required()->check(CLI::ExistingFile);

  auto* plan = app.add_subcommand("plan", "Run the MPPI push controller on the simulator");
  add_common(plan, o);
  plan->add_option("--model", o.model, "Model file; omit for model.kind = oracle")->check(CLI::ExistingFile);

  auto* heatmap = app.add_subcommand("heatmap", "Build the uncertainty heat map of a model");
  add_common(heatmap, o);
  heatmap->add_option("--model", o.model, "Model file; omit for model.kind = oracle")->check(CLI::ExistingFile);

  auto* trajopt = app.add_subcommand("trajopt", "Optimize way-points against the heat map and track them");
  add_common(trajopt, o);
  trajopt->add_option("--model", o.model, "Model file; omit for model.kind = oracle")->check(CLI::ExistingFile);

  auto* repro = app.add_subcommand("repro", "Run a canned experiment end to end");
  add_common(repro, o);
  repro->add_option("experiment", o.experiment, "Experiment number")->required()->check(CLI::Range(1, 4));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (repro->parsed()) {
      const ExperimentConfig cfg = resolve_config(o, o.experiment);
      cmd_repro(o.experiment, cfg, cfg.output_dir, std::cout);
      return 0;
    }
    const ExperimentConfig cfg = resolve_config(o, std::nullopt);
    const fs::path out = cfg.output_dir;
    if (collect->parsed()) {
      cmd_collect(cfg, out, std::cout);
    } else if (train->parsed()) {
      cmd_train(cfg, o.dataset, out, std::cout);
    } else {
      const auto model = resolve_model(cfg, o.model);
      if (plan->parsed()) {
        cmd_plan(cfg, *model, out, std::cout);
      } else if (heatmap->parsed()) {
        cmd_heatmap(cfg, *model, out, std::cout);
      } else {
        cmd_trajopt(cfg, *model, out, std::cout);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFault;
  }
  return 0;
}
