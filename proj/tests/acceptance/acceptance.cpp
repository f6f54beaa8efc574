// Acceptance runner: one PASS/FAIL line per criterion.
//
//   pushcraft_acceptance [--out DIR] [--only 1,2,...] [--known-red 4,6]
//
// Exits non-zero when a criterion fails that is not listed in --known-red.

#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pushcraft/commands.hpp"
#include "pushcraft/ensemble.hpp"
#include "pushcraft/gp.hpp"
#include "pushcraft/io.hpp"
#include "pushcraft/mdn.hpp"
#include "pushcraft/mppi.hpp"

using namespace pushcraft;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

// Ensemble moments against a flattened mixture and Monte-Carlo sampling.
Outcome ensemble_moments() {
  Outcome o;
  Rng rng(101);
  const int members_choices[] = {1, 2, 5, 10};
  double worst_exact = 0.0;
  double worst_mc = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int members = members_choices[trial % 4];
    const int k = 1 + (trial / 4) % 3;
    Ensemble e;
    e.normalization = Normalization::identity(3);
    MdnArchitecture a;
    a.hidden = {6};
    a.mixtures = k;
    for (int m = 0; m < members; ++m) e.members.push_back(MdnParams::random(a, rng));
    const PushAction u(standard_normal(rng), standard_normal(rng), uniform01(rng));
    const MemberMoments got = ensemble_moments_standardized(e, {}, u);

    const Eigen::VectorXd h = model_input(FrameMode::object, {}, u);
    std::vector<Mixture> mixtures;
    std::vector<double> flat_weights;
    std::vector<std::pair<int, int>> flat_index;
    Vec3 mean = Vec3::Zero();
    Vec3 second = Vec3::Zero();
    for (int m = 0; m < members; ++m) {
      mixtures.push_back(mdn_forward(e.members[static_cast<std::size_t>(m)], {h.data(), 3}));
      const Mixture& mx = mixtures.back();
      for (int c = 0; c < mx.components(); ++c) {
        const double w = mx.weights[c] / members;
        flat_weights.push_back(w);
        flat_index.emplace_back(m, c);
        for (int d = 0; d < 3; ++d) {
          mean[d] += w * mx.means(c, d);
          second[d] += w * (mx.sigmas(c, d) * mx.sigmas(c, d) + mx.means(c, d) * mx.means(c, d));
        }
      }
    }
    const Vec3 var = second - mean.cwiseProduct(mean);
    for (int d = 0; d < 3; ++d) {
      worst_exact = std::max({worst_exact, std::abs(got.mean[d] - mean[d]), std::abs(got.variance[d] - var[d])});
    }

    std::discrete_distribution<int> pick(flat_weights.begin(), flat_weights.end());
    const int draws = 1000000;
    Vec3 sum = Vec3::Zero();
    Vec3 sum_sq = Vec3::Zero();
    for (int i = 0; i < draws; ++i) {
      const auto [m, c] = flat_index[static_cast<std::size_t>(pick(rng))];
      const Mixture& mx = mixtures[static_cast<std::size_t>(m)];
      for (int d = 0; d < 3; ++d) {
        const double x = mx.means(c, d) + mx.sigmas(c, d) * standard_normal(rng);
        sum[d] += x;
        sum_sq[d] += x * x;
      }
    }
    const Vec3 mc_mean = sum / draws;
    const Vec3 mc_var = sum_sq / draws - mc_mean.cwiseProduct(mc_mean);
    for (int d = 0; d < 3; ++d) {
      const double scale = std::max(std::abs(got.mean[d]), std::sqrt(got.variance[d]));
      worst_mc = std::max({worst_mc, std::abs(mc_mean[d] - got.mean[d]) / scale,
                           std::abs(mc_var[d] - got.variance[d]) / got.variance[d]});
    }
  }
  o.require(worst_exact <= 1e-10, "total-variance expansion error " + format_double(worst_exact));
  o.require(worst_mc <= 0.01, "Monte-Carlo relative error " + format_double(worst_mc));
  if (o.pass) {
    o.detail = "exact " + format_double(worst_exact) + ", Monte-Carlo " + format_double(worst_mc);
  }
  return o;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// MDN and GP gradients against central differences.
Outcome gradients() {
  Outcome o;
  Rng rng(202);
  const double step = 1e-5;
  double worst_mdn = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    MdnArchitecture a;
    a.hidden = std::vector<int>(static_cast<std::size_t>(1 + trial % 2), 2 + trial % 4);
    a.mixtures = 1 + trial % 3;
    MdnParams p = MdnParams::random(a, rng);
    for (Eigen::Index i = 0; i < p.values().size(); ++i) p.values()[i] += 0.3 * standard_normal(rng);
    std::vector<double> h(3);
    for (auto& v : h) v = standard_normal(rng);
    const Vec3 t(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    auto loss = [&](const MdnParams& q, std::span<const double> x) { return mdn_nll(mdn_forward(q, x), t); };
    const NllGradient g = nll_gradient(p, h, t);
    for (Eigen::Index i = 0; i < p.values().size(); ++i) {
      MdnParams hi = p;
      MdnParams lo = p;
      hi.values()[i] += step;
      lo.values()[i] -= step;
      worst_mdn = std::max(worst_mdn, relative_error(g.params[i], (loss(hi, h) - loss(lo, h)) / (2.0 * step)));
    }
    for (std::size_t j = 0; j < h.size(); ++j) {
      auto hi = h;
      auto lo = h;
      hi[j] += step;
      lo[j] -= step;
      worst_mdn = std::max(worst_mdn, relative_error(g.input[static_cast<Eigen::Index>(j)],
                                                     (loss(p, hi) - loss(p, lo)) / (2.0 * step)));
    }
  }

  double worst_gp = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 3;
    RowMatrix x(12, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = standard_normal(rng);
    Eigen::VectorXd y(12);
    for (auto& v : y) v = standard_normal(rng);
    GpHyper hyper;
    hyper.signal_variance = 0.5 + uniform01(rng);
    hyper.length_scales = Eigen::VectorXd(d);
    for (auto& l : hyper.length_scales) l = 0.5 + 1.5 * uniform01(rng);
    hyper.noise_variance = 0.01 + 0.1 * uniform01(rng);
    const LmlGradient g = log_marginal_likelihood_gradient(x, y, hyper);
    const Eigen::VectorXd theta = hyper.to_log();
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd hi = theta;
      Eigen::VectorXd lo = theta;
      hi[i] += step;
      lo[i] -= step;
      const double fd = (GpDimension(x, y, GpHyper::from_log(hi)).log_marginal_likelihood() -
                         GpDimension(x, y, GpHyper::from_log(lo)).log_marginal_likelihood()) /
                        (2.0 * step);
      worst_gp = std::max(worst_gp, relative_error(g.gradient[i], fd));
    }
  }
  o.require(worst_mdn <= 1e-4, "MDN relative error " + format_double(worst_mdn));
  o.require(worst_gp <= 1e-4, "GP relative error " + format_double(worst_gp));
  if (o.pass) o.detail = "MDN " + format_double(worst_mdn) + ", GP " + format_double(worst_gp);
  return o;
}

// Path-integral weights and control update.
Outcome path_integral() {
  Outcome o;
  Rng rng(303);
  double worst_sum = 0.0;
  double worst_shift = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> costs(20);
    for (auto& c : costs) c = 10.0 * uniform01(rng);
    const double lambda = 0.05 + uniform01(rng);
    const auto w = compute_weights(costs, lambda);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0));
    auto shifted = costs;
    const double shift = 1000.0 * standard_normal(rng);
    for (auto& c : shifted) c += shift;
    const auto ws = compute_weights(shifted, lambda);
    for (std::size_t i = 0; i < w.size(); ++i) worst_shift = std::max(worst_shift, std::abs(w[i] - ws[i]));
  }
  o.require(worst_sum <= 1e-12, "weights sum error " + format_double(worst_sum));
  o.require(worst_shift <= 1e-12, "shift invariance error " + format_double(worst_shift));

  for (double lambda : {0.01, 0.7, 1.0, 115.0}) {
    const auto w = compute_weights(std::vector<double>{0.0, lambda * std::log(2.0)}, lambda);
    o.require(std::abs(w[0] - 2.0 / 3.0) <= 1e-12 && std::abs(w[1] - 1.0 / 3.0) <= 1e-12,
              "[0, lambda ln 2] case at lambda " + format_double(lambda));
  }

  const std::vector<std::vector<RawAction>> du{{RawAction(1, 2, 3), RawAction(-1, 0.5, 0)},
                                               {RawAction(-1, -2, -3), RawAction(1, -0.5, 0)},
                                               {RawAction(9, 9, 9), RawAction(8, 8, 8)}};
  o.require(control_update(std::vector<double>{0, 0, 1}, du) == du[2], "degenerate control update");
  const auto zero = control_update(std::vector<double>{0.5, 0.5, 0.0}, du);
  o.require(std::all_of(zero.begin(), zero.end(), [](const RawAction& d) { return d == RawAction::Zero(); }),
            "cancelling control update");
  if (o.pass) o.detail = "sum " + format_double(worst_sum) + ", shift " + format_double(worst_shift);
  return o;
}

// GP posterior against a dense-inverse oracle.
Outcome gp_oracle() {
  Outcome o;
  Rng rng(808);
  auto random_inputs = [&](int n, int d) {
    RowMatrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = standard_normal(rng);
    return x;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 6;
    const RowMatrix x = random_inputs(40, d);
    Eigen::VectorXd y(40);
    for (auto& v : y) v = standard_normal(rng);
    GpHyper h;
    h.signal_variance = 0.5 + uniform01(rng);
    h.length_scales = Eigen::VectorXd(d);
    for (auto& l : h.length_scales) l = 0.5 + 1.5 * uniform01(rng);
    h.noise_variance = 0.01 + 0.1 * uniform01(rng);

    Eigen::MatrixXd k(40, 40);
    for (int i = 0; i < 40; ++i) {
      for (int j = 0; j < 40; ++j) k(i, j) = se_ard_kernel(x.row(i).transpose(), x.row(j).transpose(), h);
    }
    k.diagonal().array() += h.noise_variance;
    const Eigen::MatrixXd inv = k.inverse();

    const GpDimension gp(x, y, h);
    for (int q = 0; q < 10; ++q) {
      const Eigen::VectorXd query = random_inputs(1, d).row(0).transpose();
      Eigen::VectorXd ks(40);
      for (int i = 0; i < 40; ++i) ks[i] = se_ard_kernel(x.row(i).transpose(), query, h);
      const double mean = ks.dot(inv * y);
      const double var = h.signal_variance - ks.dot(inv * ks) + h.noise_variance;
      const GpPosterior p = gp.predict(query);
      worst = std::max({worst, std::abs(p.mean - mean), std::abs(p.variance - var)});
    }

    const Eigen::VectorXd far = Eigen::VectorXd::Constant(d, 1e3);
    const GpPosterior prior = gp.predict(far);
    o.require(std::abs(prior.mean) <= 1e-12 &&
                  std::abs(prior.variance - (h.signal_variance + h.noise_variance)) <= 1e-12,
              "prior reversion");
  }
  o.require(worst <= 1e-8, "dense oracle error " + format_double(worst));

  const RowMatrix x = 3.0 * random_inputs(15, 2);
  Eigen::VectorXd y(15);
  for (auto& v : y) v = standard_normal(rng);
  GpHyper h = GpHyper::defaults(2);
  h.noise_variance = 1e-12;
  const GpDimension gp(x, y, h);
  double interp = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const GpPosterior p = gp.predict(x.row(i).transpose());
    interp = std::max({interp, std::abs(p.mean - y[i]), p.variance});
  }
  o.require(interp <= 1e-6, "noiseless interpolation error " + format_double(interp));
  if (o.pass) o.detail = "dense " + format_double(worst) + ", interpolation " + format_double(interp);
  return o;
}

struct ReproRun {
  ReproReport report;
  bool ok = false;
  std::string error;
};

// Runs into <root>/run, then moves exp<N> to <root>/<tag> so repeated runs share one invocation.
ReproRun run_repro(int experiment, const fs::path& root, const std::string& tag) {
  ReproRun run;
  const std::string name = "exp" + std::to_string(experiment);
  const fs::path out = root / "run";
  fs::remove_all(out / name);
  fs::create_directories(out);
  fs::create_directories(root / tag);
  std::ofstream log(root / tag / (name + ".log"));
  try {
    ExperimentConfig cfg = canned_config(experiment);
    cfg.output_dir = out.string();
    run.report = cmd_repro(experiment, cfg, out, log);
    run.ok = true;
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  fs::remove_all(root / tag / name);
  if (fs::exists(out / name)) fs::rename(out / name, root / tag / name);
  return run;
}

Outcome repro_outcome(const ReproRun& run, double limit_seconds) {
  Outcome o;
  if (!run.ok) {
    o.require(false, "run failed: " + run.error);
    return o;
  }
  std::string failed;
  std::string summary;
  for (const Check& c : run.report.checks) {
    const std::string line = c.name + " " + format_double(c.measured) + " vs " + format_double(c.threshold);
    if (!c.pass && failed.empty()) failed = line;
    if (summary.empty()) summary = line;
  }
  o.require(run.report.passed(), failed);
  o.require(run.report.seconds <= limit_seconds,
            "runtime " + format_double(run.report.seconds) + " s over " + format_double(limit_seconds) + " s");
  if (o.pass) o.detail = summary + ", " + format_double(std::round(run.report.seconds)) + " s";
  return o;
}

Outcome determinism(const std::map<int, ReproRun>& first, const fs::path& root) {
  Outcome o;
  std::size_t compared = 0;
  for (int experiment = 1; experiment <= 4; ++experiment) {
    const auto it = first.find(experiment);
    const fs::path dir_a = root / "first" / ("exp" + std::to_string(experiment));
    const fs::path dir_b = root / "second" / ("exp" + std::to_string(experiment));
    ReproRun a;
    if (it == first.end()) {
      a = run_repro(experiment, root, "first");
    } else {
      a = it->second;
    }
    const ReproRun b = run_repro(experiment, root, "second");
    if (!a.ok || !b.ok) {
      o.require(false, "experiment " + std::to_string(experiment) + " run failed");
      continue;
    }
    o.require(a.report.data_files == b.report.data_files,
              "experiment " + std::to_string(experiment) + " file lists differ");
    for (const fs::path& f : a.report.data_files) {
      ++compared;
      const bool same = fs::exists(dir_a / f) && fs::exists(dir_b / f) && read_text(dir_a / f) == read_text(dir_b / f);
      o.require(same, "experiment " + std::to_string(experiment) + " " + f.string() + " differs");
    }
  }
  if (o.pass) o.detail = std::to_string(compared) + " files byte-identical";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path root = fs::temp_directory_path() / "pushcraft_acceptance";
  std::set<int> only{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::set<int> known_red;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (i + 1 >= argc) {
      std::cerr << "missing value for " << arg << '\n';
      return 2;
    }
    if (arg == "--out") {
      root = argv[++i];
    } else if (arg == "--only") {
      only = parse_list(argv[++i]);
    } else if (arg == "--known-red") {
      known_red = parse_list(argv[++i]);
    } else {
      std::cerr << "unknown option " << arg << '\n';
      return 2;
    }
  }

  const std::map<int, std::string> names{
      {1, "ensemble moments match exact expansion and Monte-Carlo"},
      {2, "MDN and GP gradients match finite differences"},
      {3, "path-integral weights and control update algebra"},
      {4, "lesioned region shows higher heat-map sigma"},
      {5, "MPPI reaches the goal with oracle and E-MDN models"},
      {6, "uncertainty penalty produces a lower-sigma detour"},
      {7, "way-point optimizer lowers field cost and is tracked"},
      {8, "GP posterior matches dense oracle"},
      {9, "repro outputs are byte-identical across runs"},
  };
  const std::map<int, double> limits{{1, 60}, {2, 60}, {3, 60}, {4, 600}, {5, 600}, {6, 600}, {7, 300}, {8, 60}};
  const std::map<int, int> repro_of{{4, 1}, {5, 2}, {6, 3}, {7, 4}};

  std::map<int, ReproRun> runs;
  int unexpected = 0;
  auto report = [&](int id, Outcome o, double seconds) {
    if (!repro_of.count(id) && limits.count(id) && seconds > limits.at(id)) {
      o.require(false, "runtime " + format_double(seconds) + " s");
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << names.at(id) << " (" << o.detail
              << ")\n"
              << std::flush;
    if (!o.pass && !known_red.count(id)) ++unexpected;
  };

  for (int id : only) {
    const auto t0 = Clock::now();
    if (id == 1) {
      report(id, ensemble_moments(), seconds_since(t0));
    } else if (id == 2) {
      report(id, gradients(), seconds_since(t0));
    } else if (id == 3) {
      report(id, path_integral(), seconds_since(t0));
    } else if (id == 8) {
      report(id, gp_oracle(), seconds_since(t0));
    } else if (repro_of.count(id)) {
      const int experiment = repro_of.at(id);
      runs[experiment] = run_repro(experiment, root, "first");
      report(id, repro_outcome(runs[experiment], limits.at(id)), seconds_since(t0));
    } else if (id == 9) {
      report(id, determinism(runs, root), seconds_since(t0));
    }
  }
  return unexpected == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
