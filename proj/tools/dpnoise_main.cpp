// Copyright 2026 the dpnoise authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// dpnoise: analyze additive noise mechanisms for differential privacy and
// simulate privacy-preserving average consensus.
//
// Subcommands: analyze, oracle, simulate, tradeoff, sweep-split.
// Machine-readable results (JSON/CSV) go to stdout or --out; human-readable
// notes go to stderr. Exit codes for `analyze`: 0 private (eps or eps,delta),
// 1 not eps-DP, 2 inconclusive, 64 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpnoise/analyzer.hpp"
#include "dpnoise/consensus.hpp"
#include "dpnoise/density.hpp"
#include "dpnoise/oracle.hpp"

namespace {

constexpr std::uint64_t kDefaultSeed = 12345678;
constexpr int kUsageError = 64;

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("file '" + path + "' is not valid JSON: " +
                                e.what());
  }
  return j;
}

// Atomic write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << contents;
  }
  std::filesystem::rename(tmp, path);
}

void emit(const std::string& contents, const std::string& out_path) {
  if (out_path.empty())
    std::cout << contents;
  else
    write_file_atomic(out_path, contents);
}

struct GridFlags {
  double lo = 0, hi = 0, step = 0;
  bool domain_set = false, step_set = false;

  dpnoise::EvalGrid build(const dpnoise::DensitySpec& spec) const {
    dpnoise::EvalGrid g = dpnoise::EvalGrid::default_for(spec);
    if (domain_set) {
      const double s = step_set ? step : (hi - lo) / 8192.0;
      return dpnoise::EvalGrid(lo, hi, s, g.tail_mass_budget);
    }
    if (step_set) return dpnoise::EvalGrid(g.lo, g.hi, step, g.tail_mass_budget);
    return g;
  }
};

int run_analyze(const std::string& density_path, double sigma,
                std::optional<double> split, double cap, double tau_mass,
                const GridFlags& gf, const std::string& out_path) {
  const dpnoise::DensitySpec spec =
      dpnoise::DensitySpec::from_json(load_json_file(density_path));
  const dpnoise::EvalGrid grid = gf.build(spec);
  dpnoise::check_mass(spec, grid, tau_mass);

  dpnoise::AnalyzerOptions opts;
  opts.cap = cap;
  opts.split = split;
  const dpnoise::PrivacyVerdict verdict =
      dpnoise::classify_eps_dp(spec, dpnoise::AdjacencyParam(sigma), grid, opts);

  emit(verdict.to_json().dump(2) + "\n", out_path);
  std::cerr << "verdict: " << dpnoise::to_string(verdict.kind) << " ("
            << verdict.note << ")\n";
  switch (verdict.kind) {
    case dpnoise::VerdictKind::EpsDP:
    case dpnoise::VerdictKind::EpsDeltaDP: return 0;
    case dpnoise::VerdictKind::NotEpsDP: return 1;
    case dpnoise::VerdictKind::Inconclusive: return 2;
  }
  return 2;
}

int run_oracle(const std::string& density_path, double sigma,
               std::size_t samples, int bins, std::uint64_t seed,
               int min_bin_count, const std::string& compare_path,
               const std::string& out_path, const std::string& csv_path) {
  const dpnoise::DensitySpec spec =
      dpnoise::DensitySpec::from_json(load_json_file(density_path));
  dpnoise::OracleOptions opts;
  opts.min_bin_count = min_bin_count;
  const dpnoise::PrivacyProfile profile = dpnoise::estimate_profile(
      spec, dpnoise::AdjacencyParam(sigma), samples, bins, seed, opts);

  if (!csv_path.empty()) {
    std::ostringstream csv;
    profile.write_csv(csv);
    write_file_atomic(csv_path, csv.str());
  }

  if (compare_path.empty()) {
    emit(profile.to_json().dump(2) + "\n", out_path);
    std::cerr << "eps_hat=" << profile.eps_hat << " from " << samples
              << " samples\n";
    return profile.inconclusive ? 2 : 0;
  }

  // --compare: parse the verdict produced by `analyze` and check the profile
  // against its bounds.
  const json jv = load_json_file(compare_path);
  dpnoise::PrivacyVerdict verdict;
  try {
    const std::string kind = jv.at("kind").get<std::string>();
    if (kind == "EpsDP") verdict.kind = dpnoise::VerdictKind::EpsDP;
    else if (kind == "EpsDeltaDP") verdict.kind = dpnoise::VerdictKind::EpsDeltaDP;
    else if (kind == "NotEpsDP") verdict.kind = dpnoise::VerdictKind::NotEpsDP;
    else verdict.kind = dpnoise::VerdictKind::Inconclusive;
    if (!jv.at("eps").is_null()) verdict.eps = jv["eps"].get<double>();
    if (!jv.at("delta").is_null()) verdict.delta = jv["delta"].get<double>();
    verdict.sigma = jv.at("sigma").get<double>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("verdict JSON in '" + compare_path +
                                "': " + e.what());
  }

  const dpnoise::CompareReport report = dpnoise::compare(verdict, profile);
  json out;
  out["compare"] = report.to_json();
  out["profile"] = profile.to_json();
  emit(out.dump(2) + "\n", out_path);
  std::cerr << (report.pass ? "PASS" : "FAIL") << ": " << report.detail << "\n";
  return report.pass ? 0 : 1;
}

struct SimulateConfig {
  dpnoise::Graph graph;
  dpnoise::NoiseSchedule schedule;
  double sigma = 1.0;
  int iterations = 100;
  std::uint64_t seed = kDefaultSeed;
  Eigen::VectorXd x0;

  static SimulateConfig from_json(const json& j) {
    SimulateConfig cfg;
    if (!j.is_object() || !j.contains("graph"))
      throw std::invalid_argument("config JSON: missing field 'graph'");
    cfg.graph = dpnoise::Graph::from_json(j["graph"]);
    if (!j.contains("schedule"))
      throw std::invalid_argument("config JSON: missing field 'schedule'");
    cfg.schedule = dpnoise::NoiseSchedule::from_json(j["schedule"]);
    cfg.sigma = j.value("sigma", 1.0);
    if (!j.contains("K") || !j["K"].is_number_integer())
      throw std::invalid_argument("config JSON: missing field 'K'");
    cfg.iterations = j["K"].get<int>();
    cfg.seed = j.value("seed", kDefaultSeed);
    cfg.x0.resize(cfg.graph.n);
    if (j.contains("x0")) {
      const auto& jx = j["x0"];
      if (!jx.is_array() || static_cast<int>(jx.size()) != cfg.graph.n)
        throw std::invalid_argument(
            "config JSON: field 'x0' must be an array of length n");
      for (int i = 0; i < cfg.graph.n; ++i) cfg.x0(i) = jx[i].get<double>();
    } else {
      for (int i = 0; i < cfg.graph.n; ++i) cfg.x0(i) = i;
    }
    return cfg;
  }
};

int run_simulate(const std::string& config_path, const std::string& out_prefix) {
  const SimulateConfig cfg = SimulateConfig::from_json(load_json_file(config_path));
  const dpnoise::WeightMatrix w = dpnoise::WeightMatrix::metropolis(cfg.graph);
  const dpnoise::ConsensusRun r =
      dpnoise::run(w, cfg.x0, cfg.schedule, cfg.iterations, cfg.seed);

  std::ostringstream traj;
  r.write_trajectory_csv(traj);
  const std::string traj_path = out_prefix + "trajectory.csv";
  write_file_atomic(traj_path, traj.str());

  const dpnoise::PrivacyVerdict verdict = dpnoise::first_release_privacy(
      cfg.schedule, dpnoise::AdjacencyParam(cfg.sigma));

  json summary;
  summary["n"] = cfg.graph.n;
  summary["K"] = cfg.iterations;
  summary["seed"] = cfg.seed;
  summary["xbar"] = r.xbar;
  summary["average_error"] = dpnoise::average_error(r, cfg.iterations);
  summary["cumulative_noise_inf"] =
      dpnoise::cumulative_noise(r, cfg.iterations)
          .lpNorm<Eigen::Infinity>();
  summary["first_release_privacy"] = verdict.to_json();
  summary["trajectory_csv"] = traj_path;

  const std::string summary_path = out_prefix + "summary.json";
  write_file_atomic(summary_path, summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  std::cerr << "wrote " << traj_path << " and " << summary_path << "\n";
  return 0;
}

int run_tradeoff(const std::string& config_path, const std::string& out_path,
                 std::optional<int> trials_override) {
  json j = load_json_file(config_path);
  if (trials_override) j["trials"] = *trials_override;
  const dpnoise::TradeoffConfig cfg = dpnoise::TradeoffConfig::from_json(j);
  const dpnoise::TradeoffReport report = dpnoise::impossibility_experiment(cfg);
  std::ostringstream csv;
  report.write_csv(csv);
  emit(csv.str(), out_path);
  return 0;
}

int run_sweep_split(const std::string& density_path, double sigma,
                    const std::vector<double>& m_values, double cap,
                    const GridFlags& gf, const std::string& out_path) {
  const dpnoise::DensitySpec spec =
      dpnoise::DensitySpec::from_json(load_json_file(density_path));
  const dpnoise::EvalGrid grid = gf.build(spec);
  dpnoise::AnalyzerOptions opts;
  opts.cap = cap;
  const auto rows = dpnoise::sweep_split(
      spec, dpnoise::AdjacencyParam(sigma), m_values, grid, opts);
  std::ostringstream csv;
  csv << "M,applicable,eps,delta\n";
  char buf[128];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g,%.17g\n", row.m,
                  row.applicable ? 1 : 0, row.eps, row.delta);
    csv << buf;
  }
  emit(csv.str(), out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differential-privacy analysis of additive noise mechanisms "
               "and privacy-preserving consensus simulation"};
  app.require_subcommand(1);

  // analyze
  std::string density_path, out_path;
  double sigma = 1.0;
  double cap = 1e6;
  double tau_mass = 1e-6;
  double split_m = 0.0;
  GridFlags gf;
  auto add_grid_flags = [&gf](CLI::App* cmd) {
    CLI::Option* lo = cmd->add_option("--grid-lo", gf.lo, "grid domain lower edge");
    CLI::Option* hi = cmd->add_option("--grid-hi", gf.hi, "grid domain upper edge");
    lo->needs(hi);
    hi->needs(lo);
    cmd->add_option("--grid-step", gf.step, "grid resolution");
  };

  CLI::App* analyze = app.add_subcommand(
      "analyze", "classify a noise density as eps-DP / (eps,delta)-DP");
  analyze->add_option("density", density_path, "density JSON file")->required();
  analyze->add_option("--sigma", sigma, "adjacency parameter")->required();
  CLI::Option* split_opt =
      analyze->add_option("--split", split_m, "split bound at M on C2 failure");
  analyze->add_option("--cap", cap, "ratio cap for unboundedness")->capture_default_str();
  analyze->add_option("--tau-mass", tau_mass, "mass-check tolerance")->capture_default_str();
  analyze->add_option("--out", out_path, "write verdict JSON here instead of stdout");
  add_grid_flags(analyze);

  // oracle
  std::string compare_path, csv_path;
  std::size_t samples = 1000000;
  int bins = 200;
  std::uint64_t seed = kDefaultSeed;
  int min_bin_count = 20;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "Monte-Carlo privacy-loss estimate for a noise density");
  oracle->add_option("density", density_path, "density JSON file")->required();
  oracle->add_option("--sigma", sigma, "adjacency parameter")->required();
  oracle->add_option("--samples", samples, "sample count (>= 1e5)")->capture_default_str();
  oracle->add_option("--bins", bins, "histogram bins (>= 50)")->capture_default_str();
  oracle->add_option("--seed", seed, "rng seed")->capture_default_str();
  oracle->add_option("--min-bin-count", min_bin_count,
                     "retention threshold for eps_hat bins")
      ->capture_default_str();
  oracle->add_option("--compare", compare_path,
                     "verdict JSON to check the profile against");
  oracle->add_option("--csv", csv_path, "also write the delta curve as CSV");
  oracle->add_option("--out", out_path, "write profile JSON here instead of stdout");

  // simulate
  std::string config_path, out_prefix;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "run one privacy-preserving consensus trajectory");
  simulate->add_option("config", config_path, "experiment config JSON")->required();
  simulate->add_option("--out-prefix", out_prefix,
                       "prefix for trajectory.csv / summary.json")
      ->capture_default_str();

  // tradeoff
  std::optional<int> trials_override;
  int trials_flag = 0;
  CLI::App* tradeoff = app.add_subcommand(
      "tradeoff", "convergence/privacy tradeoff table over schedules and K");
  tradeoff->add_option("config", config_path, "experiment config JSON")->required();
  CLI::Option* trials_opt =
      tradeoff->add_option("--trials", trials_flag, "override the trial count");
  tradeoff->add_option("--out", out_path, "write CSV here instead of stdout");

  // sweep-split
  std::vector<double> m_values;
  CLI::App* sweep = app.add_subcommand(
      "sweep-split", "trace the (eps,delta) curve over split points M");
  sweep->add_option("density", density_path, "density JSON file")->required();
  sweep->add_option("--sigma", sigma, "adjacency parameter")->required();
  sweep->add_option("--m-values", m_values, "increasing split points")
      ->required()
      ->delimiter(',');
  sweep->add_option("--cap", cap, "ratio cap for unboundedness")->capture_default_str();
  sweep->add_option("--out", out_path, "write CSV here instead of stdout");
  add_grid_flags(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kUsageError;
  }

  gf.domain_set = analyze->count("--grid-lo") > 0 || sweep->count("--grid-lo") > 0;
  gf.step_set = analyze->count("--grid-step") > 0 || sweep->count("--grid-step") > 0;
  if (trials_opt->count() > 0) trials_override = trials_flag;

  try {
    if (analyze->parsed()) {
      std::optional<double> split;
      if (split_opt->count() > 0) split = split_m;
      return run_analyze(density_path, sigma, split, cap, tau_mass, gf, out_path);
    }
    if (oracle->parsed())
      return run_oracle(density_path, sigma, samples, bins, seed,
                        min_bin_count, compare_path, out_path, csv_path);
    if (simulate->parsed()) return run_simulate(config_path, out_prefix);
    if (tradeoff->parsed())
      return run_tradeoff(config_path, out_path, trials_override);
    if (sweep->parsed())
      return run_sweep_split(density_path, sigma, m_values, cap, gf, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
