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

#ifndef DPNOISE_CONSENSUS_HPP
#define DPNOISE_CONSENSUS_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "dpnoise/analyzer.hpp"
#include "dpnoise/density.hpp"
#include "dpnoise/rng.hpp"

namespace dpnoise {

// Undirected connected communication graph, n >= 3, no self-loops.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, sorted, unique
  std::string kind;

  static Graph ring(int n);
  static Graph complete(int n);
  // Retries with derived seeds until connected (bounded); throws when the
  // probability is too low to ever connect.
  static Graph erdos_renyi(int n, double p, std::uint64_t seed);
  // Text file, one "i j" pair per line, 0-indexed.
  static Graph from_edge_list_file(const std::string& path);
  static Graph from_edges(int n, std::vector<std::pair<int, int>> edges,
                          std::string kind = "custom");

  std::vector<int> degrees() const;
  int component_count() const;

  static nlohmann::json to_json_config(const Graph& g);
  static Graph from_json(const nlohmann::json& j);
};

// Doubly stochastic weight matrix with positive diagonal. The constructor
// validates row/column sums to 1e-12 and non-negativity.
class WeightMatrix {
 public:
  explicit WeightMatrix(Eigen::MatrixXd w);

  // w_ij = 1/(1 + max(deg_i, deg_j)) on edges, diagonal fills the row.
  static WeightMatrix metropolis(const Graph& g);

  static WeightMatrix from_csv_file(const std::string& path);
  void write_csv(std::ostream& out) const;

  const Eigen::MatrixXd& matrix() const { return w_; }
  int size() const { return static_cast<int>(w_.rows()); }

  // Second-largest eigenvalue modulus; the noiseless convergence rate.
  double second_eigenvalue_modulus() const;

  // Checks w_ij > 0 exactly on edges and the diagonal; throws otherwise.
  void validate_structure(const Graph& g) const;

 private:
  Eigen::MatrixXd w_;
};

// Per-iteration noise rule theta(k) for the privacy-preserving iteration.
struct NoiseSchedule {
  enum class Variant { None, Iid, DecayingIid, ZeroSumDecaying };

  Variant variant = Variant::None;
  std::optional<DensitySpec> density;  // draw source w_i(k)
  double gamma = 1.0;                  // decay, in (0,1) where applicable

  static NoiseSchedule none();
  static NoiseSchedule iid(DensitySpec spec);
  // theta_i(k) = gamma^k * w_i(k)
  static NoiseSchedule decaying_iid(DensitySpec spec, double gamma);
  // theta_i(k) = gamma^k * w_i(k) - gamma^{k-1} * w_i(k-1), w(-1) = 0;
  // the cumulative injected noise telescopes away.
  static NoiseSchedule zero_sum_decaying(DensitySpec spec, double gamma);

  // First-release reduction hypothesis: later noises independent of theta(0).
  bool later_noise_independent_of_first() const {
    return variant != Variant::ZeroSumDecaying;
  }
  std::optional<DensitySpec> first_step_density() const;
  std::string name() const;

  nlohmann::json to_json() const;
  static NoiseSchedule from_json(const nlohmann::json& j);
};

// Stateful per-run sampler for a schedule (ZeroSumDecaying couples adjacent
// steps). Draws node 0..n-1 in order at each step; deterministic given Rng.
// The underlying density table is shared, so reset() + reuse across many
// trials is cheap.
class ScheduleSampler {
 public:
  ScheduleSampler(const NoiseSchedule& sched, int n);
  void reset();
  void next(Rng& rng, Eigen::VectorXd& theta_out);

 private:
  NoiseSchedule::Variant variant_;
  double gamma_ = 1.0;
  std::shared_ptr<const DensitySampler> sampler_;
  Eigen::VectorXd prev_draw_;
  long k_ = 0;
};

// Full trajectory of one privacy-preserving consensus run:
//   x_plus(k) = x(k) + theta(k),   x(k+1) = W * x_plus(k).
// Records x(0..K), x_plus(0..K) and theta(0..K); the final x_plus(K) is the
// last released vector.
struct ConsensusRun {
  Eigen::MatrixXd w;
  Eigen::VectorXd x0;
  std::vector<Eigen::VectorXd> xs;       // x(k), k = 0..K
  std::vector<Eigen::VectorXd> xs_plus;  // x_plus(k), k = 0..K
  std::vector<Eigen::VectorXd> thetas;   // theta(k), k = 0..K
  double xbar = 0.0;                     // compensated mean of x0
  std::uint64_t seed = 0;

  int iterations() const { return static_cast<int>(xs.size()) - 1; }
  void write_trajectory_csv(std::ostream& out) const;  // k,node,x,x_plus,theta
};

ConsensusRun run(const WeightMatrix& w, const Eigen::VectorXd& x0,
                 const NoiseSchedule& sched, int iterations,
                 std::uint64_t seed);

// ||x(k) - xbar*1||_2 / sqrt(n)
double average_error(const ConsensusRun& r, int k);

// sum_{l=0}^{k} W^{k-l} theta(l), reconstructed from the recorded noise and
// checked against the recorded trajectory (x_plus(k) = W^k x0 + that sum).
Eigen::VectorXd cumulative_noise(const ConsensusRun& r, int k);

// Classification of the whole released sequence via the first-step noise
// density. Downgraded to Inconclusive for schedules whose later noise depends
// on theta(0) (ZeroSumDecaying); NotEpsDP for the noiseless schedule.
PrivacyVerdict first_release_privacy(const NoiseSchedule& sched,
                                     const AdjacencyParam& adj,
                                     const AnalyzerOptions& opts = {});

// Histogram privacy estimates from paired runs started at sigma-adjacent
// initial states (differing at coordinate i0 = 0) with common random numbers.
struct SequencePrivacyEstimate {
  std::vector<double> per_step_eps;  // worst coordinate, k = 0..K
  double first_release_eps = 0.0;    // coordinate i0 at k = 0
  double joint_eps01 = 0.0;          // joint over (x_plus(0), x_plus(1)) at i0
  int i0 = 0;
  nlohmann::json to_json() const;
};

struct SequenceEstimateOptions {
  int min_bin_count = 20;
  int joint_bins = 48;  // per axis of the 2-d histogram
};

// Requires n <= 5 and K <= 5 (joint histogramming does not scale further).
SequencePrivacyEstimate sequence_privacy_estimate(
    const WeightMatrix& w, const NoiseSchedule& sched,
    const AdjacencyParam& adj, int iterations, std::size_t n_samples,
    int n_bins, std::uint64_t seed, const SequenceEstimateOptions& opts = {});

// Convergence/privacy tradeoff table: per schedule and horizon, the
// trial-mean squared error about the initial average and the trial-mean
// sup-norm of the cumulative injected noise, with a privacy flag. IID
// schedules keep their first-release verdict but never reach the average;
// zero-sum decaying schedules converge while their cumulative noise vanishes,
// which forfeits eps-DP (a vanishing release noise fails the zero-measure /
// bounded-ratio conditions).
struct TradeoffConfig {
  Graph graph;
  std::vector<NoiseSchedule> schedules;
  double sigma = 1.0;
  std::vector<int> k_values;
  int trials = 200;
  std::uint64_t seed = 12345678;
  std::optional<Eigen::VectorXd> x0;  // default: 0, 1, ..., n-1
  double cumnoise_threshold = 1e-2;

  static TradeoffConfig from_json(const nlohmann::json& j);
};

struct TradeoffRow {
  std::string schedule;
  int k = 0;
  double mean_mse = 0.0;
  double mean_cumnoise_inf = 0.0;
  std::string eps_or_flag;
};

struct TradeoffReport {
  std::vector<TradeoffRow> rows;
  void write_csv(std::ostream& out) const;  // schedule,K,mse,cumnoise,eps_or_flag
};

TradeoffReport impossibility_experiment(const TradeoffConfig& config);

}  // namespace dpnoise

#endif
