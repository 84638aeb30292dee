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

#include "dpnoise/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace dpnoise {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t stream,
                         std::uint64_t trial) {
  return Rng(base).derive(stream).derive(trial).next_u64();
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph

Graph Graph::from_edges(int n, std::vector<std::pair<int, int>> edges,
                        std::string kind) {
  require(n >= 3, "graph: needs n >= 3 nodes");
  for (auto& [i, j] : edges) {
    require(i != j, "graph: self-loops are not allowed");
    require(i >= 0 && j >= 0 && i < n && j < n,
            "graph: edge endpoint out of range");
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  Graph g;
  g.n = n;
  g.edges = std::move(edges);
  g.kind = std::move(kind);
  const int comps = g.component_count();
  if (comps != 1) {
    std::ostringstream msg;
    msg << "graph: not connected (" << comps << " components)";
    throw std::invalid_argument(msg.str());
  }
  return g;
}

Graph Graph::ring(int n) {
  require(n >= 3, "graph: needs n >= 3 nodes");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return from_edges(n, std::move(edges), "ring");
}

Graph Graph::complete(int n) {
  require(n >= 3, "graph: needs n >= 3 nodes");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return from_edges(n, std::move(edges), "complete");
}

Graph Graph::erdos_renyi(int n, double p, std::uint64_t seed) {
  require(n >= 3, "graph: needs n >= 3 nodes");
  require(p > 0.0 && p <= 1.0, "graph: edge probability must be in (0,1]");
  for (int attempt = 0; attempt < 200; ++attempt) {
    Rng rng = Rng(seed).derive(static_cast<std::uint64_t>(attempt));
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.next_unit() < p) edges.emplace_back(i, j);
    try {
      std::ostringstream kind;
      kind << "erdos_renyi(p=" << p << ",seed=" << seed << ")";
      return from_edges(n, std::move(edges), kind.str());
    } catch (const std::invalid_argument&) {
      // disconnected draw; retry with the next derived stream
    }
  }
  throw std::invalid_argument(
      "graph: could not draw a connected Erdos-Renyi graph; raise p");
}

Graph Graph::from_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("graph: cannot open '" + path + "'");
  std::vector<std::pair<int, int>> edges;
  int max_node = -1;
  int i, j;
  while (in >> i >> j) {
    edges.emplace_back(i, j);
    max_node = std::max({max_node, i, j});
  }
  return from_edges(max_node + 1, std::move(edges), "from_file(" + path + ")");
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(n, 0);
  for (const auto& [i, j] : edges) {
    deg[i] += 1;
    deg[j] += 1;
  }
  return deg;
}

int Graph::component_count() const {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<char> seen(n, 0);
  int comps = 0;
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++comps;
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          q.push(v);
        }
    }
  }
  return comps;
}

nlohmann::json Graph::to_json_config(const Graph& g) {
  return {{"kind", g.kind}, {"n", g.n}};
}

Graph Graph::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw std::invalid_argument("graph JSON: missing field 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "from_file") {
    if (!j.contains("path"))
      throw std::invalid_argument("graph JSON: missing field 'path'");
    return from_edge_list_file(j["path"].get<std::string>());
  }
  if (!j.contains("n") || !j["n"].is_number_integer())
    throw std::invalid_argument("graph JSON: missing field 'n'");
  const int n = j["n"].get<int>();
  if (kind == "ring") return ring(n);
  if (kind == "complete") return complete(n);
  if (kind == "erdos_renyi") {
    if (!j.contains("p"))
      throw std::invalid_argument("graph JSON: missing field 'p'");
    return erdos_renyi(n, j["p"].get<double>(), j.value("seed", 1ull));
  }
  throw std::invalid_argument("graph JSON: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// WeightMatrix

WeightMatrix::WeightMatrix(Eigen::MatrixXd w) : w_(std::move(w)) {
  require(w_.rows() == w_.cols() && w_.rows() >= 1,
          "weight matrix: must be square");
  const int n = static_cast<int>(w_.rows());
  for (int i = 0; i < n; ++i) {
    require(w_(i, i) > 0, "weight matrix: diagonal must be positive");
    double row = 0.0, col = 0.0;
    for (int j = 0; j < n; ++j) {
      require(std::isfinite(w_(i, j)) && w_(i, j) >= 0,
              "weight matrix: entries must be finite and non-negative");
      row += w_(i, j);
      col += w_(j, i);
    }
    require(std::fabs(row - 1.0) <= 1e-12,
            "weight matrix: row sums must equal 1");
    require(std::fabs(col - 1.0) <= 1e-12,
            "weight matrix: column sums must equal 1");
  }
}

WeightMatrix WeightMatrix::metropolis(const Graph& g) {
  const std::vector<int> deg = g.degrees();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(g.n, g.n);
  for (const auto& [i, j] : g.edges) {
    const double v = 1.0 / (1.0 + std::max(deg[i], deg[j]));
    w(i, j) = v;
    w(j, i) = v;
  }
  for (int i = 0; i < g.n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return WeightMatrix(std::move(w));
}

WeightMatrix WeightMatrix::from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("weight matrix: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), "weight matrix: empty CSV");
  const std::size_t n = rows.size();
  Eigen::MatrixXd w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    require(rows[i].size() == n, "weight matrix: CSV is not square");
    for (std::size_t j = 0; j < n; ++j) w(i, j) = rows[i][j];
  }
  return WeightMatrix(std::move(w));
}

void WeightMatrix::write_csv(std::ostream& out) const {
  const int n = size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) out << ',';
      out << fmt(w_(i, j));
    }
    out << '\n';
  }
}

double WeightMatrix::second_eigenvalue_modulus() const {
  const int n = size();
  if (w_.isApprox(w_.transpose(), 1e-12)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w_);
    const auto& ev = es.eigenvalues();  // ascending
    return std::max(std::fabs(ev(0)), std::fabs(ev(n - 2)));
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(w_);
  std::vector<double> mods(n);
  for (int i = 0; i < n; ++i) mods[i] = std::abs(es.eigenvalues()(i));
  std::sort(mods.begin(), mods.end(), std::greater<>());
  return mods[1];
}

void WeightMatrix::validate_structure(const Graph& g) const {
  require(size() == g.n, "weight matrix: size does not match the graph");
  std::vector<std::vector<char>> is_edge(g.n, std::vector<char>(g.n, 0));
  for (const auto& [i, j] : g.edges) is_edge[i][j] = is_edge[j][i] = 1;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      if (i == j) continue;
      const bool positive = w_(i, j) > 0;
      require(positive == static_cast<bool>(is_edge[i][j]),
              "weight matrix: support does not match the edge set");
    }
}

// ---------------------------------------------------------------------------
// NoiseSchedule

NoiseSchedule NoiseSchedule::none() { return NoiseSchedule{}; }

NoiseSchedule NoiseSchedule::iid(DensitySpec spec) {
  NoiseSchedule s;
  s.variant = Variant::Iid;
  s.density = std::move(spec);
  return s;
}

NoiseSchedule NoiseSchedule::decaying_iid(DensitySpec spec, double gamma) {
  require(gamma > 0 && gamma < 1, "schedule: gamma must be in (0,1)");
  NoiseSchedule s;
  s.variant = Variant::DecayingIid;
  s.density = std::move(spec);
  s.gamma = gamma;
  return s;
}

NoiseSchedule NoiseSchedule::zero_sum_decaying(DensitySpec spec, double gamma) {
  require(gamma > 0 && gamma < 1, "schedule: gamma must be in (0,1)");
  NoiseSchedule s;
  s.variant = Variant::ZeroSumDecaying;
  s.density = std::move(spec);
  s.gamma = gamma;
  return s;
}

std::optional<DensitySpec> NoiseSchedule::first_step_density() const {
  // theta(0) draws straight from the base density for every variant
  // (gamma^0 = 1, and the zero-sum telescoping starts from w(-1) = 0).
  return density;
}

std::string NoiseSchedule::name() const {
  switch (variant) {
    case Variant::None: return "none";
    case Variant::Iid: return std::string("iid_") + density->family_name();
    case Variant::DecayingIid:
      return std::string("decaying_iid_") + density->family_name();
    case Variant::ZeroSumDecaying:
      return std::string("zero_sum_decaying_") + density->family_name();
  }
  return "?";
}

nlohmann::json NoiseSchedule::to_json() const {
  nlohmann::json j;
  switch (variant) {
    case Variant::None: j["variant"] = "none"; break;
    case Variant::Iid: j["variant"] = "iid"; break;
    case Variant::DecayingIid: j["variant"] = "decaying_iid"; break;
    case Variant::ZeroSumDecaying: j["variant"] = "zero_sum_decaying"; break;
  }
  if (density) j["density"] = density->to_json();
  if (variant == Variant::DecayingIid || variant == Variant::ZeroSumDecaying)
    j["gamma"] = gamma;
  return j;
}

NoiseSchedule NoiseSchedule::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("variant") || !j["variant"].is_string())
    throw std::invalid_argument("schedule JSON: missing field 'variant'");
  const std::string variant = j["variant"].get<std::string>();
  if (variant == "none") return none();
  if (!j.contains("density"))
    throw std::invalid_argument("schedule JSON: missing field 'density'");
  DensitySpec spec = DensitySpec::from_json(j["density"]);
  if (variant == "iid") return iid(std::move(spec));
  if (!j.contains("gamma") || !j["gamma"].is_number())
    throw std::invalid_argument("schedule JSON: missing field 'gamma'");
  const double gamma = j["gamma"].get<double>();
  if (variant == "decaying_iid") return decaying_iid(std::move(spec), gamma);
  if (variant == "zero_sum_decaying")
    return zero_sum_decaying(std::move(spec), gamma);
  throw std::invalid_argument("schedule JSON: unknown variant '" + variant +
                              "'");
}

// ---------------------------------------------------------------------------
// ScheduleSampler

ScheduleSampler::ScheduleSampler(const NoiseSchedule& sched, int n)
    : variant_(sched.variant), gamma_(sched.gamma) {
  require(n >= 1, "schedule sampler: n must be >= 1");
  if (sched.density)
    sampler_ = std::make_shared<const DensitySampler>(*sched.density);
  prev_draw_ = Eigen::VectorXd::Zero(n);
}

void ScheduleSampler::reset() {
  prev_draw_.setZero();
  k_ = 0;
}

void ScheduleSampler::next(Rng& rng, Eigen::VectorXd& out) {
  const auto n = prev_draw_.size();
  out.resize(n);
  if (variant_ == NoiseSchedule::Variant::None) {
    out.setZero();
    ++k_;
    return;
  }
  const double gk = std::pow(gamma_, static_cast<double>(k_));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = sampler_->draw(rng);
    switch (variant_) {
      case NoiseSchedule::Variant::Iid:
        out(i) = w;
        break;
      case NoiseSchedule::Variant::DecayingIid:
        out(i) = gk * w;
        break;
      case NoiseSchedule::Variant::ZeroSumDecaying:
        // gamma^k w(k) - gamma^{k-1} w(k-1); prev_draw_ holds
        // gamma^{k-1} w(k-1) and starts at zero.
        out(i) = gk * w - prev_draw_(i);
        prev_draw_(i) = gk * w;
        break;
      case NoiseSchedule::Variant::None:
        break;
    }
  }
  ++k_;
}

// ---------------------------------------------------------------------------
// Run

ConsensusRun run(const WeightMatrix& w, const Eigen::VectorXd& x0,
                 const NoiseSchedule& sched, int iterations,
                 std::uint64_t seed) {
  require(x0.size() == w.size(),
          "run: initial state dimension does not match the weight matrix");
  require(iterations >= 1, "run: needs at least one iteration");

  ConsensusRun r;
  r.w = w.matrix();
  r.x0 = x0;
  r.seed = seed;

  // Compensated mean of the initial state.
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const double y = x0(i) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  r.xbar = sum / static_cast<double>(x0.size());

  Rng rng(seed);
  ScheduleSampler sampler(sched, static_cast<int>(x0.size()));
  Eigen::VectorXd x = x0;
  Eigen::VectorXd theta, xp;
  r.xs.reserve(iterations + 1);
  r.xs_plus.reserve(iterations + 1);
  r.thetas.reserve(iterations + 1);
  for (int k = 0; k <= iterations; ++k) {
    sampler.next(rng, theta);
    xp = x + theta;
    r.xs.push_back(x);
    r.xs_plus.push_back(xp);
    r.thetas.push_back(theta);
    if (k < iterations) x = r.w * xp;
  }
  return r;
}

double average_error(const ConsensusRun& r, int k) {
  require(k >= 0 && k < static_cast<int>(r.xs.size()),
          "average_error: k out of range");
  const Eigen::VectorXd dev =
      r.xs[k] - Eigen::VectorXd::Constant(r.xs[k].size(), r.xbar);
  return dev.norm() / std::sqrt(static_cast<double>(r.xs[k].size()));
}

Eigen::VectorXd cumulative_noise(const ConsensusRun& r, int k) {
  require(k >= 0 && k < static_cast<int>(r.thetas.size()),
          "cumulative_noise: k out of range");
  Eigen::VectorXd acc = r.thetas[0];
  Eigen::VectorXd wk_x0 = r.x0;
  for (int l = 1; l <= k; ++l) {
    acc = r.w * acc + r.thetas[l];
    wk_x0 = r.w * wk_x0;
  }
  // x_plus(k) must equal W^k x0 plus the accumulated noise.
  const double resid = (r.xs_plus[k] - (wk_x0 + acc)).lpNorm<Eigen::Infinity>();
  const double scale = 1.0 + r.xs_plus[k].lpNorm<Eigen::Infinity>();
  if (resid > 1e-8 * scale)
    throw std::logic_error("cumulative_noise: trajectory identity violated");
  return acc;
}

void ConsensusRun::write_trajectory_csv(std::ostream& out) const {
  out << "k,node,x,x_plus,theta\n";
  for (std::size_t k = 0; k < xs.size(); ++k)
    for (Eigen::Index i = 0; i < xs[k].size(); ++i)
      out << k << ',' << i << ',' << fmt(xs[k](i)) << ',' << fmt(xs_plus[k](i))
          << ',' << fmt(thetas[k](i)) << '\n';
}

// ---------------------------------------------------------------------------
// Privacy of the released sequence

PrivacyVerdict first_release_privacy(const NoiseSchedule& sched,
                                     const AdjacencyParam& adj,
                                     const AnalyzerOptions& opts) {
  PrivacyVerdict v;
  v.sigma = adj.sigma;
  if (sched.variant == NoiseSchedule::Variant::None) {
    v.kind = VerdictKind::NotEpsDP;
    v.failed = FailedCondition::C1;
    v.note = "deterministic release: no noise is added";
    return v;
  }
  const DensitySpec spec = *sched.first_step_density();
  const EvalGrid grid = EvalGrid::default_for(spec);
  v = classify_eps_dp(spec, adj, grid, opts);
  if (!sched.later_noise_independent_of_first()) {
    // The reduction to the first release needs theta(k), k >= 1 independent
    // of theta(0); the zero-sum telescoping breaks that.
    PrivacyVerdict downgraded = v;
    downgraded.kind = VerdictKind::Inconclusive;
    downgraded.eps.reset();
    downgraded.delta.reset();
    downgraded.note =
        "later noise depends on theta(0) (zero-sum coupling); the "
        "first-release reduction does not apply";
    return downgraded;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Sequence privacy estimation (paired runs, common random numbers)

namespace {

struct Hist1d {
  double lo = 0.0, hi = 0.0, width = 0.0;
  std::vector<std::int64_t> p, q;
};

double eps_from_counts(const std::vector<std::int64_t>& p,
                       const std::vector<std::int64_t>& q, int min_count) {
  min_count = std::max(min_count, 1);
  double eps = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < min_count || q[i] < min_count) continue;
    eps = std::max(eps, std::fabs(std::log(static_cast<double>(p[i]) /
                                           static_cast<double>(q[i]))));
  }
  return eps;
}

}  // namespace

nlohmann::json SequencePrivacyEstimate::to_json() const {
  nlohmann::json j;
  j["per_step_eps"] = per_step_eps;
  j["first_release_eps"] = first_release_eps;
  j["joint_eps01"] = joint_eps01;
  j["i0"] = i0;
  return j;
}

SequencePrivacyEstimate sequence_privacy_estimate(
    const WeightMatrix& w, const NoiseSchedule& sched,
    const AdjacencyParam& adj, int iterations, std::size_t n_samples,
    int n_bins, std::uint64_t seed, const SequenceEstimateOptions& opts) {
  const int n = w.size();
  require(n <= 5, "sequence estimate: n must be <= 5");
  require(iterations >= 0 && iterations <= 5,
          "sequence estimate: iterations must be in [0, 5]");
  require(n_bins >= 8, "sequence estimate: n_bins must be >= 8");
  require(sched.variant != NoiseSchedule::Variant::None,
          "sequence estimate: schedule must inject noise");

  const int K = iterations;
  const int i0 = 0;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y0 = x0;
  y0(i0) += adj.sigma;

  ScheduleSampler sampler(sched, n);

  // One pass over the paired trajectories; both runs share the noise draws.
  auto sweep = [&](auto&& visit) {
    Eigen::VectorXd x, y, theta, xp, yp;
    for (std::size_t t = 0; t < n_samples; ++t) {
      Rng rng = Rng(seed).derive(t);
      sampler.reset();
      x = x0;
      y = y0;
      for (int k = 0; k <= K; ++k) {
        sampler.next(rng, theta);
        xp = x + theta;
        yp = y + theta;
        visit(k, xp, yp);
        if (k < K) {
          x = w.matrix() * xp;
          y = w.matrix() * yp;
        }
      }
    }
  };

  // Pass 1: value ranges per (coordinate, step), both runs combined.
  std::vector<std::vector<std::pair<double, double>>> range(
      K + 1, std::vector<std::pair<double, double>>(
                 n, {std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()}));
  sweep([&](int k, const Eigen::VectorXd& xp, const Eigen::VectorXd& yp) {
    for (int i = 0; i < n; ++i) {
      auto& [mn, mx] = range[k][i];
      mn = std::min({mn, xp(i), yp(i)});
      mx = std::max({mx, xp(i), yp(i)});
    }
  });

  // Pass 2: fill the per-(coordinate, step) histograms and the joint
  // histogram over (x_plus(0), x_plus(1)) at i0.
  std::vector<std::vector<Hist1d>> hists(K + 1, std::vector<Hist1d>(n));
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < n; ++i) {
      Hist1d& h = hists[k][i];
      h.lo = range[k][i].first;
      h.hi = range[k][i].second;
      if (!(h.hi > h.lo)) {
        h.lo -= 1e-9;
        h.hi += 1e-9;
      }
      h.width = (h.hi - h.lo) / n_bins;
      h.p.assign(n_bins, 0);
      h.q.assign(n_bins, 0);
    }

  const int jb = opts.joint_bins;
  std::vector<std::int64_t> jp, jq;
  double j0lo = 0, j0w = 1, j1lo = 0, j1w = 1;
  const bool with_joint = K >= 1;
  if (with_joint) {
    jp.assign(static_cast<std::size_t>(jb) * jb, 0);
    jq.assign(static_cast<std::size_t>(jb) * jb, 0);
    j0lo = range[0][i0].first;
    j0w = (range[0][i0].second - range[0][i0].first) / jb;
    j1lo = range[1][i0].first;
    j1w = (range[1][i0].second - range[1][i0].first) / jb;
    if (!(j0w > 0)) j0w = 1e-9;
    if (!(j1w > 0)) j1w = 1e-9;
  }

  auto bin_index = [](double v, double lo, double width, int bins) {
    int idx = static_cast<int>(std::floor((v - lo) / width));
    return std::clamp(idx, 0, bins - 1);
  };

  double x_rel0 = 0.0, y_rel0 = 0.0;  // released i0 values at k=0 per trial
  sweep([&](int k, const Eigen::VectorXd& xp, const Eigen::VectorXd& yp) {
    for (int i = 0; i < n; ++i) {
      Hist1d& h = hists[k][i];
      h.p[bin_index(xp(i), h.lo, h.width, n_bins)] += 1;
      h.q[bin_index(yp(i), h.lo, h.width, n_bins)] += 1;
    }
    if (with_joint) {
      if (k == 0) {
        x_rel0 = xp(i0);
        y_rel0 = yp(i0);
      } else if (k == 1) {
        const int pu = bin_index(x_rel0, j0lo, j0w, jb);
        const int pv = bin_index(xp(i0), j1lo, j1w, jb);
        const int qu = bin_index(y_rel0, j0lo, j0w, jb);
        const int qv = bin_index(yp(i0), j1lo, j1w, jb);
        jp[static_cast<std::size_t>(pu) * jb + pv] += 1;
        jq[static_cast<std::size_t>(qu) * jb + qv] += 1;
      }
    }
  });

  SequencePrivacyEstimate est;
  est.i0 = i0;
  est.per_step_eps.resize(K + 1, 0.0);
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < n; ++i)
      est.per_step_eps[k] =
          std::max(est.per_step_eps[k],
                   eps_from_counts(hists[k][i].p, hists[k][i].q,
                                   opts.min_bin_count));
  est.first_release_eps =
      eps_from_counts(hists[0][i0].p, hists[0][i0].q, opts.min_bin_count);
  est.joint_eps01 = with_joint
                        ? eps_from_counts(jp, jq, opts.min_bin_count)
                        : est.first_release_eps;
  return est;
}

// ---------------------------------------------------------------------------
// Tradeoff / impossibility experiment

TradeoffConfig TradeoffConfig::from_json(const nlohmann::json& j) {
  TradeoffConfig cfg;
  if (!j.is_object() || !j.contains("graph"))
    throw std::invalid_argument("tradeoff JSON: missing field 'graph'");
  cfg.graph = Graph::from_json(j["graph"]);
  if (!j.contains("schedules") || !j["schedules"].is_array())
    throw std::invalid_argument("tradeoff JSON: missing field 'schedules'");
  for (const auto& js : j["schedules"])
    cfg.schedules.push_back(NoiseSchedule::from_json(js));
  cfg.sigma = j.value("sigma", 1.0);
  if (!j.contains("K_values") || !j["K_values"].is_array())
    throw std::invalid_argument("tradeoff JSON: missing field 'K_values'");
  for (const auto& jk : j["K_values"]) cfg.k_values.push_back(jk.get<int>());
  cfg.trials = j.value("trials", 200);
  cfg.seed = j.value("seed", 12345678ull);
  cfg.cumnoise_threshold = j.value("cumnoise_threshold", 1e-2);
  if (j.contains("x0")) {
    const auto& jx = j["x0"];
    if (!jx.is_array() || static_cast<int>(jx.size()) != cfg.graph.n)
      throw std::invalid_argument(
          "tradeoff JSON: field 'x0' must be an array of length n");
    Eigen::VectorXd x0(cfg.graph.n);
    for (int i = 0; i < cfg.graph.n; ++i) x0(i) = jx[i].get<double>();
    cfg.x0 = x0;
  }
  return cfg;
}

void TradeoffReport::write_csv(std::ostream& out) const {
  out << "schedule,K,mse,eps_or_flag\n";
  for (const TradeoffRow& r : rows)
    out << r.schedule << ',' << r.k << ',' << fmt(r.mean_mse) << ','
        << r.eps_or_flag << '\n';
}

TradeoffReport impossibility_experiment(const TradeoffConfig& config) {
  require(!config.k_values.empty(), "tradeoff: K_values must not be empty");
  require(config.trials >= 1, "tradeoff: trials must be >= 1");

  const WeightMatrix w = WeightMatrix::metropolis(config.graph);
  Eigen::VectorXd x0;
  if (config.x0) {
    x0 = *config.x0;
  } else {
    x0.resize(config.graph.n);
    for (int i = 0; i < config.graph.n; ++i) x0(i) = static_cast<double>(i);
  }
  const int k_max = *std::max_element(config.k_values.begin(),
                                      config.k_values.end());
  require(k_max >= 1, "tradeoff: K values must be >= 1");

  TradeoffReport report;
  const AdjacencyParam adj(config.sigma);
  for (std::size_t s = 0; s < config.schedules.size(); ++s) {
    const NoiseSchedule& sched = config.schedules[s];
    std::vector<double> sum_mse(config.k_values.size(), 0.0);
    std::vector<double> sum_cn(config.k_values.size(), 0.0);
    for (int t = 0; t < config.trials; ++t) {
      const ConsensusRun r =
          run(w, x0, sched, k_max, trial_seed(config.seed, s, t));
      for (std::size_t ki = 0; ki < config.k_values.size(); ++ki) {
        const int k = config.k_values[ki];
        const double err = average_error(r, k);
        sum_mse[ki] += err * err;
        sum_cn[ki] += cumulative_noise(r, k).lpNorm<Eigen::Infinity>();
      }
    }

    const PrivacyVerdict verdict = first_release_privacy(sched, adj);
    for (std::size_t ki = 0; ki < config.k_values.size(); ++ki) {
      TradeoffRow row;
      row.schedule = sched.name();
      row.k = config.k_values[ki];
      row.mean_mse = sum_mse[ki] / config.trials;
      row.mean_cumnoise_inf = sum_cn[ki] / config.trials;

      if (sched.variant == NoiseSchedule::Variant::None) {
        row.eps_or_flag = "NotEpsDP(no-noise)";
      } else if (row.mean_cumnoise_inf < config.cumnoise_threshold) {
        // The released cumulative noise vanishes, so the release sequence
        // cannot keep a bounded, non-degenerate noise law: not eps-DP.
        row.eps_or_flag = "NotEpsDP(vanishing-cumulative-noise)";
      } else if (verdict.kind == VerdictKind::EpsDP) {
        row.eps_or_flag = "EpsDP(eps<=" + fmt(*verdict.eps) + ")";
      } else if (verdict.kind == VerdictKind::EpsDeltaDP) {
        row.eps_or_flag = "EpsDeltaDP(eps<=" + fmt(*verdict.eps) +
                          ",delta<=" + fmt(*verdict.delta) + ")";
      } else {
        row.eps_or_flag = std::string(to_string(verdict.kind));
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace dpnoise
