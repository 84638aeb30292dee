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

#ifndef DPNOISE_ANALYZER_HPP
#define DPNOISE_ANALYZER_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dpnoise/density.hpp"

namespace dpnoise {

// The sigma of sigma-adjacency: two state vectors are adjacent when they
// differ in at most one coordinate, by at most sigma.
struct AdjacencyParam {
  double sigma;

  explicit AdjacencyParam(double s);
};

// Estimate of sup over shifts s in [-sigma, sigma] and points z with
// f(z) > tau_zero of f(z+s)/f(z).
struct RatioProfile {
  double c_b = 1.0;       // >= 1; meaningless when cap_hit
  bool cap_hit = false;   // ratio exceeded the cap, or diverges at the boundary
  bool converged = true;  // false when local refinement hit its round limit
  double argmax_z = 0.0;
  double argmax_shift = 0.0;
  std::size_t samples = 0;

  bool unbounded() const { return cap_hit; }
  nlohmann::json to_json() const;
};

enum class VerdictKind { EpsDP, EpsDeltaDP, NotEpsDP, Inconclusive };
enum class FailedCondition { None, C1, C2, VanishingPoint };

const char* to_string(VerdictKind k);
const char* to_string(FailedCondition c);

// Classification of the additive mechanism x -> x + theta for one noise
// density and one adjacency parameter, with the bounds that justify it.
struct PrivacyVerdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::optional<double> eps;    // present for EpsDP / EpsDeltaDP
  std::optional<double> delta;  // 0 for EpsDP, in (0,1] for EpsDeltaDP
  FailedCondition failed = FailedCondition::None;
  double sigma = 0.0;
  std::string note;

  RatioProfile ratio;
  ZeroSet zeros;
  std::vector<double> vanishing_points;

  bool is_private() const {
    return kind == VerdictKind::EpsDP || kind == VerdictKind::EpsDeltaDP;
  }
  nlohmann::json to_json() const;
};

struct AnalyzerOptions {
  double cap = 1e6;             // ratio above this counts as unbounded
  std::optional<double> split;  // M: enables the two-region fallback on C2
  std::optional<double> tau_zero;  // default: spec-dependent
  double tau_vanish_rel = 1e-9;    // vanishing threshold, relative to the peak
  int refine_rounds = 4;
  int refine_iters = 60;
};

// Condition "zero measure of the zero-point set". Acnodes are excluded.
std::pair<bool, ZeroSet> check_c1(const DensitySpec& spec,
                                  const EvalGrid& grid);
std::pair<bool, ZeroSet> check_c1(const DensitySpec& spec,
                                  const EvalGrid& grid, double tau_zero);

// Bounded-shift-ratio condition. Scans the grid crossed with shifts
// {0, +-sigma/2, +-sigma}, then refines locally around the running argmax.
// Declares the sup unbounded when a ratio exceeds `cap` or when the ratio
// grows monotonically over the outermost tenth of the domain above cap/10.
RatioProfile shift_ratio_sup(const DensitySpec& spec, const AdjacencyParam& adj,
                             const EvalGrid& grid, double cap = 1e6);

// Finite points where the density tends to zero while staying positive in a
// punctured neighborhood. A non-empty result rules out eps-DP.
std::vector<double> vanishing_point_check(const DensitySpec& spec,
                                          const EvalGrid& grid);
std::vector<double> vanishing_point_check(const DensitySpec& spec,
                                          const EvalGrid& grid,
                                          const AnalyzerOptions& opts);

// (eps, delta) from the zero-set route: eps = log of the restricted shift
// ratio, delta = shifted density mass over the zero set. Empty when the
// restricted ratio is itself unbounded.
std::optional<std::pair<double, double>> delta_bound_zero_set(
    const DensitySpec& spec, const AdjacencyParam& adj, const EvalGrid& grid,
    const AnalyzerOptions& opts = {});

// (eps, delta) from the two-region split Theta_1 = [-M, M]: delta is the
// mass outside [-M, M] plus the shifted zero-set mass inside, eps is the log
// of the ratio sup restricted to [-M, M]. Empty when that restricted sup is
// still unbounded.
struct SplitBound {
  double m;
  double eps;
  double delta;
};
std::optional<SplitBound> split_bound(const DensitySpec& spec,
                                      const AdjacencyParam& adj, double m,
                                      const EvalGrid& grid,
                                      const AnalyzerOptions& opts = {});

struct SplitRow {
  double m;
  bool applicable;
  double eps;    // valid when applicable
  double delta;  // valid when applicable
};
std::vector<SplitRow> sweep_split(const DensitySpec& spec,
                                  const AdjacencyParam& adj,
                                  const std::vector<double>& m_values,
                                  const EvalGrid& grid,
                                  const AnalyzerOptions& opts = {});

// Full classification. Checks, in order: the zero-measure condition (falling
// through to the zero-set delta route on failure), vanishing points, and the
// bounded-ratio condition (falling through to the split route when opts.split
// is set).
PrivacyVerdict classify_eps_dp(const DensitySpec& spec,
                               const AdjacencyParam& adj, const EvalGrid& grid,
                               const AnalyzerOptions& opts = {});

}  // namespace dpnoise

#endif
