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

#include "dpnoise/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dpnoise/quadrature.hpp"

namespace dpnoise {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, int iters,
                                     std::size_t* evals) {
  const double phi = 0.6180339887498949;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  *evals += 2;
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
    ++*evals;
  }
  return f1 > f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

std::vector<double> scan_points_in(const DensitySpec& spec,
                                   const EvalGrid& grid, double z_lo,
                                   double z_hi) {
  std::vector<double> pts;
  const std::size_t n = grid.point_count();
  pts.reserve(n + 64);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = grid.point(i);
    if (z >= z_lo && z <= z_hi) pts.push_back(z);
  }
  for (double b : spec.breakpoints_in(z_lo, z_hi)) pts.push_back(b);
  pts.push_back(z_lo);
  pts.push_back(z_hi);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Core estimator for sup of f(z+s)/f(z) over s in [-sigma, sigma] and z in
// [z_lo, z_hi] with f(z) above the zero threshold. Works in log space so
// tails never underflow. The boundary-divergence heuristic only makes sense
// when the window edge is the grid edge (the density's far tail), so it is
// switched off per side for interior windows.
RatioProfile ratio_sup_in(const DensitySpec& spec, const AdjacencyParam& adj,
                          const EvalGrid& grid, double cap, double z_lo,
                          double z_hi, const AnalyzerOptions& opts) {
  if (!(cap > 1.0)) throw std::invalid_argument("shift_ratio_sup: cap must be > 1");
  const double sigma = adj.sigma;
  const double tau = opts.tau_zero.value_or(spec.default_tau_zero());
  const double ld_floor = tau > 0 ? std::log(tau) : -kInf;
  const double log_cap = std::log(cap);

  auto valid = [&](double ld) { return ld > ld_floor && std::isfinite(ld); };

  const std::vector<double> pts = scan_points_in(spec, grid, z_lo, z_hi);
  const double shifts[5] = {-sigma, -0.5 * sigma, 0.0, 0.5 * sigma, sigma};

  RatioProfile prof;
  prof.c_b = 1.0;
  prof.argmax_shift = 0.0;
  double best = 0.0;  // log ratio; the identity shift always attains 0
  bool have_argmax = false;
  std::vector<double> per_z(pts.size(),
                            -std::numeric_limits<double>::infinity());
  bool valid_any = false;

  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double z = pts[i];
    const double ldz = spec.log_density(z);
    if (!valid(ldz)) continue;
    valid_any = true;
    if (!have_argmax) {
      prof.argmax_z = z;
      have_argmax = true;
    }
    double zbest = -kInf;
    for (double s : shifts) {
      const double lr = spec.log_density(z + s) - ldz;
      ++prof.samples;
      if (lr > zbest) zbest = lr;
      if (lr > best) {
        best = lr;
        prof.argmax_z = z;
        prof.argmax_shift = s;
      }
    }
    per_z[i] = zbest;
    if (best > log_cap) {
      prof.cap_hit = true;
      prof.c_b = kInf;
      return prof;
    }
  }
  if (!valid_any) {
    // Density carries no mass in the window; the sup over an empty set is
    // reported as the trivial ratio 1.
    prof.c_b = 1.0;
    return prof;
  }

  // Boundary divergence: ratio still growing at the far end of the tail.
  std::vector<std::size_t> valid_idx;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (std::isfinite(per_z[i])) valid_idx.push_back(i);
  auto diverges = [&](bool right_side) {
    const auto& idx = valid_idx;
    if (idx.size() < 16) return false;
    const std::size_t w = std::max<std::size_t>(8, idx.size() / 10);
    double first, last;
    bool monotone = true;
    if (right_side) {
      for (std::size_t k = idx.size() - w; k + 1 < idx.size(); ++k)
        if (per_z[idx[k + 1]] < per_z[idx[k]] - 1e-12) monotone = false;
      first = per_z[idx[idx.size() - w]];
      last = per_z[idx.back()];
    } else {
      for (std::size_t k = 0; k + 1 < w; ++k)
        if (per_z[idx[k]] < per_z[idx[k + 1]] - 1e-12) monotone = false;
      first = per_z[idx[w - 1]];
      last = per_z[idx.front()];
    }
    return monotone && last > first + 1e-9 && last > std::log(cap / 10.0);
  };
  const bool diverges_hi = z_hi >= grid.hi && diverges(true);
  const bool diverges_lo = z_lo <= grid.lo && diverges(false);
  if (diverges_hi || diverges_lo) {
    prof.cap_hit = true;
    prof.c_b = kInf;
    prof.argmax_z = diverges_hi ? pts.back() : pts.front();
    return prof;
  }

  // Local refinement around the running argmax (coordinate ascent).
  auto lr_at = [&](double z, double s) {
    const double ldz = spec.log_density(z);
    if (!valid(ldz)) return -kInf;
    return spec.log_density(z + s) - ldz;
  };
  double z0 = prof.argmax_z;
  double s0 = prof.argmax_shift;
  prof.converged = true;
  for (int round = 0; round < opts.refine_rounds; ++round) {
    const double before = best;
    auto [s_new, f_s] = golden_max([&](double s) { return lr_at(z0, s); },
                                   -sigma, sigma, opts.refine_iters,
                                   &prof.samples);
    if (f_s > best) {
      best = f_s;
      s0 = s_new;
    }
    const double zl = std::max(z_lo, z0 - grid.step);
    const double zh = std::min(z_hi, z0 + grid.step);
    auto [z_new, f_z] = golden_max([&](double z) { return lr_at(z, s0); }, zl,
                                   zh, opts.refine_iters, &prof.samples);
    if (f_z > best) {
      best = f_z;
      z0 = z_new;
    }
    if (best > log_cap) {
      prof.cap_hit = true;
      prof.c_b = kInf;
      prof.argmax_z = z0;
      prof.argmax_shift = s0;
      return prof;
    }
    if (best - before <= 1e-9 * (1.0 + std::fabs(best))) break;
    if (round == opts.refine_rounds - 1) prof.converged = false;
  }

  prof.argmax_z = z0;
  prof.argmax_shift = s0;
  prof.c_b = std::exp(std::max(best, 0.0));
  return prof;
}

std::optional<double> zero_set_shift_mass(const DensitySpec& spec,
                                          const ZeroSet& zs, double sigma,
                                          double clip_lo, double clip_hi) {
  double plus = 0.0;
  double minus = 0.0;
  for (const ZeroSet::Interval& iv : zs.intervals) {
    const double lo = std::max(iv.lo, clip_lo);
    const double hi = std::min(iv.hi, clip_hi);
    if (hi <= lo) continue;
    plus += mass_between(spec, lo + sigma, hi + sigma);
    minus += mass_between(spec, lo - sigma, hi - sigma);
  }
  return std::max(plus, minus);
}

}  // namespace

AdjacencyParam::AdjacencyParam(double s) : sigma(s) {
  if (!(std::isfinite(s) && s >= 0))
    throw std::invalid_argument("adjacency: sigma must be finite and >= 0");
}

const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::EpsDP: return "EpsDP";
    case VerdictKind::EpsDeltaDP: return "EpsDeltaDP";
    case VerdictKind::NotEpsDP: return "NotEpsDP";
    case VerdictKind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

const char* to_string(FailedCondition c) {
  switch (c) {
    case FailedCondition::None: return "None";
    case FailedCondition::C1: return "C1";
    case FailedCondition::C2: return "C2";
    case FailedCondition::VanishingPoint: return "VanishingPoint";
  }
  return "?";
}

nlohmann::json RatioProfile::to_json() const {
  nlohmann::json j;
  if (cap_hit)
    j["c_b"] = "unbounded";
  else
    j["c_b"] = c_b;
  j["cap_hit"] = cap_hit;
  j["converged"] = converged;
  j["argmax_z"] = argmax_z;
  j["argmax_shift"] = argmax_shift;
  j["samples"] = samples;
  return j;
}

nlohmann::json PrivacyVerdict::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  j["eps"] = eps ? nlohmann::json(*eps) : nlohmann::json(nullptr);
  j["delta"] = delta ? nlohmann::json(*delta) : nlohmann::json(nullptr);
  j["failed_condition"] = to_string(failed);
  j["sigma"] = sigma;
  j["note"] = note;
  j["diagnostics"] = {{"ratio", ratio.to_json()},
                      {"zero_set", zeros.to_json()},
                      {"vanishing_points", vanishing_points}};
  return j;
}

std::pair<bool, ZeroSet> check_c1(const DensitySpec& spec,
                                  const EvalGrid& grid, double tau_zero) {
  ZeroSet zs = zero_set(spec, grid, tau_zero);
  const bool ok = zs.total_measure == 0.0;
  return {ok, std::move(zs)};
}

std::pair<bool, ZeroSet> check_c1(const DensitySpec& spec,
                                  const EvalGrid& grid) {
  return check_c1(spec, grid, spec.default_tau_zero());
}

RatioProfile shift_ratio_sup(const DensitySpec& spec, const AdjacencyParam& adj,
                             const EvalGrid& grid, double cap) {
  AnalyzerOptions opts;
  opts.cap = cap;
  return ratio_sup_in(spec, adj, grid, cap, grid.lo, grid.hi, opts);
}

std::vector<double> vanishing_point_check(const DensitySpec& spec,
                                          const EvalGrid& grid,
                                          const AnalyzerOptions& opts) {
  const double tau = opts.tau_zero.value_or(spec.default_tau_zero());
  const ZeroSet zs = zero_set(spec, grid, tau);

  const std::vector<double> pts = scan_points_in(spec, grid, grid.lo, grid.hi);
  std::vector<double> lvals(pts.size());
  double log_peak = -kInf;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    lvals[i] = spec.log_density(pts[i]);
    log_peak = std::max(log_peak, lvals[i]);
  }
  if (!std::isfinite(log_peak)) return {};
  const double log_thresh = std::log(opts.tau_vanish_rel) + log_peak;

  std::vector<double> candidates = zs.acnodes;
  std::size_t evals = 0;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const bool le_l = lvals[i] <= lvals[i - 1];
    const bool le_r = lvals[i] <= lvals[i + 1];
    const bool strict = lvals[i] < lvals[i - 1] || lvals[i] < lvals[i + 1];
    if (!(le_l && le_r && strict)) continue;
    auto [zmin, lmin] =
        golden_max([&](double z) { return -spec.log_density(z); }, pts[i - 1],
                   pts[i + 1], 100, &evals);
    const double low = std::min(-lmin, lvals[i]);
    if (low <= log_thresh) candidates.push_back(zmin);
  }
  std::sort(candidates.begin(), candidates.end());

  const double h = grid.step;
  std::vector<double> out;
  for (double c : candidates) {
    if (c - grid.lo < h || grid.hi - c < h) continue;
    bool near_interval = false;
    for (const ZeroSet::Interval& iv : zs.intervals)
      if (c >= iv.lo - h && c <= iv.hi + h) near_interval = true;
    if (near_interval) continue;

    // The density must be positive just off c and descend toward it; a flat
    // neighborhood means an isolated dip or jump, not a vanishing limit.
    const double d = h / 8.0;
    bool ok = true;
    for (double side : {-1.0, 1.0}) {
      const double f_far = spec.density(c + side * d);
      const double f_near = spec.density(c + side * d / 16.0);
      if (!(f_far > 0.0) || !(f_near <= 0.6 * f_far)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    if (out.empty() || c - out.back() > h) out.push_back(c);
  }
  return out;
}

std::vector<double> vanishing_point_check(const DensitySpec& spec,
                                          const EvalGrid& grid) {
  return vanishing_point_check(spec, grid, AnalyzerOptions{});
}

std::optional<std::pair<double, double>> delta_bound_zero_set(
    const DensitySpec& spec, const AdjacencyParam& adj, const EvalGrid& grid,
    const AnalyzerOptions& opts) {
  const RatioProfile prof =
      ratio_sup_in(spec, adj, grid, opts.cap, grid.lo, grid.hi, opts);
  if (prof.unbounded() || !prof.converged) return std::nullopt;
  const double tau = opts.tau_zero.value_or(spec.default_tau_zero());
  const ZeroSet zs = zero_set(spec, grid, tau);
  const auto shifted =
      zero_set_shift_mass(spec, zs, adj.sigma, grid.lo, grid.hi);
  const double delta = std::clamp(*shifted, 0.0, 1.0);
  return std::make_pair(std::log(prof.c_b), delta);
}

std::optional<SplitBound> split_bound(const DensitySpec& spec,
                                      const AdjacencyParam& adj, double m,
                                      const EvalGrid& grid,
                                      const AnalyzerOptions& opts) {
  if (!(m > 0)) throw std::invalid_argument("split_bound: M must be > 0");
  const double z_lo = std::max(grid.lo, -m);
  const double z_hi = std::min(grid.hi, m);
  const RatioProfile prof =
      ratio_sup_in(spec, adj, grid, opts.cap, z_lo, z_hi, opts);
  if (prof.unbounded() || !prof.converged) return std::nullopt;

  // Mass outside [-M, M]: quadrature inside the grid window, the tail budget
  // as an upper bound for the truncated remainder.
  auto f = [&](double z) { return spec.density(z); };
  double outside = grid.tail_mass_budget;
  if (-m > grid.lo) {
    const auto cuts = spec.breakpoints_in(grid.lo, -m);
    outside += integrate_with_breakpoints(f, grid.lo, -m, cuts);
  }
  if (m < grid.hi) {
    const auto cuts = spec.breakpoints_in(m, grid.hi);
    outside += integrate_with_breakpoints(f, m, grid.hi, cuts);
  }

  // Zero-set mass inside [-M, M] reached by a shift contributes as in the
  // zero-set route.
  const double tau = opts.tau_zero.value_or(spec.default_tau_zero());
  const ZeroSet zs = zero_set(spec, grid, tau);
  const double shifted =
      *zero_set_shift_mass(spec, zs, adj.sigma, z_lo, z_hi);

  SplitBound out;
  out.m = m;
  out.eps = std::log(prof.c_b);
  out.delta = std::clamp(outside + shifted, 0.0, 1.0);
  return out;
}

std::vector<SplitRow> sweep_split(const DensitySpec& spec,
                                  const AdjacencyParam& adj,
                                  const std::vector<double>& m_values,
                                  const EvalGrid& grid,
                                  const AnalyzerOptions& opts) {
  std::vector<SplitRow> rows;
  for (double m : m_values) {
    SplitRow row{m, false, 0.0, 0.0};
    if (auto sb = split_bound(spec, adj, m, grid, opts)) {
      row.applicable = true;
      row.eps = sb->eps;
      row.delta = sb->delta;
    }
    rows.push_back(row);
  }
  return rows;
}

PrivacyVerdict classify_eps_dp(const DensitySpec& spec,
                               const AdjacencyParam& adj, const EvalGrid& grid,
                               const AnalyzerOptions& opts) {
  PrivacyVerdict v;
  v.sigma = adj.sigma;

  auto [c1, zs] = opts.tau_zero ? check_c1(spec, grid, *opts.tau_zero)
                                : check_c1(spec, grid);
  v.zeros = zs;

  if (!c1) {
    v.failed = FailedCondition::C1;
    if (auto route = delta_bound_zero_set(spec, adj, grid, opts)) {
      v.kind = VerdictKind::EpsDeltaDP;
      v.eps = route->first;
      v.delta = route->second;
      v.ratio = ratio_sup_in(spec, adj, grid, opts.cap, grid.lo, grid.hi, opts);
      std::ostringstream note;
      note << "zero-point set has measure " << zs.total_measure
           << "; shifted zero-set mass bounds delta";
      v.note = note.str();
      return v;
    }
    if (opts.split) {
      if (auto sb = split_bound(spec, adj, *opts.split, grid, opts)) {
        v.kind = VerdictKind::EpsDeltaDP;
        v.eps = sb->eps;
        v.delta = sb->delta;
        v.note = "zero-point set has positive measure; split bound applies";
        return v;
      }
    }
    v.kind = VerdictKind::NotEpsDP;
    v.note = "zero-point set has positive measure and the restricted shift "
             "ratio is unbounded";
    return v;
  }

  v.vanishing_points = vanishing_point_check(spec, grid, opts);
  if (!v.vanishing_points.empty()) {
    v.kind = VerdictKind::NotEpsDP;
    v.failed = FailedCondition::VanishingPoint;
    std::ostringstream note;
    note << "density vanishes at z=" << v.vanishing_points.front()
         << " while positive nearby";
    v.note = note.str();
    return v;
  }

  v.ratio = ratio_sup_in(spec, adj, grid, opts.cap, grid.lo, grid.hi, opts);
  if (!v.ratio.cap_hit && !v.ratio.converged) {
    v.kind = VerdictKind::Inconclusive;
    v.note = "shift-ratio refinement did not converge; grid may be too coarse";
    return v;
  }
  if (!v.ratio.unbounded()) {
    v.kind = VerdictKind::EpsDP;
    v.eps = std::log(v.ratio.c_b);
    v.delta = 0.0;
    return v;
  }

  v.failed = FailedCondition::C2;
  if (opts.split) {
    if (auto sb = split_bound(spec, adj, *opts.split, grid, opts)) {
      v.kind = VerdictKind::EpsDeltaDP;
      v.eps = sb->eps;
      v.delta = sb->delta;
      std::ostringstream note;
      note << "shift ratio unbounded on the full line; split at M=" << sb->m;
      v.note = note.str();
      return v;
    }
    v.kind = VerdictKind::NotEpsDP;
    v.note = "shift ratio unbounded, and still unbounded inside the split "
             "window";
    return v;
  }
  v.kind = VerdictKind::NotEpsDP;
  v.note = "shift ratio unbounded (use a split bound for an (eps,delta) "
           "verdict)";
  return v;
}

}  // namespace dpnoise
