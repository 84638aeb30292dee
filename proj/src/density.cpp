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

#include "dpnoise/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dpnoise/quadrature.hpp"

namespace dpnoise {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2Pi = 2.5066282746310005024;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Non-negativity probe used at piecewise construction time. Evaluation later
// never throws, so crude mistakes are rejected here.
void probe_segment(const DensitySpec::Segment& seg, int index) {
  double lo = seg.lo;
  double hi = seg.hi;
  if (std::isinf(lo) && std::isinf(hi)) {
    lo = -64.0;
    hi = 64.0;
  } else if (std::isinf(lo)) {
    lo = hi - 64.0;
  } else if (std::isinf(hi)) {
    hi = lo + 64.0;
  }
  const int kProbes = 257;
  for (int i = 0; i < kProbes; ++i) {
    const double z = lo + (hi - lo) * i / (kProbes - 1);
    const double v = seg.expr.eval(z);
    if (std::isnan(v) || v < -1e-12) {
      std::ostringstream msg;
      msg << "piecewise segment " << index << ": density is "
          << (std::isnan(v) ? "NaN" : "negative") << " at z=" << z;
      throw std::invalid_argument(msg.str());
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction

DensitySpec DensitySpec::laplace(double location, double scale) {
  require(std::isfinite(location), "laplace: location must be finite");
  require(std::isfinite(scale) && scale > 0, "laplace: scale must be > 0");
  return DensitySpec(Laplace{location, scale});
}

DensitySpec DensitySpec::gaussian(double mean, double stddev) {
  require(std::isfinite(mean), "gaussian: mean must be finite");
  require(std::isfinite(stddev) && stddev > 0, "gaussian: stddev must be > 0");
  return DensitySpec(Gaussian{mean, stddev});
}

DensitySpec DensitySpec::uniform(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi), "uniform: bounds must be finite");
  require(lo < hi, "uniform: lo must be < hi");
  return DensitySpec(Uniform{lo, hi});
}

DensitySpec DensitySpec::staircase(double ratio, double half_width) {
  require(ratio > 0 && ratio < 1, "staircase: ratio must be in (0,1)");
  require(std::isfinite(half_width) && half_width > 0,
          "staircase: half_width must be > 0");
  return DensitySpec(Staircase{ratio, half_width});
}

DensitySpec DensitySpec::piecewise(std::vector<Segment> segments) {
  require(!segments.empty(), "piecewise: needs at least one segment");
  require(segments.size() <= 10000, "piecewise: too many segments");
  std::sort(segments.begin(), segments.end(),
            [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    require(!(std::isnan(s.lo) || std::isnan(s.hi)),
            "piecewise: segment bounds must not be NaN");
    require(s.lo < s.hi, "piecewise: segment lo must be < hi");
    if (i + 1 < segments.size())
      require(s.hi <= segments[i + 1].lo,
              "piecewise: segments overlap on an interval");
    probe_segment(s, static_cast<int>(i));
  }
  return DensitySpec(Piecewise{std::move(segments)});
}

// ---------------------------------------------------------------------------
// Evaluation

double DensitySpec::density(double z) const {
  return std::visit(
      [z](const auto& fam) -> double {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Laplace>) {
          return std::exp(-std::fabs(z - fam.location) / fam.scale) /
                 (2.0 * fam.scale);
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          const double t = (z - fam.mean) / fam.stddev;
          return std::exp(-0.5 * t * t) / (fam.stddev * kSqrt2Pi);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return (z >= fam.lo && z <= fam.hi) ? 1.0 / (fam.hi - fam.lo) : 0.0;
        } else if constexpr (std::is_same_v<T, Staircase>) {
          const double k = std::floor(std::fabs(z) / fam.half_width);
          return (1.0 - fam.ratio) / (2.0 * fam.half_width) *
                 std::pow(fam.ratio, k);
        } else {
          for (const Segment& s : fam.segments)
            if (z >= s.lo && z <= s.hi) return std::max(s.expr.eval(z), 0.0);
          return 0.0;
        }
      },
      family_);
}

double DensitySpec::log_density(double z) const {
  return std::visit(
      [z, this](const auto& fam) -> double {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Laplace>) {
          return -std::fabs(z - fam.location) / fam.scale -
                 std::log(2.0 * fam.scale);
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          const double t = (z - fam.mean) / fam.stddev;
          return -0.5 * t * t - std::log(fam.stddev * kSqrt2Pi);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return (z >= fam.lo && z <= fam.hi) ? -std::log(fam.hi - fam.lo)
                                              : -kInf;
        } else if constexpr (std::is_same_v<T, Staircase>) {
          const double k = std::floor(std::fabs(z) / fam.half_width);
          return std::log((1.0 - fam.ratio) / (2.0 * fam.half_width)) +
                 k * std::log(fam.ratio);
        } else {
          const double v = density(z);
          return v > 0.0 ? std::log(v) : -kInf;
        }
      },
      family_);
}

// ---------------------------------------------------------------------------
// CDF / quantile

bool DensitySpec::has_closed_form_cdf() const {
  return !std::holds_alternative<Piecewise>(family_);
}

double DensitySpec::cdf(double z) const {
  return std::visit(
      [z](const auto& fam) -> double {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Laplace>) {
          const double t = (z - fam.location) / fam.scale;
          return t < 0 ? 0.5 * std::exp(t) : 1.0 - 0.5 * std::exp(-t);
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return standard_normal_cdf((z - fam.mean) / fam.stddev);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          if (z <= fam.lo) return 0.0;
          if (z >= fam.hi) return 1.0;
          return (z - fam.lo) / (fam.hi - fam.lo);
        } else if constexpr (std::is_same_v<T, Staircase>) {
          // Symmetric about 0; half-mass below 0. For z >= 0 in step k the
          // mass of the full steps is (1 - ratio^k)/2, the partial step adds
          // linearly.
          const double a = fam.half_width;
          const double rho = fam.ratio;
          const double az = std::fabs(z);
          const double k = std::floor(az / a);
          const double rk = std::pow(rho, k);
          const double half = 0.5 * (1.0 - rk) +
                              (az - k * a) * (1.0 - rho) / (2.0 * a) * rk;
          return z >= 0 ? 0.5 + half : 0.5 - half;
        } else {
          throw std::logic_error("cdf: no closed form for piecewise specs");
        }
      },
      family_);
}

double DensitySpec::quantile(double u) const {
  require(u > 0.0 && u < 1.0, "quantile: u must be in (0,1)");
  return std::visit(
      [u](const auto& fam) -> double {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Laplace>) {
          return u < 0.5 ? fam.location + fam.scale * std::log(2.0 * u)
                         : fam.location - fam.scale * std::log(2.0 * (1.0 - u));
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return fam.mean + fam.stddev * standard_normal_quantile(u);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return fam.lo + u * (fam.hi - fam.lo);
        } else if constexpr (std::is_same_v<T, Staircase>) {
          // Invert the piecewise-geometric CDF one half at a time.
          const double a = fam.half_width;
          const double rho = fam.ratio;
          const double t = std::fabs(2.0 * u - 1.0);
          if (t == 0.0) return 0.0;
          double k = std::floor(std::log1p(-t) / std::log(rho));
          if (k < 0) k = 0;
          double rk = std::pow(rho, k);
          // Guard the floor against rounding at step boundaries.
          while (rk < (1.0 - t) && k > 0) {
            k -= 1.0;
            rk /= rho;
          }
          double s = (t - (1.0 - rk)) / ((1.0 - rho) * rk);
          s = std::clamp(s, 0.0, 1.0);
          const double z = (k + s) * a;
          return u >= 0.5 ? z : -z;
        } else {
          throw std::logic_error("quantile: no closed form for piecewise specs");
        }
      },
      family_);
}

// ---------------------------------------------------------------------------
// Hints, breakpoints

namespace {

// Finite window outside which a piecewise density is negligible, found by
// doubling from the finite segment structure.
std::pair<double, double> effective_bounds(const DensitySpec::Piecewise& pw,
                                           const DensitySpec& spec) {
  double lo = kInf, hi = -kInf;
  bool open_left = false, open_right = false;
  for (const auto& s : pw.segments) {
    if (std::isinf(s.lo))
      open_left = true;
    else
      lo = std::min(lo, s.lo);
    if (std::isinf(s.hi))
      open_right = true;
    else
      hi = std::max(hi, s.hi);
  }
  if (!std::isfinite(lo)) lo = -1.0;
  if (!std::isfinite(hi)) hi = 1.0;
  if (lo >= hi) {
    lo -= 1.0;
    hi += 1.0;
  }

  double peak = 0.0;
  for (int i = 0; i <= 256; ++i)
    peak = std::max(peak, spec.density(lo + (hi - lo) * i / 256.0));
  peak = std::max(peak, 1e-300);

  auto negligible = [&](double z) { return spec.density(z) < 1e-18 * peak; };
  double pad = std::max(1.0, 0.5 * (hi - lo));
  for (int round = 0; round < 60; ++round) {
    bool grown = false;
    if (open_left && !(negligible(lo) && negligible(lo + 0.5 * pad))) {
      lo -= pad;
      grown = true;
    }
    if (open_right && !(negligible(hi) && negligible(hi - 0.5 * pad))) {
      hi += pad;
      grown = true;
    }
    if (!grown) break;
    pad *= 2.0;
  }
  return {lo, hi};
}

struct Moments {
  double mean;
  double scale;
};

Moments piecewise_moments(const DensitySpec& spec,
                          const DensitySpec::Piecewise& pw) {
  auto [lo, hi] = effective_bounds(pw, spec);
  std::vector<double> cuts;
  for (const auto& s : pw.segments) {
    if (std::isfinite(s.lo)) cuts.push_back(s.lo);
    if (std::isfinite(s.hi)) cuts.push_back(s.hi);
  }
  auto f = [&](double z) { return spec.density(z); };
  auto zf = [&](double z) { return z * spec.density(z); };
  auto zzf = [&](double z) { return z * z * spec.density(z); };
  const double mass = integrate_with_breakpoints(f, lo, hi, cuts);
  if (!(mass > 0))
    throw std::invalid_argument("piecewise: zero total mass on its support");
  const double mean = integrate_with_breakpoints(zf, lo, hi, cuts) / mass;
  const double second = integrate_with_breakpoints(zzf, lo, hi, cuts) / mass;
  const double var = std::max(second - mean * mean, 0.0);
  double scale = std::sqrt(var);
  scale = std::max(scale, (hi - lo) / 80.0);  // keep the default window sane
  return {mean, scale};
}

}  // namespace

double DensitySpec::mean_hint() const {
  return std::visit(
      [this](const auto& fam) -> double {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Laplace>) return fam.location;
        else if constexpr (std::is_same_v<T, Gaussian>) return fam.mean;
        else if constexpr (std::is_same_v<T, Uniform>)
          return 0.5 * (fam.lo + fam.hi);
        else if constexpr (std::is_same_v<T, Staircase>) return 0.0;
        else return piecewise_moments(*this, fam).mean;
      },
      family_);
}

double DensitySpec::scale_hint() const {
  return std::visit(
      [this](const auto& fam) -> double {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Laplace>)
          return fam.scale * std::sqrt(2.0);
        else if constexpr (std::is_same_v<T, Gaussian>)
          return fam.stddev;
        else if constexpr (std::is_same_v<T, Uniform>)
          return 0.5 * (fam.hi - fam.lo);
        else if constexpr (std::is_same_v<T, Staircase>) {
          // Root of the second moment of the step profile.
          const double rho = fam.ratio;
          const double a = fam.half_width;
          const double q = 1.0 - rho;
          const double second =
              a * a / 3.0 *
              (3.0 * rho * (1.0 + rho) / (q * q) + 3.0 * rho / q + 1.0);
          return std::sqrt(second);
        } else {
          return piecewise_moments(*this, fam).scale;
        }
      },
      family_);
}

std::vector<double> DensitySpec::breakpoints_in(double lo, double hi) const {
  std::vector<double> out;
  std::visit(
      [&](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Laplace>) {
          if (fam.location > lo && fam.location < hi)
            out.push_back(fam.location);
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          // smooth everywhere
        } else if constexpr (std::is_same_v<T, Uniform>) {
          if (fam.lo > lo && fam.lo < hi) out.push_back(fam.lo);
          if (fam.hi > lo && fam.hi < hi) out.push_back(fam.hi);
        } else if constexpr (std::is_same_v<T, Staircase>) {
          const double a = fam.half_width;
          long k = static_cast<long>(std::ceil(lo / a));
          const long k_hi = static_cast<long>(std::floor(hi / a));
          for (; k <= k_hi && out.size() < 100000; ++k) {
            const double z = k * a;
            if (z > lo && z < hi) out.push_back(z);
          }
        } else {
          for (const Segment& s : fam.segments) {
            if (std::isfinite(s.lo) && s.lo > lo && s.lo < hi)
              out.push_back(s.lo);
            if (std::isfinite(s.hi) && s.hi > lo && s.hi < hi)
              out.push_back(s.hi);
          }
        }
      },
      family_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double DensitySpec::default_tau_zero() const {
  return std::holds_alternative<Piecewise>(family_) ? 1e-300 : 0.0;
}

const char* DensitySpec::family_name() const {
  return std::visit(
      [](const auto& fam) -> const char* {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Laplace>) return "laplace";
        else if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
        else if constexpr (std::is_same_v<T, Uniform>) return "uniform";
        else if constexpr (std::is_same_v<T, Staircase>) return "staircase";
        else return "piecewise";
      },
      family_);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

double bound_from_json(const nlohmann::json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw std::invalid_argument("density JSON: field '" + field +
                              "' must be a number or \"inf\"/\"-inf\"");
}

double num_field(const nlohmann::json& params, const std::string& field) {
  if (!params.contains(field))
    throw std::invalid_argument("density JSON: missing field 'params." +
                                field + "'");
  if (!params[field].is_number())
    throw std::invalid_argument("density JSON: field 'params." + field +
                                "' must be a number");
  return params[field].get<double>();
}

}  // namespace

nlohmann::json DensitySpec::to_json() const {
  nlohmann::json j;
  j["family"] = family_name();
  std::visit(
      [&](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Laplace>) {
          j["params"] = {{"location", fam.location}, {"scale", fam.scale}};
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          j["params"] = {{"mean", fam.mean}, {"stddev", fam.stddev}};
        } else if constexpr (std::is_same_v<T, Uniform>) {
          j["params"] = {{"lo", fam.lo}, {"hi", fam.hi}};
        } else if constexpr (std::is_same_v<T, Staircase>) {
          j["params"] = {{"ratio", fam.ratio}, {"half_width", fam.half_width}};
        } else {
          nlohmann::json segs = nlohmann::json::array();
          for (const Segment& s : fam.segments)
            segs.push_back({{"lo", bound_to_json(s.lo)},
                            {"hi", bound_to_json(s.hi)},
                            {"expr", s.expr.to_string()}});
          j["segments"] = std::move(segs);
        }
      },
      family_);
  return j;
}

DensitySpec DensitySpec::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
    throw std::invalid_argument("density JSON: missing field 'family'");
  const std::string family = j["family"].get<std::string>();

  if (family == "piecewise") {
    if (!j.contains("segments") || !j["segments"].is_array())
      throw std::invalid_argument("density JSON: missing field 'segments'");
    std::vector<Segment> segments;
    for (const auto& js : j["segments"]) {
      if (!js.contains("lo") || !js.contains("hi") || !js.contains("expr"))
        throw std::invalid_argument(
            "density JSON: each segment needs fields 'lo', 'hi', 'expr'");
      if (!js["expr"].is_string())
        throw std::invalid_argument(
            "density JSON: field 'segments[].expr' must be a string");
      segments.push_back(Segment{bound_from_json(js["lo"], "segments[].lo"),
                                 bound_from_json(js["hi"], "segments[].hi"),
                                 Expr::parse(js["expr"].get<std::string>())});
    }
    return piecewise(std::move(segments));
  }

  if (!j.contains("params") || !j["params"].is_object())
    throw std::invalid_argument("density JSON: missing field 'params'");
  const nlohmann::json& p = j["params"];
  if (family == "laplace")
    return laplace(num_field(p, "location"), num_field(p, "scale"));
  if (family == "gaussian")
    return gaussian(num_field(p, "mean"), num_field(p, "stddev"));
  if (family == "uniform") return uniform(num_field(p, "lo"), num_field(p, "hi"));
  if (family == "staircase")
    return staircase(num_field(p, "ratio"), num_field(p, "half_width"));
  throw std::invalid_argument("density JSON: unknown family '" + family + "'");
}

// ---------------------------------------------------------------------------
// EvalGrid

EvalGrid::EvalGrid(double lo_, double hi_, double step_, double budget)
    : lo(lo_), hi(hi_), step(step_), tail_mass_budget(budget) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
          "grid: needs finite lo < hi");
  require(step > 0 && step <= hi - lo, "grid: step must be in (0, hi-lo]");
  require(budget >= 0, "grid: tail_mass_budget must be >= 0");
}

EvalGrid EvalGrid::default_for(const DensitySpec& spec) {
  const double mean = spec.mean_hint();
  const double scale = spec.scale_hint();
  double lo = mean - 40.0 * scale;
  double hi = mean + 40.0 * scale;
  if (const auto* pw = spec.get_if<DensitySpec::Piecewise>()) {
    // Never truncate the finite segment structure.
    for (const auto& s : pw->segments) {
      if (std::isfinite(s.lo)) lo = std::min(lo, s.lo - scale);
      if (std::isfinite(s.hi)) hi = std::max(hi, s.hi + scale);
    }
  }
  return EvalGrid(lo, hi, (hi - lo) / 8192.0);
}

std::size_t EvalGrid::point_count() const {
  return static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9)) + 1;
}

double EvalGrid::point(std::size_t i) const {
  return std::min(lo + static_cast<double>(i) * step, hi);
}

// ---------------------------------------------------------------------------
// Mass

double eval_density(const DensitySpec& spec, double z) {
  return spec.density(z);
}

double total_mass(const DensitySpec& spec, const EvalGrid& grid) {
  const auto cuts = spec.breakpoints_in(grid.lo, grid.hi);
  auto f = [&](double z) { return spec.density(z); };
  double mass = integrate_with_breakpoints(f, grid.lo, grid.hi, cuts);
  if (spec.has_closed_form_cdf())
    mass += spec.cdf(grid.lo) + (1.0 - spec.cdf(grid.hi));
  return mass;
}

void check_mass(const DensitySpec& spec, const EvalGrid& grid,
                double tau_mass) {
  const double mass = total_mass(spec, grid);
  if (std::fabs(mass - 1.0) > tau_mass) {
    std::ostringstream msg;
    msg << "density mass check failed: total mass " << mass
        << " deviates from 1 by " << std::fabs(mass - 1.0) << " (tolerance "
        << tau_mass << ")";
    throw std::runtime_error(msg.str());
  }
}

double mass_between(const DensitySpec& spec, double a, double b) {
  if (b <= a) return 0.0;
  if (spec.has_closed_form_cdf()) return spec.cdf(b) - spec.cdf(a);
  const auto cuts = spec.breakpoints_in(a, b);
  return integrate_with_breakpoints(
      [&](double z) { return spec.density(z); }, a, b, cuts);
}

// ---------------------------------------------------------------------------
// Zero set

namespace {

std::vector<double> scan_points(const DensitySpec& spec, const EvalGrid& grid) {
  std::vector<double> pts;
  const std::size_t n = grid.point_count();
  pts.reserve(n + 64);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(grid.point(i));
  for (double b : spec.breakpoints_in(grid.lo, grid.hi)) pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Boundary of the zero region between a non-zero point and a zero point.
double refine_zero_boundary(const DensitySpec& spec, double tau,
                            double nonzero_at, double zero_at) {
  auto is_zero = [&](double z) {
    return tau <= 0.0 ? std::isinf(spec.log_density(z)) : spec.density(z) <= tau;
  };
  double a = nonzero_at;
  double b = zero_at;
  for (int i = 0; i < 80 && std::fabs(b - a) > 0; ++i) {
    const double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    if (is_zero(m))
      b = m;
    else
      a = m;
  }
  return b;
}

}  // namespace

ZeroSet zero_set(const DensitySpec& spec, const EvalGrid& grid,
                 double tau_zero) {
  auto is_zero = [&](double z) {
    return tau_zero <= 0.0 ? std::isinf(spec.log_density(z))
                           : spec.density(z) <= tau_zero;
  };

  const std::vector<double> pts = scan_points(spec, grid);
  std::vector<char> zero(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) zero[i] = is_zero(pts[i]);

  ZeroSet out;
  std::size_t i = 0;
  while (i < pts.size()) {
    if (!zero[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < pts.size() && zero[j + 1]) ++j;

    const double left =
        i == 0 ? pts.front()
               : refine_zero_boundary(spec, tau_zero, pts[i - 1], pts[i]);
    const double right =
        j + 1 == pts.size()
            ? pts.back()
            : refine_zero_boundary(spec, tau_zero, pts[j + 1], pts[j]);
    const double len = std::max(right - left, 0.0);
    if (len < grid.step) {
      out.acnode_count += 1;
      out.acnodes.push_back(0.5 * (left + right));
    } else {
      out.intervals.push_back({left, right});
      out.total_measure += len;
    }
    i = j + 1;
  }
  return out;
}

ZeroSet zero_set(const DensitySpec& spec, const EvalGrid& grid) {
  return zero_set(spec, grid, spec.default_tau_zero());
}

nlohmann::json ZeroSet::to_json() const {
  nlohmann::json j;
  j["total_measure"] = total_measure;
  j["acnode_count"] = acnode_count;
  j["acnodes"] = acnodes;
  nlohmann::json ivs = nlohmann::json::array();
  for (const Interval& iv : intervals) ivs.push_back({iv.lo, iv.hi});
  j["intervals"] = std::move(ivs);
  return j;
}

// ---------------------------------------------------------------------------
// Sampling

DensitySampler::DensitySampler(const DensitySpec& spec)
    : DensitySampler(spec, EvalGrid::default_for(spec)) {}

DensitySampler::DensitySampler(const DensitySpec& spec, const EvalGrid& grid)
    : spec_(spec) {
  if (spec_.has_closed_form_cdf()) return;

  knots_ = scan_points(spec_, grid);
  pdf_.resize(knots_.size());
  for (std::size_t i = 0; i < knots_.size(); ++i)
    pdf_[i] = spec_.density(knots_[i]);

  cdf_.resize(knots_.size());
  cdf_[0] = 0.0;
  double acc = 0.0;
  QuadratureOptions cell_opt;
  cell_opt.abs_tol = 1e-15;
  cell_opt.max_depth = 20;
  cell_opt.min_depth = 2;  // cells are already grid-fine
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    acc += integrate([&](double z) { return spec_.density(z); }, knots_[i - 1],
                     knots_[i], cell_opt);
    cdf_[i] = acc;
  }
  if (!(acc > 0))
    throw std::invalid_argument("sampler: density has no mass on the grid");
  for (double& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

double DensitySampler::draw(Rng& rng) const {
  const double u = rng.next_open_unit();
  if (spec_.has_closed_form_cdf()) return spec_.quantile(u);

  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t i1 = static_cast<std::size_t>(it - cdf_.begin());
  i1 = std::clamp<std::size_t>(i1, 1, cdf_.size() - 1);
  const std::size_t i0 = i1 - 1;

  const double dx = knots_[i1] - knots_[i0];
  const double cell_mass = cdf_[i1] - cdf_[i0];
  if (!(cell_mass > 0) || !(dx > 0)) return knots_[i0];
  const double c = (u - cdf_[i0]);

  // Linear density within the cell, rescaled so its trapezoid matches the
  // actual cell mass; invert the resulting quadratic CDF.
  const double trap = 0.5 * (pdf_[i0] + pdf_[i1]) * dx;
  const double alpha = trap > 0 ? cell_mass / trap : 0.0;
  const double y0 = pdf_[i0] * alpha;
  const double y1 = pdf_[i1] * alpha;
  const double slope = (y1 - y0) / dx;

  double t;
  if (y0 <= 0.0) {
    t = slope > 0 ? std::sqrt(2.0 * c / slope) : 0.5 * dx;
  } else {
    const double e = slope * c / (y0 * y0);
    if (std::fabs(e) > 1e-7)
      t = (std::sqrt(1.0 + 2.0 * e) - 1.0) * y0 / slope;
    else
      t = (1.0 - 0.5 * e) * c / y0;  // series form when the slope is tiny
  }
  return std::clamp(knots_[i0] + t, knots_[i0], knots_[i1]);
}

double draw(const DensitySpec& spec, Rng& rng) {
  if (spec.has_closed_form_cdf()) return spec.quantile(rng.next_open_unit());
  return DensitySampler(spec).draw(rng);
}

// ---------------------------------------------------------------------------
// Standard normal quantile, Wichura's AS 241 (PPND16).

double standard_normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "standard_normal_quantile: p must be in (0,1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0 ? -x : x;
}

}  // namespace dpnoise
