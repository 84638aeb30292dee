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

#ifndef DPNOISE_DENSITY_HPP
#define DPNOISE_DENSITY_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dpnoise/expr.hpp"
#include "dpnoise/rng.hpp"

namespace dpnoise {

// One-dimensional noise density: a parametric family or a list of
// piecewise-analytic segments. Parameters are validated at construction;
// evaluation never throws.
class DensitySpec {
 public:
  struct Laplace {
    double location;
    double scale;
    friend bool operator==(const Laplace&, const Laplace&) = default;
  };
  struct Gaussian {
    double mean;
    double stddev;
    friend bool operator==(const Gaussian&, const Gaussian&) = default;
  };
  struct Uniform {
    double lo;
    double hi;
    friend bool operator==(const Uniform&, const Uniform&) = default;
  };
  // Symmetric steps of width `half_width`; each step away from the origin
  // scales the level by `ratio` in (0,1). Strictly positive on all of R.
  struct Staircase {
    double ratio;
    double half_width;
    friend bool operator==(const Staircase&, const Staircase&) = default;
  };
  struct Segment {
    double lo;  // may be -inf
    double hi;  // may be +inf
    Expr expr;
    friend bool operator==(const Segment&, const Segment&) = default;
  };
  struct Piecewise {
    std::vector<Segment> segments;  // sorted, interiors disjoint
    friend bool operator==(const Piecewise&, const Piecewise&) = default;
  };

  static DensitySpec laplace(double location, double scale);
  static DensitySpec gaussian(double mean, double stddev);
  static DensitySpec uniform(double lo, double hi);
  static DensitySpec staircase(double ratio, double half_width);
  static DensitySpec piecewise(std::vector<Segment> segments);

  double density(double z) const;
  // log of density; -inf where the density is exactly zero. Closed forms are
  // evaluated directly in log space so deep tails do not underflow.
  double log_density(double z) const;

  bool has_closed_form_cdf() const;  // all families except Piecewise
  double cdf(double z) const;        // throws std::logic_error for Piecewise
  double quantile(double u) const;   // u in (0,1); throws for Piecewise

  // Analytic mean / spread used to pick default evaluation domains.
  // For Piecewise these are computed numerically once per call.
  double mean_hint() const;
  double scale_hint() const;

  // Discontinuity / kink candidates inside [lo, hi] (support edges, step
  // edges, segment boundaries, the Laplace apex).
  std::vector<double> breakpoints_in(double lo, double hi) const;

  // Zero threshold for grid analysis: exact zero for closed forms, a tiny
  // floor for grid-evaluated piecewise specs.
  double default_tau_zero() const;

  const char* family_name() const;
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&family_);
  }

  nlohmann::json to_json() const;
  // Throws std::invalid_argument naming the offending field.
  static DensitySpec from_json(const nlohmann::json& j);

  friend bool operator==(const DensitySpec&, const DensitySpec&) = default;

 private:
  using Family = std::variant<Laplace, Gaussian, Uniform, Staircase, Piecewise>;
  explicit DensitySpec(Family f) : family_(std::move(f)) {}

  Family family_;
};

// Evaluation window and resolution for grid-based analysis.
struct EvalGrid {
  double lo = -40.0;
  double hi = 40.0;
  double step = 80.0 / 8192.0;
  double tail_mass_budget = 1e-12;

  EvalGrid() = default;
  EvalGrid(double lo, double hi, double step, double tail_mass_budget = 1e-12);

  // [mean - 40*scale, mean + 40*scale] at 8192 steps.
  static EvalGrid default_for(const DensitySpec& spec);

  std::size_t point_count() const;
  double point(std::size_t i) const;
};

// Maximal closed intervals inside the grid domain where the density does not
// exceed tau_zero. Intervals shorter than one grid step are acnodes: counted
// and located, but excluded from the measure.
struct ZeroSet {
  struct Interval {
    double lo;
    double hi;
  };
  std::vector<Interval> intervals;
  double total_measure = 0.0;
  int acnode_count = 0;
  std::vector<double> acnodes;

  nlohmann::json to_json() const;
};

double eval_density(const DensitySpec& spec, double z);

// Quadrature mass over the grid domain plus the analytic tail mass where a
// closed-form CDF exists. Serves as the validity gate for user-supplied specs.
double total_mass(const DensitySpec& spec, const EvalGrid& grid);

// Throws std::runtime_error naming the deficit when |total_mass - 1| exceeds
// tau_mass.
void check_mass(const DensitySpec& spec, const EvalGrid& grid,
                double tau_mass = 1e-6);

ZeroSet zero_set(const DensitySpec& spec, const EvalGrid& grid,
                 double tau_zero);
ZeroSet zero_set(const DensitySpec& spec, const EvalGrid& grid);

// Mass of [a, b]: closed-form CDF difference where available, otherwise
// breakpoint-aware quadrature.
double mass_between(const DensitySpec& spec, double a, double b);

// Inverse-CDF sampler. Closed-form families invert analytically; piecewise
// specs use a tabulated CDF built once at construction. Draws are
// deterministic given the Rng state and safe to use from multiple threads.
class DensitySampler {
 public:
  explicit DensitySampler(const DensitySpec& spec);
  DensitySampler(const DensitySpec& spec, const EvalGrid& grid);

  double draw(Rng& rng) const;

 private:
  DensitySpec spec_;
  // Piecewise table: knots_, pdf_ at knots, cumulative cdf_ (cdf_.back()==1).
  std::vector<double> knots_;
  std::vector<double> pdf_;
  std::vector<double> cdf_;
};

// One sample from the density. Convenience wrapper; loops should construct a
// DensitySampler once (the piecewise table is rebuilt on every call here).
double draw(const DensitySpec& spec, Rng& rng);

// Standard normal quantile (Wichura's algorithm), accurate to double
// precision. Exposed for tests and the Gaussian sampler.
double standard_normal_quantile(double p);

}  // namespace dpnoise

#endif
