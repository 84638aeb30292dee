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

#include "dpnoise/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dpnoise {

namespace {

double adapt(const std::function<double(double)>& f, double a, double b,
             double fa, double fm, double fb, double whole, double tol,
             int depth, int min_depth, int max_depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth >= max_depth ||
      (depth >= min_depth && std::fabs(diff) <= 15.0 * tol))
    return left + right + diff / 15.0;
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, min_depth,
               max_depth) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, min_depth,
               max_depth);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadratureOptions& opt) {
  if (!(lo <= hi)) throw std::invalid_argument("integrate: lo > hi");
  if (lo == hi) return 0.0;
  const double m = 0.5 * (lo + hi);
  const double fa = f(lo);
  const double fm = f(m);
  const double fb = f(hi);
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  const double tol = std::max(opt.abs_tol, opt.rel_tol * std::fabs(whole));
  return adapt(f, lo, hi, fa, fm, fb, whole, tol, 0, opt.min_depth,
               opt.max_depth);
}

double integrate_with_breakpoints(const std::function<double(double)>& f,
                                  double lo, double hi,
                                  std::span<const double> breakpoints,
                                  const QuadratureOptions& opt) {
  if (!(lo <= hi)) throw std::invalid_argument("integrate: lo > hi");
  std::vector<double> cuts;
  cuts.push_back(lo);
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += integrate(f, cuts[i], cuts[i + 1], opt);
  return total;
}

}  // namespace dpnoise
