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

#ifndef DPNOISE_QUADRATURE_HPP
#define DPNOISE_QUADRATURE_HPP

#include <functional>
#include <span>

namespace dpnoise {

struct QuadratureOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_depth = 48;
  // Subdivide at least this deep before trusting the error estimate, so
  // localized mass between the initial probe points is not silently missed.
  int min_depth = 6;
};

// Adaptive Simpson on [lo, hi].
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadratureOptions& opt = {});

// Same, but with forced subdivision at the given points. Use for integrands
// with known kinks or jumps (piecewise densities, shifted supports); the
// breakpoints need not lie inside [lo, hi] nor be sorted.
double integrate_with_breakpoints(const std::function<double(double)>& f,
                                  double lo, double hi,
                                  std::span<const double> breakpoints,
                                  const QuadratureOptions& opt = {});

}  // namespace dpnoise

#endif
