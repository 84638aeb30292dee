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

#ifndef DPNOISE_ORACLE_HPP
#define DPNOISE_ORACLE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dpnoise/analyzer.hpp"
#include "dpnoise/density.hpp"

namespace dpnoise {

// Monte-Carlo estimate of the privacy loss of the additive mechanism:
// histograms of theta and theta+sigma (the adjacent output law) on shared
// equal-width bins. Because the mechanism is additive, the adjacent law is an
// exact translate, so the same sample set feeds both histograms.
struct PrivacyProfile {
  double eps_hat = 0.0;
  std::vector<std::pair<double, double>> delta_curve;  // (eps, delta_hat)
  std::size_t n_samples = 0;
  int n_bins = 0;  // bins actually used (widen-retries may shrink this)
  int min_bin_count = 0;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  bool inconclusive = false;
  std::string note;
  // Counts in the bin pair attaining eps_hat; the binomial error bar on the
  // estimate derives from these.
  std::int64_t argmax_p_count = 0;
  std::int64_t argmax_q_count = 0;

  // Conservative step lookup on the curve: value at the largest tabulated
  // eps not exceeding the argument (delta_hat is non-increasing in eps).
  double delta_at(double eps) const;

  nlohmann::json to_json() const;
  static PrivacyProfile from_json(const nlohmann::json& j);
  void write_csv(std::ostream& out) const;  // eps,delta columns
};

struct OracleOptions {
  int min_bin_count = 20;  // bins below this (in either histogram) are
                           // excluded from eps_hat but kept for delta_hat
  int widen_retries = 3;
};

// Deterministic given the seed. Requires n_samples >= 1e5, n_bins >= 50.
PrivacyProfile estimate_profile(const DensitySpec& spec,
                                const AdjacencyParam& adj,
                                std::size_t n_samples, int n_bins,
                                std::uint64_t seed,
                                const OracleOptions& opts = {});

struct CompareReport {
  bool pass = false;
  std::string detail;
  double eps_margin = 0.0;    // bound + tol - estimate (EpsDP checks)
  double delta_margin = 0.0;  // bound + tol - estimate (EpsDeltaDP checks)
  nlohmann::json to_json() const;
};

// PASS when the empirical profile does not contradict the verdict:
// EpsDP needs eps_hat <= eps + tau_eps, EpsDeltaDP needs
// delta_hat(eps) <= delta + tau_delta. NotEpsDP / Inconclusive pass vacuously.
// Throws std::invalid_argument when the two were computed for different
// sigmas.
CompareReport compare(const PrivacyVerdict& verdict,
                      const PrivacyProfile& profile, double tau_eps = 0.05,
                      double tau_delta = 0.01);

}  // namespace dpnoise

#endif
