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

#include "dpnoise/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"

using dpnoise::AdjacencyParam;
using dpnoise::DensitySpec;
using dpnoise::EvalGrid;
using dpnoise::OracleOptions;
using dpnoise::PrivacyProfile;
using dpnoise::PrivacyVerdict;
using dpnoise::VerdictKind;

namespace {

constexpr std::uint64_t kSeed = 12345678;

OracleOptions tight_retention() {
  // The max-of-log-ratios statistic needs well-populated bins; tail bins at
  // the default threshold dominate it with pure Poisson noise.
  OracleOptions opts;
  opts.min_bin_count = 20000;
  return opts;
}

}  // namespace

TEST_SUITE_BEGIN("oracle");

TEST_CASE("Laplace privacy loss is recovered from samples") {
  // analytic loss is exactly sigma/b = 1; the histogram estimate approaches
  // it from below with binning bias
  const PrivacyProfile prof =
      dpnoise::estimate_profile(DensitySpec::laplace(0, 1), AdjacencyParam(1.0),
                                1000000, 200, kSeed, tight_retention());
  CHECK_FALSE(prof.inconclusive);
  CHECK(prof.eps_hat >= 0.85);
  CHECK(prof.eps_hat <= 1.02);
}

TEST_CASE("uniform delta at eps=0 is the support overhang") {
  // brute force: the event [1, 1.1] has P-mass sigma and Q-mass 0.
  // The union-of-bins statistic picks up a small positive term from per-bin
  // Poisson noise over the overlap region; it shrinks with wider bins.
  const PrivacyProfile coarse =
      dpnoise::estimate_profile(DensitySpec::uniform(0, 1), AdjacencyParam(0.1),
                                1000000, 50, kSeed);
  CHECK(std::fabs(coarse.delta_at(0.0) - 0.1) <= 0.005);

  const PrivacyProfile fine =
      dpnoise::estimate_profile(DensitySpec::uniform(0, 1), AdjacencyParam(0.1),
                                1000000, 200, kSeed);
  CHECK(std::fabs(fine.delta_at(0.0) - 0.1) <= 0.01);
}

TEST_CASE("sigma = 0 stays at the noise floor") {
  const PrivacyProfile prof =
      dpnoise::estimate_profile(DensitySpec::laplace(0, 1), AdjacencyParam(0.0),
                                1000000, 200, kSeed);
  CHECK(prof.eps_hat < 0.05);
}

TEST_CASE("delta curve is non-increasing in eps") {
  for (const DensitySpec& spec :
       {DensitySpec::laplace(0, 1), DensitySpec::uniform(0, 1),
        DensitySpec::gaussian(0, 1), DensitySpec::staircase(0.5, 1)}) {
    CAPTURE(spec.family_name());
    const PrivacyProfile prof = dpnoise::estimate_profile(
        spec, AdjacencyParam(0.5), 200000, 100, kSeed);
    for (std::size_t i = 1; i < prof.delta_curve.size(); ++i) {
      CHECK(prof.delta_curve[i].first > prof.delta_curve[i - 1].first);
      CHECK(prof.delta_curve[i].second <= prof.delta_curve[i - 1].second + 1e-15);
    }
    for (const auto& [e, d] : prof.delta_curve) {
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
  }
}

TEST_CASE("profiles are bit-identical given the seed") {
  const DensitySpec spec = DensitySpec::staircase(0.5, 1);
  const PrivacyProfile a =
      dpnoise::estimate_profile(spec, AdjacencyParam(1.0), 200000, 100, 777);
  const PrivacyProfile b =
      dpnoise::estimate_profile(spec, AdjacencyParam(1.0), 200000, 100, 777);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("doubling the sample count moves eps_hat within its error bar") {
  const DensitySpec spec = DensitySpec::laplace(0, 1);
  const auto opts = tight_retention();
  const PrivacyProfile small = dpnoise::estimate_profile(
      spec, AdjacencyParam(1.0), 1000000, 200, kSeed, opts);
  OracleOptions opts2 = opts;
  opts2.min_bin_count = 2 * opts.min_bin_count;  // same bin-population level
  const PrivacyProfile big = dpnoise::estimate_profile(
      spec, AdjacencyParam(1.0), 2000000, 200, kSeed, opts2);
  const double se =
      std::sqrt(1.0 / static_cast<double>(small.argmax_p_count) +
                1.0 / static_cast<double>(small.argmax_q_count));
  CHECK(std::fabs(big.eps_hat - small.eps_hat) <= 3.0 * se);
}

TEST_CASE("estimator preconditions and the widen-retry path") {
  const DensitySpec spec = DensitySpec::laplace(0, 1);
  CHECK_THROWS_AS(dpnoise::estimate_profile(spec, AdjacencyParam(1.0), 1000,
                                            200, kSeed),
                  std::invalid_argument);
  CHECK_THROWS_AS(dpnoise::estimate_profile(spec, AdjacencyParam(1.0), 200000,
                                            10, kSeed),
                  std::invalid_argument);

  // an absurd retention threshold exhausts the widen retries
  OracleOptions opts;
  opts.min_bin_count = 1 << 30;
  const PrivacyProfile prof = dpnoise::estimate_profile(
      spec, AdjacencyParam(1.0), 200000, 100, kSeed, opts);
  CHECK(prof.inconclusive);
}

TEST_CASE("analyzer bounds are never contradicted by samples") {
  // soundness sweep: every EpsDP verdict must dominate the empirical loss
  const auto opts = tight_retention();
  for (double sigma : {0.1, 0.5, 1.0}) {
    for (double b : {0.5, 1.0, 2.0}) {
      const DensitySpec spec = DensitySpec::laplace(0, b);
      const PrivacyVerdict v = dpnoise::classify_eps_dp(
          spec, AdjacencyParam(sigma), EvalGrid::default_for(spec));
      REQUIRE(v.kind == VerdictKind::EpsDP);
      const PrivacyProfile prof = dpnoise::estimate_profile(
          spec, AdjacencyParam(sigma), 1000000, 200, kSeed, opts);
      CAPTURE(sigma);
      CAPTURE(b);
      CHECK(dpnoise::compare(v, prof).pass);
    }
    for (double rho : {0.2, 0.5, 0.9}) {
      const DensitySpec spec = DensitySpec::staircase(rho, 1.0);
      const PrivacyVerdict v = dpnoise::classify_eps_dp(
          spec, AdjacencyParam(sigma), EvalGrid::default_for(spec));
      REQUIRE(v.kind == VerdictKind::EpsDP);
      const PrivacyProfile prof = dpnoise::estimate_profile(
          spec, AdjacencyParam(sigma), 1000000, 200, kSeed, opts);
      CAPTURE(sigma);
      CAPTURE(rho);
      CHECK(dpnoise::compare(v, prof).pass);
    }
  }
}

TEST_CASE("compare: verdicts against profiles") {
  const DensitySpec lap = DensitySpec::laplace(0, 1);
  const PrivacyVerdict v_lap = dpnoise::classify_eps_dp(
      lap, AdjacencyParam(1.0), EvalGrid::default_for(lap));
  const PrivacyProfile p_lap = dpnoise::estimate_profile(
      lap, AdjacencyParam(1.0), 1000000, 200, kSeed, tight_retention());
  const auto rep = dpnoise::compare(v_lap, p_lap);
  CHECK(rep.pass);
  CHECK(rep.eps_margin >= 0.0);

  const DensitySpec uni = DensitySpec::uniform(0, 1);
  const PrivacyVerdict v_uni = dpnoise::classify_eps_dp(
      uni, AdjacencyParam(0.1), EvalGrid::default_for(uni));
  const PrivacyProfile p_uni = dpnoise::estimate_profile(
      uni, AdjacencyParam(0.1), 1000000, 200, kSeed);
  CHECK(dpnoise::compare(v_uni, p_uni).pass);

  // NotEpsDP claims no bound, so nothing can contradict it
  const DensitySpec gauss = DensitySpec::gaussian(0, 1);
  const PrivacyVerdict v_g = dpnoise::classify_eps_dp(
      gauss, AdjacencyParam(1.0), EvalGrid::default_for(gauss));
  const PrivacyProfile p_g = dpnoise::estimate_profile(
      gauss, AdjacencyParam(1.0), 200000, 100, kSeed);
  CHECK(dpnoise::compare(v_g, p_g).pass);

  // mismatched sigmas are rejected outright
  CHECK_THROWS_AS(dpnoise::compare(v_lap, p_uni), std::invalid_argument);

  // a deliberately understated bound fails the comparison
  PrivacyVerdict lowball = v_lap;
  lowball.eps = 0.5;
  CHECK_FALSE(dpnoise::compare(lowball, p_lap).pass);
}

TEST_CASE("profile json and csv round trip") {
  const PrivacyProfile prof = dpnoise::estimate_profile(
      DensitySpec::laplace(0, 1), AdjacencyParam(1.0), 200000, 100, kSeed);
  const PrivacyProfile back = PrivacyProfile::from_json(prof.to_json());
  CHECK(back.to_json().dump() == prof.to_json().dump());

  std::ostringstream csv;
  prof.write_csv(csv);
  const std::string text = csv.str();
  CHECK(text.rfind("eps,delta\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') ==
        static_cast<long>(prof.delta_curve.size()) + 1);
}

TEST_SUITE_END();
