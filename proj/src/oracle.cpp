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
#include <ostream>
#include <stdexcept>

namespace dpnoise {

namespace {

std::vector<std::int64_t> histogram(const std::vector<double>& samples,
                                    double offset, double lo, double width,
                                    int bins) {
  std::vector<std::int64_t> counts(bins, 0);
  for (double x : samples) {
    const double v = x + offset;
    int idx = static_cast<int>(std::floor((v - lo) / width));
    idx = std::clamp(idx, 0, bins - 1);
    counts[idx] += 1;
  }
  return counts;
}

// delta_hat(eps) over unions of bins, worst of the two adjacency directions.
double delta_at_eps(const std::vector<std::int64_t>& p,
                    const std::vector<std::int64_t>& q, double n, double eps) {
  const double ee = std::exp(eps);
  double d_pq = 0.0;
  double d_qp = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d_pq += std::max(static_cast<double>(p[i]) - ee * static_cast<double>(q[i]),
                     0.0);
    d_qp += std::max(static_cast<double>(q[i]) - ee * static_cast<double>(p[i]),
                     0.0);
  }
  return std::max(d_pq, d_qp) / n;
}

}  // namespace

double PrivacyProfile::delta_at(double eps) const {
  if (delta_curve.empty()) return 1.0;
  double value = delta_curve.front().second;
  for (const auto& [e, d] : delta_curve) {
    if (e > eps) break;
    value = d;
  }
  return value;
}

nlohmann::json PrivacyProfile::to_json() const {
  nlohmann::json j;
  j["eps_hat"] = eps_hat;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [e, d] : delta_curve) curve.push_back({e, d});
  j["delta_curve"] = std::move(curve);
  j["n_samples"] = n_samples;
  j["n_bins"] = n_bins;
  j["min_bin_count"] = min_bin_count;
  j["seed"] = seed;
  j["sigma"] = sigma;
  j["inconclusive"] = inconclusive;
  j["note"] = note;
  j["argmax_p_count"] = argmax_p_count;
  j["argmax_q_count"] = argmax_q_count;
  return j;
}

PrivacyProfile PrivacyProfile::from_json(const nlohmann::json& j) {
  PrivacyProfile p;
  p.eps_hat = j.at("eps_hat").get<double>();
  for (const auto& row : j.at("delta_curve"))
    p.delta_curve.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
  p.n_samples = j.at("n_samples").get<std::size_t>();
  p.n_bins = j.at("n_bins").get<int>();
  p.min_bin_count = j.at("min_bin_count").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.sigma = j.at("sigma").get<double>();
  p.inconclusive = j.at("inconclusive").get<bool>();
  p.note = j.value("note", std::string());
  p.argmax_p_count = j.value("argmax_p_count", std::int64_t{0});
  p.argmax_q_count = j.value("argmax_q_count", std::int64_t{0});
  return p;
}

void PrivacyProfile::write_csv(std::ostream& out) const {
  out << "eps,delta\n";
  char buf[80];
  for (const auto& [e, d] : delta_curve) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", e, d);
    out << buf;
  }
}

PrivacyProfile estimate_profile(const DensitySpec& spec,
                                const AdjacencyParam& adj,
                                std::size_t n_samples, int n_bins,
                                std::uint64_t seed,
                                const OracleOptions& opts) {
  if (n_samples < 100000)
    throw std::invalid_argument("oracle: n_samples must be >= 1e5");
  if (n_bins < 50) throw std::invalid_argument("oracle: n_bins must be >= 50");

  PrivacyProfile prof;
  prof.n_samples = n_samples;
  const int min_count = std::max(opts.min_bin_count, 1);
  prof.min_bin_count = min_count;
  prof.seed = seed;
  prof.sigma = adj.sigma;

  const DensitySampler sampler(spec);
  Rng rng(seed);
  std::vector<double> samples(n_samples);
  for (double& s : samples) s = sampler.draw(rng);

  const double sigma = adj.sigma;
  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn_it;
  const double hi = *mx_it + std::max(sigma, 0.0);
  if (!(hi > lo)) {
    prof.inconclusive = true;
    prof.note = "degenerate sample range";
    return prof;
  }

  // P counts theta against the bin edges, Q counts theta + sigma (the
  // adjacent output law) against the same edges. Widen bins when too few
  // pass the retention threshold.
  std::vector<std::int64_t> p, q;
  int bins = n_bins;
  int retained = 0;
  for (int attempt = 0;; ++attempt) {
    const double width = (hi - lo) / bins;
    p = histogram(samples, 0.0, lo, width, bins);
    q = histogram(samples, sigma, lo, width, bins);
    retained = 0;
    for (int i = 0; i < bins; ++i)
      if (p[i] >= min_count && q[i] >= min_count) ++retained;
    if (retained >= 4) break;
    if (attempt >= opts.widen_retries || bins / 2 < 8) {
      prof.inconclusive = true;
      prof.n_bins = bins;
      prof.note = "too few bins above min_bin_count after widen retries";
      return prof;
    }
    bins /= 2;
  }
  prof.n_bins = bins;

  double eps_hat = 0.0;
  for (int i = 0; i < bins; ++i) {
    if (p[i] < min_count || q[i] < min_count) continue;
    const double lr = std::fabs(std::log(static_cast<double>(p[i]) /
                                         static_cast<double>(q[i])));
    if (lr > eps_hat) {
      eps_hat = lr;
      prof.argmax_p_count = p[i];
      prof.argmax_q_count = q[i];
    }
  }
  prof.eps_hat = eps_hat;

  // Fixed ladder from 0 so comparisons at foreign eps values stay
  // conservative. Extends well past the observed loss: split-style verdicts
  // carry eps values far above eps_hat.
  const double n = static_cast<double>(n_samples);
  const double top = std::max(8.0, 1.75 * eps_hat);
  const int kCurvePoints = 64;
  for (int k = 0; k <= kCurvePoints; ++k) {
    const double e = top * k / kCurvePoints;
    prof.delta_curve.emplace_back(e, delta_at_eps(p, q, n, e));
  }
  return prof;
}

nlohmann::json CompareReport::to_json() const {
  nlohmann::json j;
  j["pass"] = pass;
  j["detail"] = detail;
  j["eps_margin"] = eps_margin;
  j["delta_margin"] = delta_margin;
  return j;
}

CompareReport compare(const PrivacyVerdict& verdict,
                      const PrivacyProfile& profile, double tau_eps,
                      double tau_delta) {
  if (std::fabs(verdict.sigma - profile.sigma) >
      1e-12 * (1.0 + std::fabs(verdict.sigma)))
    throw std::invalid_argument(
        "compare: verdict and profile were computed for different sigmas");

  CompareReport rep;
  if (profile.inconclusive) {
    rep.pass = false;
    rep.detail = "profile inconclusive: " + profile.note;
    return rep;
  }

  switch (verdict.kind) {
    case VerdictKind::EpsDP: {
      const double bound = verdict.eps.value();
      rep.eps_margin = bound + tau_eps - profile.eps_hat;
      rep.pass = rep.eps_margin >= 0.0;
      rep.detail = rep.pass ? "eps_hat within the eps bound"
                            : "eps_hat exceeds the eps bound";
      break;
    }
    case VerdictKind::EpsDeltaDP: {
      const double eps_bound = verdict.eps.value();
      const double delta_bound = verdict.delta.value();
      const double est = profile.delta_at(eps_bound);
      rep.delta_margin = delta_bound + tau_delta - est;
      rep.pass = rep.delta_margin >= 0.0;
      rep.detail = rep.pass ? "delta_hat(eps) within the delta bound"
                            : "delta_hat(eps) exceeds the delta bound";
      break;
    }
    case VerdictKind::NotEpsDP:
    case VerdictKind::Inconclusive:
      rep.pass = true;
      rep.detail = "no bound claimed; nothing to contradict";
      rep.eps_margin = profile.eps_hat;
      break;
  }
  return rep;
}

}  // namespace dpnoise
