// Copyright 2026 The sslvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sslvi/inference.hpp"

#include <cmath>

namespace sslvi {

std::vector<double> LocalizationResult::ActiveDoasDeg() const {
  std::vector<double> out;
  for (const auto& c : candidates) {
    if (c.active) out.push_back(c.doa_deg);
  }
  return out;
}

LocalizationResult localize(const VariationalParams& params, double pi_thresh,
                            double w_thresh) {
  params.Validate();
  const Eigen::MatrixXd indicator = params.indicator();
  const Eigen::VectorXd pibar = params.pibar();
  const double spacing = 360.0 / static_cast<double>(params.num_directions());
  LocalizationResult out;
  for (Eigen::Index k = 0; k < indicator.rows(); ++k) {
    Candidate c;
    c.k = static_cast<std::size_t>(k);
    Eigen::Index best = 0;
    for (Eigen::Index d = 1; d < indicator.cols(); ++d) {
      if (indicator(k, d) > indicator(k, best)) best = d;
    }
    c.doa_bin = static_cast<std::size_t>(best);
    c.doa_deg = static_cast<double>(best) * spacing;
    c.mixing_level = pibar[k];
    c.peak_weight = indicator(k, best);
    out.candidates.push_back(c);
  }
  return Rethreshold(out, pi_thresh, w_thresh);
}

LocalizationResult Rethreshold(const LocalizationResult& result, double pi_thresh,
                               double w_thresh) {
  LocalizationResult out = result;
  out.pi_threshold = pi_thresh;
  out.w_threshold = w_thresh;
  for (auto& c : out.candidates) {
    c.active = c.mixing_level > pi_thresh && c.peak_weight > w_thresh;
  }
  return out;
}

std::size_t count_sources(const LocalizationResult& result) {
  std::size_t n = 0;
  for (const auto& c : result.candidates) n += c.active ? 1 : 0;
  return n;
}

nlohmann::json ToJson(const LocalizationResult& result) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : result.candidates) {
    cands.push_back({{"k", c.k},
                     {"doa_bin", c.doa_bin},
                     {"doa_deg", c.doa_deg},
                     {"pi", c.mixing_level},
                     {"peak_w", c.peak_weight},
                     {"active", c.active}});
  }
  return {{"candidates", cands},
          {"thresholds", {{"pi", result.pi_threshold}, {"w", result.w_threshold}}}};
}

LocalizationResult LocalizationResultFromJson(const nlohmann::json& j) {
  LocalizationResult r;
  for (const auto& c : j.at("candidates")) {
    Candidate cand;
    cand.k = c.at("k").get<std::size_t>();
    cand.doa_deg = c.at("doa_deg").get<double>();
    cand.doa_bin = c.value("doa_bin", std::size_t{0});
    cand.mixing_level = c.at("pi").get<double>();
    cand.peak_weight = c.at("peak_w").get<double>();
    cand.active = c.at("active").get<bool>();
    r.candidates.push_back(cand);
  }
  r.pi_threshold = j.at("thresholds").at("pi").get<double>();
  r.w_threshold = j.at("thresholds").at("w").get<double>();
  return r;
}

}  // namespace sslvi
