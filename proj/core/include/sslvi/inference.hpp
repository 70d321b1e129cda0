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

#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "sslvi/variational.hpp"

namespace sslvi {

inline constexpr double kDefaultPiThreshold = 0.02;
inline constexpr double kDefaultWeightThreshold = 0.1;

struct Candidate {
  std::size_t k = 0;
  std::size_t doa_bin = 0;
  double doa_deg = 0.0;
  double mixing_level = 0.0;
  double peak_weight = 0.0;
  bool active = false;
};

struct LocalizationResult {
  std::vector<Candidate> candidates;
  double pi_threshold = kDefaultPiThreshold;
  double w_threshold = kDefaultWeightThreshold;

  std::vector<double> ActiveDoasDeg() const;
};

/// Candidate k is active iff pibar_k > pi_thresh and max_d softmax(mu_k)_d >
/// w_thresh; its direction is the argmax bin, ties to the lowest index.
LocalizationResult localize(const VariationalParams& params, double pi_thresh,
                            double w_thresh);

/// Same decision rule applied to already-extracted (pibar, peak) pairs.
LocalizationResult Rethreshold(const LocalizationResult& result, double pi_thresh,
                               double w_thresh);

std::size_t count_sources(const LocalizationResult& result);

/// {candidates: [{k, doa_deg, pi, peak_w, active}], thresholds: {pi, w}}.
nlohmann::json ToJson(const LocalizationResult& result);
LocalizationResult LocalizationResultFromJson(const nlohmann::json& j);

}  // namespace sslvi
