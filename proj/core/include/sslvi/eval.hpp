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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sslvi/inference.hpp"

namespace sslvi {

inline constexpr double kDefaultToleranceDeg = 10.0;

/// Shortest angular distance on the circle, in degrees.
double CircularDistanceDeg(double a, double b);

struct Score {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  std::size_t matches = 0;
};

/// Greedy one-to-one matching in order of increasing angular distance; a pair
/// matches when its distance is at most tol. Two empty lists score 1.
Score match_and_score(const std::vector<double>& est_doas,
                      const std::vector<double>& true_doas, double tol_deg);

/// Localization outcome of one scene and one method.
struct SceneResult {
  std::string id;
  std::string method;
  std::size_t n_mics = 0;
  std::vector<double> true_doas;
  std::vector<double> est_doas;
  /// Candidate list for methods that threshold (vi); enables re-scoring.
  std::optional<LocalizationResult> candidates;

  std::size_t true_count() const { return true_doas.size(); }
  std::size_t est_count() const { return est_doas.size(); }
};

/// Fraction of scenes whose estimated count equals the true count.
double count_accuracy(const std::vector<SceneResult>& results);

struct ScoreRow {
  std::string id;
  std::string method;
  std::size_t n_mics = 0;
  std::size_t n_true = 0;
  Score score;
  bool count_ok = false;
};

struct Aggregate {
  std::size_t scenes = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  double count_rate = 0.0;
};

struct ScoreReport {
  double tolerance_deg = kDefaultToleranceDeg;
  std::vector<ScoreRow> rows;
  /// Keyed by method.
  std::map<std::string, Aggregate> overall;
  /// Keyed by (method, "M=<m>,L=<l>").
  std::map<std::pair<std::string, std::string>, Aggregate> by_condition;
  std::vector<std::string> missing;
};

ScoreReport evaluate(const std::vector<SceneResult>& results, double tol_deg);

/// Mean per-scene F of the results after re-thresholding every candidate
/// list at w_thresh (pi threshold unchanged). Results without candidates
/// are scored as-is.
double MeanFAtThreshold(const std::vector<SceneResult>& results, double w_thresh,
                        double tol_deg);

struct SweepResult {
  double best_threshold = 0.0;
  double best_f = 0.0;
  std::vector<std::pair<double, double>> f_by_threshold;
};

/// Re-scores cached candidates at every threshold and returns the one with
/// the highest mean F (the lowest threshold on ties).
SweepResult sweep_threshold(const std::vector<SceneResult>& results,
                            const std::vector<double>& w_grid, double tol_deg);

nlohmann::json ToJson(const ScoreReport& report);
nlohmann::json ToJson(const SweepResult& sweep);
/// scene,method,M,L,P,R,F,count_ok
std::string ToCsv(const ScoreReport& report);

nlohmann::json ToJson(const SceneResult& r);
SceneResult SceneResultFromJson(const nlohmann::json& j);

}  // namespace sslvi
