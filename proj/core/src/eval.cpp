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

#include "sslvi/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "sslvi/error.hpp"

namespace sslvi {
namespace {

std::string ConditionKey(std::size_t m, std::size_t l) {
  return "M=" + std::to_string(m) + ",L=" + std::to_string(l);
}

void Accumulate(Aggregate* agg, const ScoreRow& row) {
  agg->scenes += 1;
  agg->precision += row.score.precision;
  agg->recall += row.score.recall;
  agg->f_measure += row.score.f_measure;
  agg->count_rate += row.count_ok ? 1.0 : 0.0;
}

void Finish(Aggregate* agg) {
  if (agg->scenes == 0) return;
  const double n = static_cast<double>(agg->scenes);
  agg->precision /= n;
  agg->recall /= n;
  agg->f_measure /= n;
  agg->count_rate /= n;
}

nlohmann::json AggregateJson(const Aggregate& a) {
  return {{"scenes", a.scenes},
          {"precision", a.precision},
          {"recall", a.recall},
          {"f_measure", a.f_measure},
          {"count_rate", a.count_rate}};
}

}  // namespace

double CircularDistanceDeg(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

Score match_and_score(const std::vector<double>& est_doas,
                      const std::vector<double>& true_doas, double tol_deg) {
  SSLVI_REQUIRE(tol_deg >= 0.0, "match_and_score: tolerance must be >= 0");
  Score s;
  if (est_doas.empty() && true_doas.empty()) {
    s.precision = s.recall = s.f_measure = 1.0;
    return s;
  }
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < est_doas.size(); ++i) {
    for (std::size_t j = 0; j < true_doas.size(); ++j) {
      const double d = CircularDistanceDeg(est_doas[i], true_doas[j]);
      if (d <= tol_deg) pairs.emplace_back(d, i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> est_used(est_doas.size(), false), true_used(true_doas.size(), false);
  for (const auto& [d, i, j] : pairs) {
    if (est_used[i] || true_used[j]) continue;
    est_used[i] = true_used[j] = true;
    ++s.matches;
  }
  const double m = static_cast<double>(s.matches);
  s.precision = est_doas.empty() ? 0.0 : m / static_cast<double>(est_doas.size());
  s.recall = true_doas.empty() ? 0.0 : m / static_cast<double>(true_doas.size());
  s.f_measure = s.precision + s.recall > 0.0
                    ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                    : 0.0;
  return s;
}

double count_accuracy(const std::vector<SceneResult>& results) {
  SSLVI_REQUIRE(!results.empty(), "count_accuracy: need at least one scene");
  std::size_t ok = 0;
  for (const auto& r : results) ok += r.est_count() == r.true_count() ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(results.size());
}

ScoreReport evaluate(const std::vector<SceneResult>& results, double tol_deg) {
  ScoreReport report;
  report.tolerance_deg = tol_deg;
  for (const auto& r : results) {
    ScoreRow row{r.id, r.method, r.n_mics, r.true_count(),
                 match_and_score(r.est_doas, r.true_doas, tol_deg),
                 r.est_count() == r.true_count()};
    Accumulate(&report.overall[r.method], row);
    Accumulate(&report.by_condition[{r.method, ConditionKey(r.n_mics, r.true_count())}], row);
    report.rows.push_back(std::move(row));
  }
  for (auto& [k, a] : report.overall) Finish(&a);
  for (auto& [k, a] : report.by_condition) Finish(&a);
  return report;
}

double MeanFAtThreshold(const std::vector<SceneResult>& results, double w_thresh,
                        double tol_deg) {
  if (results.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : results) {
    std::vector<double> est = r.est_doas;
    if (r.candidates) {
      est = Rethreshold(*r.candidates, r.candidates->pi_threshold, w_thresh).ActiveDoasDeg();
    }
    total += match_and_score(est, r.true_doas, tol_deg).f_measure;
  }
  return total / static_cast<double>(results.size());
}

SweepResult sweep_threshold(const std::vector<SceneResult>& results,
                            const std::vector<double>& w_grid, double tol_deg) {
  SSLVI_REQUIRE(!w_grid.empty(), "sweep_threshold: empty threshold grid");
  SweepResult out;
  bool first = true;
  for (double w : w_grid) {
    const double f = MeanFAtThreshold(results, w, tol_deg);
    out.f_by_threshold.emplace_back(w, f);
    if (first || f > out.best_f || (f == out.best_f && w < out.best_threshold)) {
      out.best_f = f;
      out.best_threshold = w;
      first = false;
    }
  }
  return out;
}

nlohmann::json ToJson(const ScoreReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"scene", r.id},
                    {"method", r.method},
                    {"M", r.n_mics},
                    {"L", r.n_true},
                    {"precision", r.score.precision},
                    {"recall", r.score.recall},
                    {"f_measure", r.score.f_measure},
                    {"count_ok", r.count_ok}});
  }
  nlohmann::json overall = nlohmann::json::object();
  for (const auto& [m, a] : report.overall) overall[m] = AggregateJson(a);
  nlohmann::json by = nlohmann::json::object();
  for (const auto& [key, a] : report.by_condition) by[key.first][key.second] = AggregateJson(a);
  return {{"tolerance_deg", report.tolerance_deg},
          {"overall", overall},
          {"by_condition", by},
          {"missing", report.missing},
          {"scenes", rows}};
}

nlohmann::json ToJson(const SweepResult& sweep) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& [w, f] : sweep.f_by_threshold) grid.push_back({{"w", w}, {"f_measure", f}});
  return {{"best_threshold", sweep.best_threshold}, {"best_f", sweep.best_f}, {"grid", grid}};
}

std::string ToCsv(const ScoreReport& report) {
  std::ostringstream os;
  os.precision(6);
  os << "scene,method,M,L,P,R,F,count_ok\n";
  for (const auto& r : report.rows) {
    os << r.id << ',' << r.method << ',' << r.n_mics << ',' << r.n_true << ','
       << r.score.precision << ',' << r.score.recall << ',' << r.score.f_measure << ','
       << (r.count_ok ? 1 : 0) << '\n';
  }
  return os.str();
}

nlohmann::json ToJson(const SceneResult& r) {
  nlohmann::json j = {{"id", r.id},
                      {"method", r.method},
                      {"n_mics", r.n_mics},
                      {"true_doas_deg", r.true_doas},
                      {"est_doas_deg", r.est_doas}};
  if (r.candidates) j["localization"] = ToJson(*r.candidates);
  return j;
}

SceneResult SceneResultFromJson(const nlohmann::json& j) {
  SceneResult r;
  r.id = j.at("id").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.n_mics = j.value("n_mics", std::size_t{0});
  r.true_doas = j.value("true_doas_deg", std::vector<double>{});
  r.est_doas = j.at("est_doas_deg").get<std::vector<double>>();
  if (j.contains("localization")) r.candidates = LocalizationResultFromJson(j["localization"]);
  return r;
}

}  // namespace sslvi
