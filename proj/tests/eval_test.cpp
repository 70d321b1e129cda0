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
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "sslvi/error.hpp"

namespace sslvi {
namespace {

// Maximum matching size; `truth` must be the larger list. Small inputs only.
std::size_t OptimalMatches(const std::vector<double>& est, const std::vector<double>& truth,
                           double tol) {
  std::vector<std::size_t> idx(truth.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t m = 0;
    for (std::size_t i = 0; i < std::min(est.size(), idx.size()); ++i) {
      m += CircularDistanceDeg(est[i], truth[idx[i]]) <= tol;
    }
    best = std::max(best, m);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

SceneResult Result(const std::string& id, std::vector<double> truth, std::vector<double> est,
                   std::size_t mics = 6) {
  SceneResult r;
  r.id = id;
  r.method = "vi";
  r.n_mics = mics;
  r.true_doas = std::move(truth);
  r.est_doas = std::move(est);
  return r;
}

LocalizationResult Cands(const std::vector<std::pair<double, double>>& doa_peak) {
  LocalizationResult r;
  for (std::size_t k = 0; k < doa_peak.size(); ++k) {
    Candidate c;
    c.k = k;
    c.doa_deg = doa_peak[k].first;
    c.peak_weight = doa_peak[k].second;
    c.mixing_level = 0.5;
    r.candidates.push_back(c);
  }
  return Rethreshold(r, 0.02, 0.1);
}

TEST(CircularDistance, WrapsAround) {
  EXPECT_DOUBLE_EQ(CircularDistanceDeg(359.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(CircularDistanceDeg(1.0, 359.0), 2.0);
  EXPECT_DOUBLE_EQ(CircularDistanceDeg(0.0, 180.0), 180.0);
  EXPECT_DOUBLE_EQ(CircularDistanceDeg(720.0, 10.0), 10.0);
}

TEST(MatchAndScore, ExactMatchIsPerfect) {
  const auto s = match_and_score({10.0, 200.0}, {200.0, 10.0}, 10.0);
  EXPECT_EQ(s.precision, 1.0);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.f_measure, 1.0);
}

TEST(MatchAndScore, EmptyEstimatesScoreZero) {
  const auto s = match_and_score({}, {0.0, 90.0}, 10.0);
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(s.f_measure, 0.0);
}

TEST(MatchAndScore, PartialRecall) {
  const auto s = match_and_score({2.0}, {0.0, 90.0}, 10.0);
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f_measure, 2.0 / 3.0);
}

TEST(MatchAndScore, EdgeConventions) {
  EXPECT_EQ(match_and_score({}, {}, 10.0).f_measure, 1.0);
  const auto fa = match_and_score({40.0}, {}, 10.0);
  EXPECT_EQ(fa.precision, 0.0);
  EXPECT_EQ(fa.f_measure, 0.0);
  EXPECT_EQ(match_and_score({359.0}, {3.0}, 4.0).matches, 1u);
  EXPECT_EQ(match_and_score({350.0}, {5.0}, 10.0).matches, 0u);
  EXPECT_EQ(match_and_score({5.0}, {5.0}, 0.0).matches, 1u);
  EXPECT_THROW(match_and_score({}, {}, -1.0), ContractError);
}

TEST(MatchAndScore, EachTruthMatchedOnce) {
  const auto s = match_and_score({88.0, 92.0, 90.0}, {90.0}, 10.0);
  EXPECT_EQ(s.matches, 1u);
  EXPECT_DOUBLE_EQ(s.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
}

TEST(MatchAndScore, RandomPropertiesAgainstOptimalMatching) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> az(0.0, 360.0);
  std::uniform_int_distribution<int> n(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> est(n(rng)), truth(n(rng));
    for (auto& v : est) v = az(rng);
    for (auto& v : truth) v = az(rng);
    const double tol = 30.0;
    const auto s = match_and_score(est, truth, tol);
    EXPECT_LE(s.matches, std::min(est.size(), truth.size()));
    EXPECT_LE(s.matches, est.size() <= truth.size() ? OptimalMatches(est, truth, tol)
                                                    : OptimalMatches(truth, est, tol));
    for (double v : {s.precision, s.recall, s.f_measure}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (s.precision + s.recall > 0) {
      EXPECT_NEAR(s.f_measure, 2 * s.precision * s.recall / (s.precision + s.recall), 1e-15);
    }
    auto shuffled = est;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(match_and_score(shuffled, truth, tol).f_measure, s.f_measure);
  }
}

TEST(CountAccuracy, Fractions) {
  std::vector<SceneResult> all;
  for (int i = 0; i < 10; ++i) all.push_back(Result("s", {0.0, 90.0}, {1.0, 91.0}));
  EXPECT_DOUBLE_EQ(count_accuracy(all), 1.0);
  for (int i = 0; i < 5; ++i) all[i].est_doas.push_back(200.0);
  EXPECT_DOUBLE_EQ(count_accuracy(all), 0.5);
  EXPECT_THROW(count_accuracy({}), ContractError);
}

TEST(Evaluate, AggregatesPerMethodAndCondition) {
  std::vector<SceneResult> rs{Result("a", {0.0, 90.0}, {0.0, 90.0}, 4),
                              Result("b", {0.0, 90.0}, {0.0}, 4),
                              Result("c", {0.0, 90.0, 180.0}, {0.0, 90.0, 180.0}, 6)};
  rs.push_back(rs[0]);
  rs.back().method = "srp";
  rs.back().est_doas = {45.0};
  const auto rep = evaluate(rs, 10.0);
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_EQ(rep.overall.at("vi").scenes, 3u);
  EXPECT_NEAR(rep.overall.at("vi").f_measure, (1.0 + 2.0 / 3.0 + 1.0) / 3.0, 1e-12);
  EXPECT_NEAR(rep.overall.at("vi").count_rate, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.by_condition.at({"vi", "M=4,L=2"}).f_measure, (1.0 + 2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_EQ(rep.by_condition.at({"vi", "M=6,L=3"}).scenes, 1u);
  EXPECT_EQ(rep.overall.at("srp").f_measure, 0.0);

  const auto j = ToJson(rep);
  EXPECT_EQ(j.at("scenes").size(), 4u);
  EXPECT_EQ(j.at("by_condition").at("vi").at("M=4,L=2").at("scenes"), 2);
  const auto csv = ToCsv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "scene,method,M,L,P,R,F,count_ok");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(SweepThreshold, SingleThresholdReturnsIt) {
  auto r = Result("a", {0.0}, {});
  r.candidates = Cands({{0.0, 0.3}});
  const auto sw = sweep_threshold({r}, {0.25}, 10.0);
  EXPECT_EQ(sw.best_threshold, 0.25);
  EXPECT_EQ(sw.best_f, 1.0);
  EXPECT_THROW(sweep_threshold({r}, {}, 10.0), ContractError);
}

TEST(SweepThreshold, MatchesDirectRescoring) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> az(0.0, 360.0), pk(0.0, 0.6);
  std::vector<SceneResult> rs;
  for (int i = 0; i < 30; ++i) {
    std::vector<std::pair<double, double>> c;
    for (int k = 0; k < 4; ++k) c.emplace_back(az(rng), pk(rng));
    auto r = Result("s", {c[0].first + 3.0, c[1].first - 4.0}, {});
    r.candidates = Cands(c);
    rs.push_back(r);
  }
  std::vector<double> grid;
  for (double w = 0.0; w <= 0.6; w += 0.05) grid.push_back(w);
  const auto sw = sweep_threshold(rs, grid, 10.0);
  ASSERT_EQ(sw.f_by_threshold.size(), grid.size());
  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double total = 0.0;
    for (const auto& r : rs) {
      std::vector<double> est;
      for (const auto& c : r.candidates->candidates) {
        if (c.mixing_level > 0.02 && c.peak_weight > grid[g]) est.push_back(c.doa_deg);
      }
      total += match_and_score(est, r.true_doas, 10.0).f_measure;
    }
    EXPECT_NEAR(sw.f_by_threshold[g].second, total / rs.size(), 1e-12);
    best = std::max(best, total / rs.size());
  }
  EXPECT_NEAR(sw.best_f, best, 1e-12);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (sw.f_by_threshold[g].second == sw.best_f) {
      EXPECT_EQ(sw.best_threshold, grid[g]);
      break;
    }
  }
}

TEST(SweepThreshold, ActiveSetShrinksAsThresholdRises) {
  const auto c = Cands({{0.0, 0.05}, {90.0, 0.2}, {180.0, 0.4}, {270.0, 0.8}});
  std::size_t prev = 5;
  for (double w = 0.0; w < 1.0; w += 0.05) {
    const auto n = count_sources(Rethreshold(c, 0.02, w));
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(SceneResult, JsonRoundTrip) {
  auto r = Result("scene_0001", {10.0, 250.0}, {12.0});
  r.candidates = Cands({{12.0, 0.5}, {100.0, 0.05}});
  const auto back = SceneResultFromJson(ToJson(r));
  EXPECT_EQ(back.id, r.id);
  EXPECT_EQ(back.method, r.method);
  EXPECT_EQ(back.n_mics, 6u);
  EXPECT_EQ(back.true_doas, r.true_doas);
  EXPECT_EQ(back.est_doas, r.est_doas);
  ASSERT_TRUE(back.candidates.has_value());
  EXPECT_EQ(ToJson(*back.candidates), ToJson(*r.candidates));
}

}  // namespace
}  // namespace sslvi
