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

#include "sslvi/gradcheck.hpp"

#include <set>

#include <gtest/gtest.h>

namespace sslvi {
namespace {

class GradCheckSuite : public ::testing::TestWithParam<GradCheckCase> {};

TEST_P(GradCheckSuite, AnalyticGradientMatchesCentralDifferences) {
  const auto outcome = check_elbo_gradient(GetParam());
  EXPECT_TRUE(outcome.passed) << ToJson(outcome).dump();
  ASSERT_EQ(outcome.groups.size(), 4u);
  for (const auto& g : outcome.groups) {
    EXPECT_LT(g.max_rel_error, kGradCheckTolerance) << g.group;
  }
}

INSTANTIATE_TEST_SUITE_P(Default, GradCheckSuite,
                         ::testing::ValuesIn(default_gradcheck_suite(2024)),
                         [](const auto& info) {
                           std::string s = info.param.Label();
                           for (auto& ch : s) {
                             if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
                           }
                           return s + "_" + std::to_string(info.index);
                         });

TEST(GradCheck, SuiteCoversAtLeastTenConfigurations) {
  const auto suite = default_gradcheck_suite(1);
  EXPECT_GE(suite.size(), 10u);
  std::set<std::string> labels;
  for (const auto& c : suite) labels.insert(c.Label());
  EXPECT_EQ(labels.size(), suite.size());
}

TEST(GradCheck, DetectsCorruptedGradient) {
  GradCheckCase c;
  c.seed = 3;
  const auto outcome = check_elbo_gradient(c, kGradCheckTolerance, [](Eigen::VectorXd* g) {
    (*g)[0] += 1.0 + std::abs((*g)[0]);
  });
  EXPECT_FALSE(outcome.passed);
  EXPECT_EQ(outcome.groups.front().group, "mu");
  EXPECT_GT(outcome.groups.front().max_rel_error, kGradCheckTolerance);
  EXPECT_EQ(outcome.groups.front().worst_index, 0u);
}

TEST(GradCheck, OutcomeJsonCarriesGroups) {
  GradCheckCase c;
  c.seed = 4;
  const auto j = ToJson(check_elbo_gradient(c));
  EXPECT_TRUE(j.at("passed").get<bool>());
  EXPECT_EQ(j.at("groups").size(), 4u);
}

}  // namespace
}  // namespace sslvi
