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

#ifndef SSLVI_GRADCHECK_HPP_
#define SSLVI_GRADCHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sslvi/variational.hpp"

namespace sslvi {

/// One finite-difference problem: a random K-class, D-direction, M-mic model
/// fitted against a synthetic spectrogram.
struct GradCheckCase {
  std::size_t num_sources = 2;
  std::size_t directions = 12;
  std::size_t mics = 2;
  std::uint64_t seed = 0;
  int n_mc = 1;
  bool fix_pi = false;
  MixingEstimate mixing = MixingEstimate::kPosteriorMean;

  std::string Label() const;
};

struct GroupError {
  std::string group;  // mu, log_sigma, pibar_logits, log_beta
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckOutcome {
  GradCheckCase config;
  std::vector<GroupError> groups;
  bool passed = false;
};

/// Optional tamper hook applied to the analytic gradient before comparison.
using GradientHook = std::function<void(Eigen::VectorXd*)>;

inline constexpr double kGradCheckTolerance = 1e-4;

/// Compares the analytic ELBO gradient with central differences of the
/// fixed-noise ELBO. Relative error per group is max|a - n| / max|n|.
GradCheckOutcome check_elbo_gradient(const GradCheckCase& c,
                                     double tolerance = kGradCheckTolerance,
                                     const GradientHook& hook = nullptr);

/// The default suite: every (K, D, M) in {2,4} x {12,72} x {2,4} plus
/// variants with Monte Carlo averaging, fixed mixing levels and the
/// log-expectation mixing estimate.
std::vector<GradCheckCase> default_gradcheck_suite(std::uint64_t seed);

nlohmann::json ToJson(const GradCheckOutcome& outcome);

}  // namespace sslvi

#endif  // SSLVI_GRADCHECK_HPP_
