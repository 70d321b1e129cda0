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

#include <algorithm>
#include <cmath>
#include <random>

#include "sslvi/array.hpp"
#include "sslvi/dsp.hpp"
#include "sslvi/error.hpp"

namespace sslvi {
namespace {

// A few frames of two directional sources plus white noise, restricted to
// a handful of bins so the check stays fast at D = 72.
MultichannelSpectrogram SyntheticSpectrogram(const SteeringField& field,
                                             std::size_t frames,
                                             std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, field.directions() - 1);
  const std::size_t d0 = pick(rng), d1 = pick(rng);
  MultichannelSpectrogram x(frames, field.bins(), field.mics(), 16000.0, 32, 16);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < field.bins(); ++f) {
      const Complex s0(normal(rng), normal(rng)), s1(normal(rng), normal(rng));
      for (std::size_t m = 0; m < field.mics(); ++m) {
        const auto mi = static_cast<Eigen::Index>(m);
        x.at(t, f, m) = s0 * field.vec(f, d0)[mi] + 0.7 * s1 * field.vec(f, d1)[mi] +
                        0.1 * Complex(normal(rng), normal(rng));
      }
    }
  }
  return x;
}

const char* const kGroups[] = {"mu", "log_sigma", "pibar_logits", "log_beta"};

std::size_t GroupOf(std::size_t i, std::size_t K, std::size_t D) {
  if (i < K * D) return 0;
  if (i < K * D + K) return 1;
  if (i < K * D + 2 * K) return 2;
  return 3;
}

}  // namespace

std::string GradCheckCase::Label() const {
  std::string s = "K=" + std::to_string(num_sources) + " D=" + std::to_string(directions) +
                  " M=" + std::to_string(mics);
  if (n_mc > 1) s += " n_mc=" + std::to_string(n_mc);
  if (fix_pi) s += " fix_pi";
  if (mixing != MixingEstimate::kPosteriorMean) s += " mixing=" + ToString(mixing);
  return s;
}

GradCheckOutcome check_elbo_gradient(const GradCheckCase& c, double tolerance,
                                     const GradientHook& hook) {
  SSLVI_REQUIRE(c.num_sources >= 1 && c.directions >= 2 && c.mics >= 2,
                "gradcheck: need K >= 1, D >= 2, M >= 2");
  SSLVI_REQUIRE(tolerance > 0.0, "gradcheck: tolerance must be > 0");
  std::mt19937_64 rng(c.seed);
  const auto geometry = ArrayGeometry::Circular(c.mics, 0.2);
  const std::vector<double> freqs = {500.0, 1100.0, 2300.0, 3700.0};
  const SteeringField field = build_field(geometry, DirectionGrid(c.directions), freqs);
  const MultichannelSpectrogram x = SyntheticSpectrogram(field, 6, rng);

  const std::size_t K = c.num_sources, D = c.directions;
  const auto Ki = static_cast<Eigen::Index>(K), Di = static_cast<Eigen::Index>(D);
  std::normal_distribution<double> normal(0.0, 1.0);
  VariationalParams params;
  params.mu = Eigen::MatrixXd(Ki, Di);
  for (Eigen::Index i = 0; i < params.mu.size(); ++i) params.mu(i) = 0.5 * normal(rng);
  params.log_sigma = Eigen::VectorXd(Ki);
  params.pibar_logits = Eigen::VectorXd(Ki);
  for (Eigen::Index k = 0; k < Ki; ++k) {
    params.log_sigma[k] = std::log(0.3) + 0.3 * normal(rng);
    params.pibar_logits[k] = 0.5 * normal(rng);
  }
  params.log_beta = 0.5 * normal(rng);

  std::vector<Eigen::MatrixXd> noises(static_cast<std::size_t>(c.n_mc), Eigen::MatrixXd(Ki, Di));
  for (auto& n : noises) {
    for (Eigen::Index i = 0; i < n.size(); ++i) n(i) = normal(rng);
  }

  FitConfig config;
  config.num_sources = K;
  config.n_mc = c.n_mc;
  config.fix_pi = c.fix_pi;
  config.mixing = c.mixing;
  config.band = Band{0.0, 8000.0};
  const Priors priors;

  Eigen::VectorXd analytic = elbo_gradient(x, params, priors, field, config, noises).gradient;
  if (hook) hook(&analytic);

  const Eigen::VectorXd theta = params.Flatten();
  Eigen::VectorXd numeric(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[i]));
    Eigen::VectorXd probe = theta;
    probe[i] = theta[i] + h;
    const double up =
        elbo_gradient(x, VariationalParams::Unflatten(probe, K, D), priors, field, config, noises).value;
    probe[i] = theta[i] - h;
    const double down =
        elbo_gradient(x, VariationalParams::Unflatten(probe, K, D), priors, field, config, noises).value;
    numeric[i] = (up - down) / (2.0 * h);
  }

  GradCheckOutcome out;
  out.config = c;
  std::vector<double> scale(4, 0.0), worst(4, 0.0);
  std::vector<std::size_t> where(4, 0);
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const std::size_t g = GroupOf(static_cast<std::size_t>(i), K, D);
    scale[g] = std::max(scale[g], std::abs(numeric[i]));
  }
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const std::size_t g = GroupOf(static_cast<std::size_t>(i), K, D);
    const double err = std::abs(analytic[i] - numeric[i]);
    if (err >= worst[g]) {
      worst[g] = err;
      where[g] = static_cast<std::size_t>(i);
    }
  }
  out.passed = true;
  for (std::size_t g = 0; g < 4; ++g) {
    GroupError e;
    e.group = kGroups[g];
    // A group whose gradient vanishes identically (fixed mixing levels) is
    // compared on the absolute scale.
    e.max_rel_error = worst[g] / std::max(scale[g], 1e-8);
    e.worst_index = where[g];
    e.analytic = analytic[static_cast<Eigen::Index>(where[g])];
    e.numeric = numeric[static_cast<Eigen::Index>(where[g])];
    out.passed = out.passed && e.max_rel_error < tolerance;
    out.groups.push_back(e);
  }
  return out;
}

std::vector<GradCheckCase> default_gradcheck_suite(std::uint64_t seed) {
  std::vector<GradCheckCase> suite;
  std::uint64_t n = 0;
  for (std::size_t K : {2, 4}) {
    for (std::size_t D : {12, 72}) {
      for (std::size_t M : {2, 4}) {
        GradCheckCase c;
        c.num_sources = K;
        c.directions = D;
        c.mics = M;
        c.seed = seed + n++;
        suite.push_back(c);
      }
    }
  }
  GradCheckCase mc{4, 12, 4, seed + n++, 3};
  suite.push_back(mc);
  GradCheckCase fixed{4, 12, 2, seed + n++};
  fixed.fix_pi = true;
  suite.push_back(fixed);
  GradCheckCase geo{4, 12, 4, seed + n++};
  geo.mixing = MixingEstimate::kLogExpectation;
  suite.push_back(geo);
  GradCheckCase geo72{2, 72, 2, seed + n++};
  geo72.mixing = MixingEstimate::kLogExpectation;
  suite.push_back(geo72);
  return suite;
}

nlohmann::json ToJson(const GradCheckOutcome& outcome) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : outcome.groups) {
    groups.push_back({{"group", g.group},
                      {"max_rel_error", g.max_rel_error},
                      {"worst_index", g.worst_index},
                      {"analytic", g.analytic},
                      {"numeric", g.numeric}});
  }
  return {{"config", outcome.config.Label()},
          {"seed", outcome.config.seed},
          {"passed", outcome.passed},
          {"groups", groups}};
}

}  // namespace sslvi
