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
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sslvi/array.hpp"
#include "sslvi/cgmm.hpp"
#include "sslvi/dsp.hpp"
#include "sslvi/error.hpp"

namespace sslvi {

/// Parameters of q(W) = prod LogNormal(mu_kd, sigma_k^2) and
/// q(pi) = Dir(beta * pibar). Positive quantities are stored as logs and
/// pibar as softmax logits.
struct VariationalParams {
  Eigen::MatrixXd mu;            // K x D
  Eigen::VectorXd log_sigma;     // K
  Eigen::VectorXd pibar_logits;  // K
  double log_beta = 0.0;

  std::size_t num_sources() const { return static_cast<std::size_t>(mu.rows()); }
  std::size_t num_directions() const { return static_cast<std::size_t>(mu.cols()); }
  Eigen::VectorXd sigma() const { return log_sigma.array().exp(); }
  Eigen::VectorXd pibar() const;
  double beta() const { return std::exp(log_beta); }
  /// Row-wise softmax of mu: the normalized DoA indicator.
  Eigen::MatrixXd indicator() const;

  /// Packs [mu (row-major), log_sigma, pibar_logits, log_beta].
  Eigen::VectorXd Flatten() const;
  static VariationalParams Unflatten(const Eigen::VectorXd& v, std::size_t K,
                                     std::size_t D);
  static std::size_t FlatSize(std::size_t K, std::size_t D) { return K * D + 2 * K + 1; }

  /// Reorders components: row k of the result is row perm[k] of this.
  VariationalParams Permuted(const std::vector<std::size_t>& perm) const;

  void Validate() const;
};

/// Hyperparameters of the Dirichlet and log-normal priors.
struct Priors {
  double alpha0 = 0.01;
  double sigma0 = 1.0;
  void Validate() const;
};

enum class InitMode { kRandom, kBeamPower };

enum class MixingEstimate { kPosteriorMean, kLogExpectation };

std::string ToString(InitMode mode);
InitMode ParseInitMode(const std::string& s);
std::string ToString(MixingEstimate mode);
MixingEstimate ParseMixingEstimate(const std::string& s);

struct FitConfig {
  std::size_t num_sources = 4;
  int iters = 300;
  double lr = 1e-2;
  int n_mc = 1;
  std::uint64_t seed = 0;
  double eps = kDefaultRidge;
  InitMode init_mode = InitMode::kBeamPower;
  Band band;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// How the mixing levels enter the likelihood: the posterior mean pibar or
  /// the geometric mean exp(E_q[log pi]).
  MixingEstimate mixing = MixingEstimate::kPosteriorMean;
  /// Holds pibar at 1/K (the ablation without mixing-level inference).
  bool fix_pi = false;
  /// When false the likelihood term is dropped and only the KL terms remain.
  bool use_likelihood = true;
  /// Reuses the first iteration's noise draws at every iteration.
  bool common_random_numbers = false;
  /// Beam-power initialization: peak logit height and bump width in bins.
  double init_peak_logit = 3.0;
  double init_width_bins = 1.5;
  std::size_t init_min_separation_bins = 4;

  void Validate() const;
};

/// Reparameterized draw w_kd = exp(mu_kd + sigma_k * noise_kd).
Eigen::MatrixXd sample_w(const VariationalParams& params,
                         const Eigen::MatrixXd& noise);

/// KL[q(W) || p(W)] between the log-normal posterior and LogNormal(0, sigma0^2).
double kl_lognormal(const VariationalParams& params, const Priors& priors);

/// KL[Dir(beta * pibar) || Dir(alpha0, ..., alpha0)].
double kl_dirichlet(const Eigen::VectorXd& pibar, double beta, double alpha0);

/// Source of standard-normal K x D draws for the reparameterization.
using NoiseSource = std::function<void(Eigen::MatrixXd* noise)>;

/// Default noise source: i.i.d. N(0, 1) from a seeded 64-bit Mersenne twister.
NoiseSource GaussianNoise(std::mt19937_64* rng);

/// ELBO value and gradient for a fixed set of noise draws.
struct ElboGradient {
  double value = 0.0;
  double likelihood = 0.0;
  double kl_w = 0.0;
  double kl_pi = 0.0;
  Eigen::VectorXd gradient;  // in Flatten() layout
};

/// Exact value and gradient of the Monte-Carlo ELBO averaged over `noises`.
/// Gradients with respect to pibar are zeroed when config.fix_pi is set.
ElboGradient elbo_gradient(const MultichannelSpectrogram& x,
                           const VariationalParams& params, const Priors& priors,
                           const SteeringField& field, const FitConfig& config,
                           const std::vector<Eigen::MatrixXd>& noises);

/// Monte-Carlo ELBO estimate with config.n_mc draws from `rng`.
double elbo(const MultichannelSpectrogram& x, const VariationalParams& params,
            const Priors& priors, const SteeringField& field,
            const FitConfig& config, std::mt19937_64& rng);

/// Initial parameters per config.init_mode. sigma starts at sigma0, beta at
/// 10 K alpha0 and pibar uniform.
VariationalParams initialize(const MultichannelSpectrogram& x,
                             const SteeringField& field, const Priors& priors,
                             const FitConfig& config, std::mt19937_64& rng);

struct FitResult {
  VariationalParams params;
  std::vector<double> elbo_trace;
};

/// Raised when the ELBO becomes non-finite during fitting.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, std::vector<double> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Adam gradient ascent on the ELBO from an explicit starting point.
FitResult fit_from(const MultichannelSpectrogram& x, const SteeringField& field,
                   const Priors& priors, const FitConfig& config,
                   VariationalParams init, const NoiseSource& noise);

/// Initializes and fits with the RNG stream seeded by config.seed.
FitResult fit(const MultichannelSpectrogram& x, const SteeringField& field,
              const Priors& priors, const FitConfig& config);

/// {mu, sigma, pibar, beta, elbo_trace}.
nlohmann::json ToJson(const FitResult& result);
FitResult FitResultFromJson(const nlohmann::json& j);

}  // namespace sslvi
