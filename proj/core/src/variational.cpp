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

#include "sslvi/variational.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "sslvi/features.hpp"

namespace sslvi {
namespace {

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - top).exp();
  return e / e.sum();
}

std::size_t CircularDistance(std::size_t a, std::size_t b, std::size_t n) {
  const std::size_t d = a > b ? a - b : b - a;
  return std::min(d, n - d);
}

// Strongest well-separated local maxima of a circular profile, topped up with
// the directions farthest from every pick when there are fewer than `count`.
std::vector<std::size_t> PickInitialDirections(const std::vector<double>& profile,
                                               std::size_t count,
                                               std::size_t min_sep) {
  const std::size_t n = profile.size();
  std::vector<std::size_t> maxima;
  for (std::size_t d = 0; d < n; ++d) {
    const double l = profile[(d + n - 1) % n], r = profile[(d + 1) % n];
    if (profile[d] > l && profile[d] >= r) maxima.push_back(d);
  }
  std::stable_sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) {
    return profile[a] > profile[b];
  });
  std::vector<std::size_t> picks;
  for (std::size_t d : maxima) {
    if (picks.size() == count) break;
    const bool far = std::all_of(picks.begin(), picks.end(), [&](std::size_t p) {
      return CircularDistance(p, d, n) >= min_sep;
    });
    if (far) picks.push_back(d);
  }
  while (picks.size() < count) {
    std::size_t best = 0, best_gap = 0;
    for (std::size_t d = 0; d < n; ++d) {
      std::size_t gap = n;
      for (std::size_t p : picks) gap = std::min(gap, CircularDistance(p, d, n));
      if (gap > best_gap) {
        best_gap = gap;
        best = d;
      }
    }
    picks.push_back(best);
  }
  return picks;
}

}  // namespace

Eigen::VectorXd VariationalParams::pibar() const { return Softmax(pibar_logits); }

Eigen::MatrixXd VariationalParams::indicator() const {
  Eigen::MatrixXd out(mu.rows(), mu.cols());
  for (Eigen::Index k = 0; k < mu.rows(); ++k) {
    out.row(k) = Softmax(mu.row(k).transpose()).transpose();
  }
  return out;
}

Eigen::VectorXd VariationalParams::Flatten() const {
  const std::size_t K = num_sources(), D = num_directions();
  Eigen::VectorXd v(static_cast<Eigen::Index>(FlatSize(K, D)));
  Eigen::Index i = 0;
  for (Eigen::Index k = 0; k < mu.rows(); ++k) {
    for (Eigen::Index d = 0; d < mu.cols(); ++d) v[i++] = mu(k, d);
  }
  for (Eigen::Index k = 0; k < log_sigma.size(); ++k) v[i++] = log_sigma[k];
  for (Eigen::Index k = 0; k < pibar_logits.size(); ++k) v[i++] = pibar_logits[k];
  v[i] = log_beta;
  return v;
}

VariationalParams VariationalParams::Unflatten(const Eigen::VectorXd& v,
                                               std::size_t K, std::size_t D) {
  SSLVI_REQUIRE(static_cast<std::size_t>(v.size()) == FlatSize(K, D),
                "Unflatten: wrong vector length");
  const auto Ki = static_cast<Eigen::Index>(K), Di = static_cast<Eigen::Index>(D);
  VariationalParams p;
  p.mu.resize(Ki, Di);
  p.log_sigma.resize(Ki);
  p.pibar_logits.resize(Ki);
  Eigen::Index i = 0;
  for (Eigen::Index k = 0; k < Ki; ++k) {
    for (Eigen::Index d = 0; d < Di; ++d) p.mu(k, d) = v[i++];
  }
  for (Eigen::Index k = 0; k < Ki; ++k) p.log_sigma[k] = v[i++];
  for (Eigen::Index k = 0; k < Ki; ++k) p.pibar_logits[k] = v[i++];
  p.log_beta = v[i];
  return p;
}

VariationalParams VariationalParams::Permuted(const std::vector<std::size_t>& perm) const {
  SSLVI_REQUIRE(perm.size() == num_sources(), "Permuted: wrong permutation length");
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t k : perm) {
    SSLVI_REQUIRE(k < perm.size() && !seen[k], "Permuted: not a permutation");
    seen[k] = true;
  }
  VariationalParams p = *this;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const auto dst = static_cast<Eigen::Index>(k), src = static_cast<Eigen::Index>(perm[k]);
    p.mu.row(dst) = mu.row(src);
    p.log_sigma[dst] = log_sigma[src];
    p.pibar_logits[dst] = pibar_logits[src];
  }
  return p;
}

void VariationalParams::Validate() const {
  SSLVI_REQUIRE(mu.rows() >= 1 && mu.cols() >= 1, "params: mu must be non-empty");
  SSLVI_REQUIRE(log_sigma.size() == mu.rows() && pibar_logits.size() == mu.rows(),
                "params: per-component vectors must have K entries");
  SSLVI_REQUIRE(mu.allFinite() && log_sigma.allFinite() &&
                    pibar_logits.allFinite() && std::isfinite(log_beta),
                "params: non-finite entry");
}

void Priors::Validate() const {
  SSLVI_REQUIRE(alpha0 > 0.0, "priors: alpha0 must be > 0");
  SSLVI_REQUIRE(sigma0 > 0.0, "priors: sigma0 must be > 0");
}

std::string ToString(InitMode mode) {
  return mode == InitMode::kRandom ? "random" : "beam-power";
}

InitMode ParseInitMode(const std::string& s) {
  if (s == "random") return InitMode::kRandom;
  if (s == "beam-power" || s == "beam_power") return InitMode::kBeamPower;
  throw ContractError("unknown init mode '" + s + "'");
}

std::string ToString(MixingEstimate mode) {
  return mode == MixingEstimate::kPosteriorMean ? "mean" : "log-expectation";
}

MixingEstimate ParseMixingEstimate(const std::string& s) {
  if (s == "mean") return MixingEstimate::kPosteriorMean;
  if (s == "log-expectation" || s == "log_expectation") return MixingEstimate::kLogExpectation;
  throw ContractError("unknown mixing estimate '" + s + "'");
}

void FitConfig::Validate() const {
  SSLVI_REQUIRE(num_sources >= 1, "fit config: need at least one source class");
  SSLVI_REQUIRE(iters >= 1, "fit config: iters must be >= 1");
  SSLVI_REQUIRE(n_mc >= 1, "fit config: n_mc must be >= 1");
  SSLVI_REQUIRE(lr > 0.0, "fit config: lr must be > 0");
  SSLVI_REQUIRE(eps > 0.0, "fit config: eps must be > 0");
}

Eigen::MatrixXd sample_w(const VariationalParams& params,
                         const Eigen::MatrixXd& noise) {
  SSLVI_REQUIRE(noise.rows() == params.mu.rows() && noise.cols() == params.mu.cols(),
                "sample_w: noise must be K x D");
  SSLVI_REQUIRE(noise.allFinite(), "sample_w: noise must be finite");
  const Eigen::VectorXd sigma = params.sigma();
  Eigen::MatrixXd w(params.mu.rows(), params.mu.cols());
  for (Eigen::Index k = 0; k < w.rows(); ++k) {
    w.row(k) = (params.mu.row(k) + sigma[k] * noise.row(k)).array().exp();
  }
  return w;
}

double kl_lognormal(const VariationalParams& params, const Priors& priors) {
  const double s0sq = priors.sigma0 * priors.sigma0;
  const double D = static_cast<double>(params.num_directions());
  double kl = 0.0;
  for (Eigen::Index k = 0; k < params.mu.rows(); ++k) {
    const double sigma = std::exp(params.log_sigma[k]);
    kl += (params.mu.row(k).squaredNorm() + D * (sigma * sigma - s0sq)) / (2.0 * s0sq);
    kl += D * (std::log(priors.sigma0) - params.log_sigma[k]);
  }
  return kl;
}

double kl_dirichlet(const Eigen::VectorXd& pibar, double beta, double alpha0) {
  using boost::math::digamma;
  SSLVI_REQUIRE(beta > 0.0 && alpha0 > 0.0, "kl_dirichlet: beta and alpha0 must be > 0");
  const double K = static_cast<double>(pibar.size());
  const double total = beta * pibar.sum();
  double kl = std::lgamma(total) - std::lgamma(K * alpha0);
  const double psi_total = digamma(total);
  for (Eigen::Index k = 0; k < pibar.size(); ++k) {
    const double a = beta * pibar[k];
    SSLVI_REQUIRE(a > 0.0, "kl_dirichlet: every concentration must be > 0");
    kl -= std::lgamma(a) - std::lgamma(alpha0);
    kl += (a - alpha0) * (digamma(a) - psi_total);
  }
  return kl;
}

NoiseSource GaussianNoise(std::mt19937_64* rng) {
  return [rng](Eigen::MatrixXd* noise) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index k = 0; k < noise->rows(); ++k) {
      for (Eigen::Index d = 0; d < noise->cols(); ++d) (*noise)(k, d) = normal(*rng);
    }
  };
}

ElboGradient elbo_gradient(const MultichannelSpectrogram& x,
                           const VariationalParams& params, const Priors& priors,
                           const SteeringField& field, const FitConfig& config,
                           const std::vector<Eigen::MatrixXd>& noises) {
  using boost::math::digamma;
  using boost::math::trigamma;
  params.Validate();
  priors.Validate();
  SSLVI_REQUIRE(!noises.empty(), "elbo_gradient: need at least one noise draw");
  const std::size_t K = params.num_sources(), D = params.num_directions();
  const auto Ki = static_cast<Eigen::Index>(K);
  SSLVI_REQUIRE(D == field.directions(), "elbo_gradient: params and field disagree on D");

  const Eigen::VectorXd sigma = params.sigma();
  const Eigen::VectorXd pibar =
      config.fix_pi ? Eigen::VectorXd::Constant(Ki, 1.0 / static_cast<double>(K))
                    : params.pibar();
  const double beta = params.beta();
  const bool log_expectation =
      !config.fix_pi && config.mixing == MixingEstimate::kLogExpectation;
  Eigen::VectorXd pi_lik = pibar;
  if (log_expectation) {
    for (Eigen::Index k = 0; k < Ki; ++k) {
      pi_lik[k] = std::exp(digamma(beta * pibar[k]) - digamma(beta));
    }
  }

  Eigen::MatrixXd d_mu = Eigen::MatrixXd::Zero(Ki, static_cast<Eigen::Index>(D));
  Eigen::VectorXd d_log_sigma = Eigen::VectorXd::Zero(Ki);
  Eigen::VectorXd d_log_pi = Eigen::VectorXd::Zero(Ki);

  ElboGradient out;
  if (config.use_likelihood) {
    const double scale = 1.0 / static_cast<double>(noises.size());
    for (const auto& noise : noises) {
      MixtureState state{sample_w(params, noise), pi_lik, config.eps, &field};
      if (!state.weights.allFinite()) {
        throw NumericalError("elbo: sampled weights overflowed (max mu " +
                             std::to_string(params.mu.maxCoeff()) + ")");
      }
      const auto lg = log_likelihood_gradient(x, state, config.band);
      out.likelihood += scale * lg.value;
      // dw/dmu = w and dw/dlog_sigma = w * sigma * noise.
      const Eigen::MatrixXd dw = lg.d_weights.cwiseProduct(state.weights);
      d_mu += scale * dw;
      for (Eigen::Index k = 0; k < Ki; ++k) {
        d_log_sigma[k] += scale * sigma[k] * dw.row(k).dot(noise.row(k));
      }
      d_log_pi += scale * lg.d_log_pi;
    }
  }

  out.kl_w = kl_lognormal(params, priors);
  const double s0sq = priors.sigma0 * priors.sigma0;
  d_mu -= params.mu / s0sq;
  for (Eigen::Index k = 0; k < Ki; ++k) {
    d_log_sigma[k] -= static_cast<double>(D) * (sigma[k] * sigma[k] / s0sq - 1.0);
  }

  // Dirichlet KL in the concentrations a_k = beta * pibar_k.
  out.kl_pi = kl_dirichlet(pibar, beta, priors.alpha0);
  Eigen::VectorXd conc = beta * pibar;
  const double total = conc.sum();
  const double excess = (conc.array() - priors.alpha0).sum();
  Eigen::VectorXd d_conc(Ki);
  for (Eigen::Index k = 0; k < Ki; ++k) {
    d_conc[k] = (conc[k] - priors.alpha0) * trigamma(conc[k]) - trigamma(total) * excess;
  }
  double d_log_beta = -d_conc.dot(conc);
  Eigen::VectorXd d_pibar_lik = d_log_pi;
  if (log_expectation) {
    // log pi_k = digamma(beta pibar_k) - digamma(beta).
    Eigen::VectorXd h(Ki);
    for (Eigen::Index k = 0; k < Ki; ++k) h[k] = d_log_pi[k] * trigamma(conc[k]);
    d_log_beta += h.dot(conc) - d_log_pi.sum() * trigamma(beta) * beta;
    // Expressed as a gradient in log pibar so the softmax step below applies.
    d_pibar_lik = beta * h.cwiseProduct(pibar);
  }

  // pibar = softmax(logits): d/dlogit_j of sum_k g_k log pibar_k is
  // g_j - pibar_j sum_k g_k; for the KL, d pibar_k / d logit_j =
  // pibar_k (delta_kj - pibar_j).
  Eigen::VectorXd d_logits = Eigen::VectorXd::Zero(Ki);
  if (!config.fix_pi) {
    d_logits = d_pibar_lik - pibar * d_pibar_lik.sum();
    const double mean_kl = pibar.dot(d_conc);
    for (Eigen::Index j = 0; j < Ki; ++j) {
      d_logits[j] -= beta * pibar[j] * (d_conc[j] - mean_kl);
    }
  }

  out.value = out.likelihood - out.kl_w - out.kl_pi;
  VariationalParams g;
  g.mu = d_mu;
  g.log_sigma = d_log_sigma;
  g.pibar_logits = d_logits;
  g.log_beta = d_log_beta;
  out.gradient = g.Flatten();
  if (!std::isfinite(out.value) || !out.gradient.allFinite()) {
    throw NumericalError("elbo: non-finite value (likelihood " +
                         std::to_string(out.likelihood) + ", kl_w " +
                         std::to_string(out.kl_w) + ", kl_pi " +
                         std::to_string(out.kl_pi) + ")");
  }
  return out;
}

double elbo(const MultichannelSpectrogram& x, const VariationalParams& params,
            const Priors& priors, const SteeringField& field,
            const FitConfig& config, std::mt19937_64& rng) {
  config.Validate();
  auto source = GaussianNoise(&rng);
  std::vector<Eigen::MatrixXd> noises(static_cast<std::size_t>(config.n_mc),
                                      Eigen::MatrixXd(params.mu.rows(), params.mu.cols()));
  for (auto& n : noises) source(&n);
  return elbo_gradient(x, params, priors, field, config, noises).value;
}

VariationalParams initialize(const MultichannelSpectrogram& x,
                             const SteeringField& field, const Priors& priors,
                             const FitConfig& config, std::mt19937_64& rng) {
  config.Validate();
  priors.Validate();
  const std::size_t K = config.num_sources, D = field.directions();
  const auto Ki = static_cast<Eigen::Index>(K), Di = static_cast<Eigen::Index>(D);
  VariationalParams p;
  p.mu = Eigen::MatrixXd::Zero(Ki, Di);
  p.log_sigma = Eigen::VectorXd::Constant(Ki, std::log(priors.sigma0));
  p.pibar_logits = Eigen::VectorXd::Zero(Ki);
  p.log_beta = std::log(10.0 * static_cast<double>(K) * priors.alpha0);

  if (config.init_mode == InitMode::kRandom) {
    std::normal_distribution<double> normal(0.0, 0.1);
    for (Eigen::Index k = 0; k < Ki; ++k) {
      for (Eigen::Index d = 0; d < Di; ++d) p.mu(k, d) = normal(rng);
    }
    return p;
  }

  const auto profile = beam_power_profile(x, field, config.band);
  const auto peaks = PickInitialDirections(profile, K, config.init_min_separation_bins);
  const double width = config.init_width_bins;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t d = 0; d < D; ++d) {
      const double dist = static_cast<double>(CircularDistance(d, peaks[k], D));
      p.mu(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d)) =
          config.init_peak_logit * std::exp(-0.5 * (dist / width) * (dist / width));
    }
  }
  return p;
}

FitResult fit_from(const MultichannelSpectrogram& x, const SteeringField& field,
                   const Priors& priors, const FitConfig& config,
                   VariationalParams init, const NoiseSource& noise) {
  config.Validate();
  init.Validate();
  const std::size_t K = init.num_sources(), D = init.num_directions();
  if (config.fix_pi) init.pibar_logits.setZero();

  Eigen::VectorXd theta = init.Flatten();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  std::vector<Eigen::MatrixXd> noises(static_cast<std::size_t>(config.n_mc),
                                      Eigen::MatrixXd(init.mu.rows(), init.mu.cols()));
  FitResult result;
  result.elbo_trace.reserve(static_cast<std::size_t>(config.iters));
  double b1t = 1.0, b2t = 1.0;
  for (int it = 0; it < config.iters; ++it) {
    if (it == 0 || !config.common_random_numbers) {
      for (auto& n : noises) noise(&n);
    }
    const auto params = VariationalParams::Unflatten(theta, K, D);
    ElboGradient eg;
    try {
      eg = elbo_gradient(x, params, priors, field, config, noises);
    } catch (const NumericalError& e) {
      throw DivergenceError(std::string("fit diverged at iteration ") +
                                std::to_string(it) + ": " + e.what(),
                            result.elbo_trace);
    }
    result.elbo_trace.push_back(eg.value);
    b1t *= config.adam_beta1;
    b2t *= config.adam_beta2;
    m1 = config.adam_beta1 * m1 + (1.0 - config.adam_beta1) * eg.gradient;
    m2 = config.adam_beta2 * m2 +
         (1.0 - config.adam_beta2) * eg.gradient.cwiseAbs2();
    const Eigen::ArrayXd mhat = m1.array() / (1.0 - b1t);
    const Eigen::ArrayXd vhat = m2.array() / (1.0 - b2t);
    theta.array() += config.lr * mhat / (vhat.sqrt() + config.adam_epsilon);
  }
  result.params = VariationalParams::Unflatten(theta, K, D);
  return result;
}

FitResult fit(const MultichannelSpectrogram& x, const SteeringField& field,
              const Priors& priors, const FitConfig& config) {
  std::mt19937_64 rng(config.seed);
  auto init = initialize(x, field, priors, config, rng);
  return fit_from(x, field, priors, config, std::move(init), GaussianNoise(&rng));
}

nlohmann::json ToJson(const FitResult& result) {
  const auto& p = result.params;
  nlohmann::json mu = nlohmann::json::array();
  for (Eigen::Index k = 0; k < p.mu.rows(); ++k) {
    mu.push_back(std::vector<double>(p.mu.row(k).begin(), p.mu.row(k).end()));
  }
  const Eigen::VectorXd sigma = p.sigma(), pibar = p.pibar();
  return {{"mu", mu},
          {"sigma", std::vector<double>(sigma.begin(), sigma.end())},
          {"pibar", std::vector<double>(pibar.begin(), pibar.end())},
          {"beta", p.beta()},
          {"elbo_trace", result.elbo_trace}};
}

FitResult FitResultFromJson(const nlohmann::json& j) {
  FitResult r;
  const auto mu = j.at("mu").get<std::vector<std::vector<double>>>();
  const auto sigma = j.at("sigma").get<std::vector<double>>();
  const auto pibar = j.at("pibar").get<std::vector<double>>();
  if (mu.empty() || sigma.size() != mu.size() || pibar.size() != mu.size()) {
    throw InputError("fit result json: inconsistent component counts");
  }
  const auto K = static_cast<Eigen::Index>(mu.size());
  const auto D = static_cast<Eigen::Index>(mu.front().size());
  r.params.mu.resize(K, D);
  r.params.log_sigma.resize(K);
  r.params.pibar_logits.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    if (static_cast<Eigen::Index>(mu[k].size()) != D) {
      throw InputError("fit result json: ragged mu");
    }
    for (Eigen::Index d = 0; d < D; ++d) r.params.mu(k, d) = mu[k][d];
    r.params.log_sigma[k] = std::log(sigma[k]);
    // Logits are recovered up to an additive constant.
    r.params.pibar_logits[k] = std::log(std::max(pibar[k], 1e-300));
  }
  r.params.log_beta = std::log(j.at("beta").get<double>());
  r.elbo_trace = j.value("elbo_trace", std::vector<double>{});
  return r;
}

}  // namespace sslvi
