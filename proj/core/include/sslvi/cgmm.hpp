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

#include <Eigen/Dense>

#include "sslvi/array.hpp"
#include "sslvi/dsp.hpp"
#include "sslvi/features.hpp"

namespace sslvi {

inline constexpr double kDefaultRidge = 0.01;
inline constexpr double kPsdFloor = 1e-12;

/// Parameters of the complex Gaussian mixture: direction weights w_kd >= 0
/// (K x D), mixing levels pi, and the ridge eps added to every source SCM.
/// pi normally lies on the K-simplex; a total below one is accepted so that
/// geometric-mean mixing estimates can be evaluated as-is.
struct MixtureState {
  Eigen::MatrixXd weights;
  Eigen::VectorXd pi;
  double eps = kDefaultRidge;
  const SteeringField* field = nullptr;

  std::size_t num_sources() const { return static_cast<std::size_t>(weights.rows()); }
  /// Throws ContractError when any invariant is broken.
  void Validate() const;
};

/// S_fk = sum_d w_d a_fd a_fd^H + eps I.
Eigen::MatrixXcd mixture_scm(const Eigen::VectorXd& w, const SteeringField& field,
                             std::size_t f, double eps);

/// Maximum-likelihood source power (1/M) x^H S^{-1} x, floored at kPsdFloor.
double psd_ml(const Eigen::VectorXcd& x, const Eigen::MatrixXcd& s);

/// Log-density of x under CN(0, lambda S) without the -M log(pi) constant.
double ComponentLogDensity(const Eigen::VectorXcd& x, const Eigen::MatrixXcd& s,
                           double lambda);

/// Profiled mixture log-likelihood summed over all frames and the in-band
/// bins, with lambda re-estimated per (t, f, k).
double log_likelihood(const MultichannelSpectrogram& x, const MixtureState& state,
                      const Band& band = {});

/// Likelihood together with its gradient with respect to the weights and the
/// responsibility mass sum_tf r_tfk, which is the gradient with respect to
/// log pi_k.
struct LikelihoodGradient {
  double value = 0.0;
  Eigen::MatrixXd d_weights;
  Eigen::VectorXd d_log_pi;
};
LikelihoodGradient log_likelihood_gradient(const MultichannelSpectrogram& x,
                                           const MixtureState& state,
                                           const Band& band = {});

/// Posterior T-F mask probabilities, indexed (t, f, k), for every bin.
Tensor3 tf_responsibilities(const MultichannelSpectrogram& x,
                            const MixtureState& state);

}  // namespace sslvi
