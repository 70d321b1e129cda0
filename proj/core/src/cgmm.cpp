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

#include "sslvi/cgmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sslvi/error.hpp"

namespace sslvi {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void CheckInputs(const MultichannelSpectrogram& x, const MixtureState& state) {
  state.Validate();
  if (x.bins() != state.field->bins() || x.channels() != state.field->mics()) {
    throw ShapeError("cgmm: spectrogram shape does not match steering field");
  }
  if (!x.AllFinite()) throw InputError("cgmm: spectrogram has non-finite entries");
}

// Hermitian M x M matrices are handled as real vectors of length M^2: the
// diagonal, then sqrt(2) Re and sqrt(2) Im of the strict upper triangle. With
// this packing <feat(G), feat(x x^H)> = x^H G x, so quadratic forms, mixture
// SCMs and weight gradients all become real matrix products.
constexpr double kSqrt2 = 1.4142135623730951;

void PackHermitian(const Eigen::MatrixXcd& h, double* out) {
  const Eigen::Index m = h.rows();
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < m; ++i) out[n++] = h(i, i).real();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      out[n++] = kSqrt2 * h(i, j).real();
      out[n++] = kSqrt2 * h(i, j).imag();
    }
  }
}

void UnpackHermitian(const double* in, Eigen::MatrixXcd& h) {
  const Eigen::Index m = h.rows();
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < m; ++i) h(i, i) = in[n++];
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const Complex v(in[n] / kSqrt2, in[n + 1] / kSqrt2);
      n += 2;
      h(i, j) = v;
      h(j, i) = std::conj(v);
    }
  }
}

// Packed outer products v v^H for the columns of `v` (M x N), written as the
// rows of an N x M^2 matrix.
Eigen::MatrixXd PackOuterProducts(const Complex* v, Eigen::Index m, Eigen::Index n) {
  Eigen::MatrixXd out(n, m * m);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Complex* col = v + c * m;
    Eigen::Index q = 0;
    for (Eigen::Index i = 0; i < m; ++i) out(c, q++) = std::norm(col[i]);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const Complex p = col[i] * std::conj(col[j]);
        out(c, q++) = kSqrt2 * p.real();
        out(c, q++) = kSqrt2 * p.imag();
      }
    }
  }
  return out;
}

struct Accumulators {
  LikelihoodGradient* grad = nullptr;
  Tensor3* resp = nullptr;
};

// Returns the summed log-likelihood over `bins`, accumulating the weight
// gradient and responsibility mass and/or the posteriors when requested.
double Evaluate(const MultichannelSpectrogram& x, const MixtureState& state,
                const std::vector<std::size_t>& bins, Accumulators acc) {
  const std::size_t K = state.num_sources();
  const auto Ki = static_cast<Eigen::Index>(K);
  const auto M = static_cast<Eigen::Index>(x.channels());
  const auto T = static_cast<Eigen::Index>(x.frames());
  const auto D = static_cast<Eigen::Index>(state.field->directions());
  const Eigen::Index Q = M * M;
  const double m = static_cast<double>(M);

  Eigen::VectorXd identity_feat(Q);
  PackHermitian(Eigen::MatrixXcd::Identity(M, M), identity_feat.data());
  Eigen::VectorXd log_pi(Ki);
  for (Eigen::Index k = 0; k < Ki; ++k) {
    log_pi[k] = state.pi[k] > 0.0 ? std::log(state.pi[k]) : kNegInf;
  }
  const Eigen::MatrixXd weights_t = state.weights.transpose();

  std::vector<Eigen::MatrixXcd> inverse(K, Eigen::MatrixXcd(M, M));
  Eigen::MatrixXcd scratch(M, M);
  Eigen::MatrixXd inverse_feat(Q, Ki);
  Eigen::VectorXd logdet(Ki);
  Eigen::MatrixXd logp(T, Ki);
  Eigen::MatrixXd coef(T, Ki);
  Eigen::MatrixXd resid_feat(Q, Ki);
  double total = 0.0;

  for (std::size_t f : bins) {
    const Eigen::MatrixXd steer = PackOuterProducts(state.field->matrix(f).data(), M, D);
    const Eigen::MatrixXd scm_feat =
        (steer.transpose() * weights_t).colwise() + state.eps * identity_feat;
    for (std::size_t k = 0; k < K; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      UnpackHermitian(scm_feat.col(ki).data(), scratch);
      Eigen::LLT<Eigen::MatrixXcd> llt(scratch);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("cgmm: SCM of source " + std::to_string(k) +
                             " at bin " + std::to_string(f) +
                             " is not positive definite");
      }
      logdet[ki] = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
      inverse[k] = llt.solve(Eigen::MatrixXcd::Identity(M, M));
      PackHermitian(inverse[k], inverse_feat.col(ki).data());
    }

    Eigen::MatrixXcd frames(M, T);
    for (Eigen::Index t = 0; t < T; ++t) {
      frames.col(t) = x.vec(static_cast<std::size_t>(t), f);
    }
    const Eigen::MatrixXd outer = PackOuterProducts(frames.data(), M, T);
    const Eigen::MatrixXd quad = (outer * inverse_feat).cwiseMax(0.0);

    for (Eigen::Index t = 0; t < T; ++t) {
      double best = kNegInf;
      for (Eigen::Index k = 0; k < Ki; ++k) {
        const double q = quad(t, k);
        const double lambda = std::max(q / m, kPsdFloor);
        logp(t, k) = log_pi[k] - m * std::log(lambda) - logdet[k] - q / lambda;
        // d g / d S = c S^{-1} x x^H S^{-1} - S^{-1}, with c = M / q while
        // lambda is profiled and 1 / kPsdFloor once it is clamped.
        coef(t, k) = q / m > kPsdFloor ? m / q : 1.0 / kPsdFloor;
        best = std::max(best, logp(t, k));
      }
      if (!std::isfinite(best)) {
        throw NumericalError("cgmm: no component has finite log-density");
      }
      double sum = 0.0;
      for (Eigen::Index k = 0; k < Ki; ++k) {
        logp(t, k) = std::exp(logp(t, k) - best);
        sum += logp(t, k);
      }
      total += best + std::log(sum);
      for (Eigen::Index k = 0; k < Ki; ++k) {
        const double r = logp(t, k) / sum;
        logp(t, k) = r;
        if (acc.resp) acc.resp->at(static_cast<std::size_t>(t), f, static_cast<std::size_t>(k)) = r;
      }
    }
    if (!acc.grad) continue;

    const Eigen::VectorXd mass = logp.colwise().sum().transpose();
    const Eigen::MatrixXd weighted_obs = outer.transpose() * logp.cwiseProduct(coef);
    for (std::size_t k = 0; k < K; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      UnpackHermitian(weighted_obs.col(ki).data(), scratch);
      // B - r S^{-1} with B = S^{-1} (sum_t r c x x^H) S^{-1}.
      const Eigen::MatrixXcd resid =
          inverse[k] * scratch * inverse[k] - mass[ki] * inverse[k];
      PackHermitian(resid, resid_feat.col(ki).data());
    }
    acc.grad->d_weights.noalias() += resid_feat.transpose() * steer.transpose();
    acc.grad->d_log_pi += mass;
  }
  return total;
}

}  // namespace

void MixtureState::Validate() const {
  SSLVI_REQUIRE(field != nullptr, "mixture state: no steering field");
  SSLVI_REQUIRE(weights.rows() >= 1 &&
                    static_cast<std::size_t>(weights.cols()) == field->directions(),
                "mixture state: weights must be K x D");
  SSLVI_REQUIRE(pi.size() == weights.rows(), "mixture state: pi must have K entries");
  SSLVI_REQUIRE((weights.array() >= 0.0).all() && weights.allFinite(),
                "mixture state: weights must be finite and nonnegative");
  SSLVI_REQUIRE((pi.array() >= 0.0).all() && pi.sum() > 0.0 && pi.sum() <= 1.0 + 1e-9,
                "mixture state: pi must be nonnegative with 0 < sum <= 1");
  SSLVI_REQUIRE(eps > 0.0, "mixture state: eps must be > 0");
}

Eigen::MatrixXcd mixture_scm(const Eigen::VectorXd& w, const SteeringField& field,
                             std::size_t f, double eps) {
  SSLVI_REQUIRE(static_cast<std::size_t>(w.size()) == field.directions(),
                "mixture_scm: weight vector must have D entries");
  SSLVI_REQUIRE((w.array() >= 0.0).all(), "mixture_scm: negative direction weight");
  SSLVI_REQUIRE(eps >= 0.0, "mixture_scm: eps must be >= 0");
  const auto a = field.matrix(f);
  Eigen::MatrixXcd s = a * w.cast<Complex>().asDiagonal() * a.adjoint();
  s.diagonal().array() += eps;
  // Exact Hermitian symmetry; the product above leaves rounding asymmetry.
  s = (0.5 * (s + s.adjoint())).eval();
  return s;
}

double psd_ml(const Eigen::VectorXcd& x, const Eigen::MatrixXcd& s) {
  SSLVI_REQUIRE(s.rows() == s.cols() && s.rows() == x.size(),
                "psd_ml: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXcd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("psd_ml: SCM is not positive definite");
  }
  const double q = x.dot(llt.solve(x)).real();
  return std::max(q / static_cast<double>(x.size()), kPsdFloor);
}

double ComponentLogDensity(const Eigen::VectorXcd& x, const Eigen::MatrixXcd& s,
                           double lambda) {
  Eigen::LLT<Eigen::MatrixXcd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ComponentLogDensity: SCM is not positive definite");
  }
  const double m = static_cast<double>(x.size());
  const double logdet = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  const double q = x.dot(llt.solve(x)).real();
  return -m * std::log(lambda) - logdet - q / lambda;
}

double log_likelihood(const MultichannelSpectrogram& x, const MixtureState& state,
                      const Band& band) {
  CheckInputs(x, state);
  const double total = Evaluate(x, state, band.Bins(x), {});
  if (!std::isfinite(total)) throw NumericalError("log_likelihood: non-finite value");
  return total;
}

LikelihoodGradient log_likelihood_gradient(const MultichannelSpectrogram& x,
                                           const MixtureState& state,
                                           const Band& band) {
  CheckInputs(x, state);
  LikelihoodGradient out;
  out.d_weights = Eigen::MatrixXd::Zero(state.weights.rows(), state.weights.cols());
  out.d_log_pi = Eigen::VectorXd::Zero(state.weights.rows());
  out.value = Evaluate(x, state, band.Bins(x), {&out, nullptr});
  if (!std::isfinite(out.value)) {
    throw NumericalError("log_likelihood: non-finite value");
  }
  return out;
}

Tensor3 tf_responsibilities(const MultichannelSpectrogram& x,
                            const MixtureState& state) {
  CheckInputs(x, state);
  Tensor3 resp(x.frames(), x.bins(), state.num_sources());
  std::vector<std::size_t> bins(x.bins());
  for (std::size_t f = 0; f < bins.size(); ++f) bins[f] = f;
  Evaluate(x, state, bins, {nullptr, &resp});
  return resp;
}

}  // namespace sslvi
