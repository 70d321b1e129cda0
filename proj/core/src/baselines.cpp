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

#include "sslvi/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "sslvi/error.hpp"

namespace sslvi {
namespace {

void CheckShapes(const MultichannelSpectrogram& x, const SteeringField& field) {
  if (x.bins() != field.bins() || x.channels() != field.mics()) {
    throw ShapeError("baseline: spectrogram shape does not match steering field");
  }
}

}  // namespace

SpatialSpectrum music_spectrum(const MultichannelSpectrogram& x,
                               const SteeringField& field, std::size_t n_src,
                               const Band& band) {
  CheckShapes(x, field);
  const std::size_t M = x.channels(), D = field.directions();
  SSLVI_REQUIRE(n_src >= 1 && n_src < M, "music: need 1 <= n_src < M");
  const auto Mi = static_cast<Eigen::Index>(M);
  const auto noise_dim = static_cast<Eigen::Index>(M - n_src);
  SpatialSpectrum out{std::vector<double>(D, 0.0), "music"};
  const auto bins = band.Bins(x);
  if (bins.empty()) return out;

  Eigen::MatrixXcd scm(Mi, Mi);
  for (std::size_t f : bins) {
    scm.setZero();
    for (std::size_t t = 0; t < x.frames(); ++t) {
      scm.selfadjointView<Eigen::Lower>().rankUpdate(x.vec(t, f), 1.0);
    }
    scm = scm.selfadjointView<Eigen::Lower>();
    scm /= static_cast<double>(x.frames());
    // Eigenvalues come back ascending; the first M - n_src span the noise.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(scm);
    if (eig.info() != Eigen::Success) {
      throw NumericalError("music: eigendecomposition failed at bin " + std::to_string(f));
    }
    const Eigen::MatrixXcd noise = eig.eigenvectors().leftCols(noise_dim);
    const Eigen::MatrixXcd proj = noise.adjoint() * field.matrix(f);
    for (std::size_t d = 0; d < D; ++d) {
      const double denom =
          proj.col(static_cast<Eigen::Index>(d)).squaredNorm() / static_cast<double>(M);
      out.values[d] += 1.0 / std::max(denom, 1e-12);
    }
  }
  for (auto& v : out.values) v /= static_cast<double>(bins.size());
  return out;
}

SpatialSpectrum srp_phat(const MultichannelSpectrogram& x, const SteeringField& field,
                         const Band& band) {
  CheckShapes(x, field);
  SSLVI_REQUIRE(x.channels() >= 2, "srp_phat: need at least two channels");
  const std::size_t M = x.channels(), D = field.directions();
  SpatialSpectrum out{std::vector<double>(D, 0.0), "srp-phat"};
  Eigen::VectorXcd white(static_cast<Eigen::Index>(M));
  Eigen::VectorXcd beams(static_cast<Eigen::Index>(D));
  for (std::size_t f : band.Bins(x)) {
    const auto a = field.matrix(f);
    for (std::size_t t = 0; t < x.frames(); ++t) {
      const auto v = x.vec(t, f);
      for (Eigen::Index m = 0; m < v.size(); ++m) {
        white[m] = v[m] / std::max(std::abs(v[m]), kPhatFloor);
      }
      beams.noalias() = a.adjoint() * white;
      for (std::size_t d = 0; d < D; ++d) {
        out.values[d] += std::norm(beams[static_cast<Eigen::Index>(d)]);
      }
    }
  }
  return out;
}

std::vector<std::size_t> peak_pick(const SpatialSpectrum& s, std::size_t max_peaks,
                                   double rel_thresh) {
  SSLVI_REQUIRE(rel_thresh > 0.0 && rel_thresh <= 1.0,
                "peak_pick: rel_thresh must be in (0, 1]");
  const std::size_t n = s.values.size();
  std::vector<std::size_t> peaks;
  if (n < 3) return peaks;
  const double top = *std::max_element(s.values.begin(), s.values.end());
  for (std::size_t d = 0; d < n; ++d) {
    const double v = s.values[d];
    if (v > s.values[(d + n - 1) % n] && v > s.values[(d + 1) % n] &&
        v >= rel_thresh * top) {
      peaks.push_back(d);
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) {
    return s.values[a] > s.values[b];
  });
  if (peaks.size() > max_peaks) peaks.resize(max_peaks);
  return peaks;
}

nlohmann::json ToJson(const SpatialSpectrum& s) {
  return {{"method", s.method}, {"values", s.values}};
}

}  // namespace sslvi
