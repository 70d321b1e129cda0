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

#include "sslvi/features.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "sslvi/error.hpp"

namespace sslvi {
namespace {

void CheckShapes(const MultichannelSpectrogram& x, const SteeringField& field) {
  if (x.bins() != field.bins() || x.channels() != field.mics()) {
    throw ShapeError("spectrogram is " + std::to_string(x.bins()) + " bins x " +
                     std::to_string(x.channels()) + " mics but steering field is " +
                     std::to_string(field.bins()) + " x " +
                     std::to_string(field.mics()));
  }
}

}  // namespace

DirectionFeatures dsbf_features(const MultichannelSpectrogram& x,
                                const SteeringField& field) {
  CheckShapes(x, field);
  const std::size_t F = x.bins(), D = field.directions(), T = x.frames();
  DirectionFeatures u(F, D, T);
  // Columns are directions so one normalization call covers a whole bin.
  Eigen::MatrixXd logmag(T, D);
  for (std::size_t f = 0; f < F; ++f) {
    const auto a = field.matrix(f);
    for (std::size_t t = 0; t < T; ++t) {
      const Eigen::VectorXcd beams = a.adjoint() * x.vec(t, f);
      for (std::size_t d = 0; d < D; ++d) {
        logmag(t, d) = std::log(
            std::max(std::abs(beams[static_cast<Eigen::Index>(d)]), kLogMagnitudeFloor));
      }
    }
    const Eigen::MatrixXd norm = mean_var_normalize(logmag);
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t t = 0; t < T; ++t) u.at(f, d, t) = norm(t, d);
    }
  }
  return u;
}

std::vector<double> beam_power_profile(const MultichannelSpectrogram& x,
                                       const SteeringField& field,
                                       const Band& band) {
  CheckShapes(x, field);
  const auto bins = band.Bins(x);
  std::vector<double> power(field.directions(), 0.0);
  if (bins.empty()) return power;
  for (std::size_t f : bins) {
    const auto a = field.matrix(f);
    for (std::size_t t = 0; t < x.frames(); ++t) {
      const Eigen::VectorXcd beams = a.adjoint() * x.vec(t, f);
      for (std::size_t d = 0; d < power.size(); ++d) {
        power[d] += std::norm(beams[static_cast<Eigen::Index>(d)]);
      }
    }
  }
  const double n = static_cast<double>(bins.size() * x.frames());
  for (auto& p : power) p /= n;
  return power;
}

SourceFeatures pool_directions(const DirectionFeatures& u,
                               const Eigen::MatrixXd& weights) {
  const std::size_t C = u.dims[0], D = u.dims[1], T = u.dims[2];
  if (static_cast<std::size_t>(weights.cols()) != D) {
    throw ShapeError("pool_directions: weights have " +
                     std::to_string(weights.cols()) + " columns, features have " +
                     std::to_string(D) + " directions");
  }
  for (Eigen::Index k = 0; k < weights.rows(); ++k) {
    SSLVI_REQUIRE((weights.row(k).array() >= 0.0).all() &&
                      std::abs(weights.row(k).sum() - 1.0) <= 1e-6,
                  "pool_directions: weight row " + std::to_string(k) +
                      " is not a probability vector");
  }
  const std::size_t K = static_cast<std::size_t>(weights.rows());
  SourceFeatures v(C, K, T);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t d = 0; d < D; ++d) {
        const double w = weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
        if (w == 0.0) continue;
        for (std::size_t t = 0; t < T; ++t) v.at(c, k, t) += w * u.at(c, d, t);
      }
    }
  }
  return v;
}

void write_tensor(const std::filesystem::path& path, const Tensor3& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("tensor: cannot write " + path.string());
  os.write("SSLT", 4);
  const std::uint32_t rank = 3;
  os.write(reinterpret_cast<const char*>(&rank), sizeof rank);
  for (std::size_t d : t.dims) {
    const auto v = static_cast<std::uint32_t>(d);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  for (double x : t.data) {
    const auto f = static_cast<float>(x);
    os.write(reinterpret_cast<const char*>(&f), sizeof f);
  }
  if (!os) throw IoError("tensor: write failed for " + path.string());
}

Tensor3 read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("tensor: cannot open " + path.string());
  char magic[4];
  std::uint32_t rank = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&rank), sizeof rank);
  if (!is || std::memcmp(magic, "SSLT", 4) != 0 || rank != 3) {
    throw InputError("tensor: bad header in " + path.string());
  }
  std::uint32_t dims[3];
  is.read(reinterpret_cast<char*>(dims), sizeof dims);
  Tensor3 t(dims[0], dims[1], dims[2]);
  for (auto& x : t.data) {
    float f;
    is.read(reinterpret_cast<char*>(&f), sizeof f);
    x = f;
  }
  if (!is) throw InputError("tensor: truncated file " + path.string());
  return t;
}

}  // namespace sslvi
