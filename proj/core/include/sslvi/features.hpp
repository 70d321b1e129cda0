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

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "sslvi/array.hpp"
#include "sslvi/dsp.hpp"

namespace sslvi {

/// Dense row-major real tensor of rank 3.
struct Tensor3 {
  std::array<std::size_t, 3> dims{0, 0, 0};
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t a, std::size_t b, std::size_t c)
      : dims{a, b, c}, data(a * b * c, 0.0) {}

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * dims[1] + j) * dims[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * dims[1] + j) * dims[2] + k];
  }
};

/// Per-direction features u, indexed (channel c, direction d, frame t).
/// Here c runs over frequency bins.
using DirectionFeatures = Tensor3;
/// Source-wise pooled features v, indexed (channel c, source k, frame t).
using SourceFeatures = Tensor3;

inline constexpr double kLogMagnitudeFloor = 1e-8;

/// Delay-and-sum beam log-magnitudes log|a_fd^H x_tf| for every bin and
/// direction, each (f, d) sequence normalized over time. Output is F x D x T.
DirectionFeatures dsbf_features(const MultichannelSpectrogram& x,
                                const SteeringField& field);

/// Time- and band-averaged delay-and-sum power |a_fd^H x_tf|^2 per direction.
std::vector<double> beam_power_profile(const MultichannelSpectrogram& x,
                                       const SteeringField& field,
                                       const Band& band = {});

/// v_ck = sum_d w_kd u_cd for a K x D row-stochastic weight matrix.
SourceFeatures pool_directions(const DirectionFeatures& u,
                               const Eigen::MatrixXd& weights);

/// Writes "SSLT", uint32 rank, uint32 dims[rank], then little-endian float32
/// values in row-major order.
void write_tensor(const std::filesystem::path& path, const Tensor3& t);
Tensor3 read_tensor(const std::filesystem::path& path);

}  // namespace sslvi
