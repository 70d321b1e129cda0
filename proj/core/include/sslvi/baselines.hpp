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
#include <string>
#include <vector>

#include <json.hpp>

#include "sslvi/array.hpp"
#include "sslvi/dsp.hpp"

namespace sslvi {

/// Nonnegative score per grid direction.
struct SpatialSpectrum {
  std::vector<double> values;
  std::string method;
};

/// Wideband MUSIC: per-bin noise subspace of the sample SCM, pseudo-spectrum
/// 1 / (a^H E E^H a / M), averaged arithmetically over the band.
SpatialSpectrum music_spectrum(const MultichannelSpectrogram& x,
                               const SteeringField& field, std::size_t n_src,
                               const Band& band = {});

inline constexpr double kPhatFloor = 1e-8;

/// SRP-PHAT: sum over band bins and frames of |sum_m x_m / |x_m| conj(a_m)|^2.
SpatialSpectrum srp_phat(const MultichannelSpectrogram& x,
                         const SteeringField& field, const Band& band = {});

/// Strict circular local maxima >= rel_thresh * global max, strongest first,
/// at most max_peaks.
std::vector<std::size_t> peak_pick(const SpatialSpectrum& s, std::size_t max_peaks,
                                   double rel_thresh);

nlohmann::json ToJson(const SpatialSpectrum& s);

}  // namespace sslvi
