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
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sslvi/dsp.hpp"

namespace sslvi {

inline constexpr double kDefaultSpeedOfSound = 343.0;

/// Microphone positions in meters, re-centered so the centroid is the origin.
class ArrayGeometry {
 public:
  ArrayGeometry(std::vector<Eigen::Vector3d> mics,
                double speed_of_sound = kDefaultSpeedOfSound);

  /// M microphones uniformly spaced on a horizontal circle; the first one
  /// sits on the +x axis.
  static ArrayGeometry Circular(std::size_t num_mics, double diameter = 0.20,
                                double speed_of_sound = kDefaultSpeedOfSound);

  /// Parses {"mics": [[x, y, z], ...], "c": 343.0}; "c" is optional.
  static ArrayGeometry FromJson(const nlohmann::json& j);
  static ArrayGeometry Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  std::size_t size() const { return mics_.size(); }
  const std::vector<Eigen::Vector3d>& mics() const { return mics_; }
  double speed_of_sound() const { return speed_of_sound_; }

 private:
  std::vector<Eigen::Vector3d> mics_;
  double speed_of_sound_;
};

/// D azimuths evenly spaced on [0, 2*pi), elevation zero.
class DirectionGrid {
 public:
  explicit DirectionGrid(std::size_t num_directions);

  std::size_t size() const { return size_; }
  double azimuth(std::size_t d) const;
  double degrees(std::size_t d) const { return 360.0 * d / size_; }
  double spacing_degrees() const { return 360.0 / size_; }
  /// Nearest grid index to an azimuth in degrees (any real value).
  std::size_t NearestBin(double azimuth_deg) const;

 private:
  std::size_t size_;
};

/// Unit vector pointing from the array toward a horizontal azimuth.
Eigen::Vector3d DirectionVector(double azimuth);

/// Plane-wave steering vector: entry m is exp(-j 2 pi f tau_m) with
/// tau_m = -(r_m . u) / c.
Eigen::VectorXcd steering_vector(const ArrayGeometry& g, double azimuth,
                                 double freq_hz);

/// Steering vectors a_fd for every analysis bin and grid direction. The
/// rank-1 templates a_fd a_fd^H are formed on demand.
class SteeringField {
 public:
  SteeringField() = default;
  SteeringField(std::size_t bins, std::size_t directions, std::size_t mics,
                std::vector<double> freqs);

  std::size_t bins() const { return bins_; }
  std::size_t directions() const { return directions_; }
  std::size_t mics() const { return mics_; }
  const std::vector<double>& freqs() const { return freqs_; }

  /// M x D matrix whose column d is a_fd.
  Eigen::Map<const Eigen::MatrixXcd> matrix(std::size_t f) const {
    return {data_.data() + f * directions_ * mics_,
            static_cast<Eigen::Index>(mics_),
            static_cast<Eigen::Index>(directions_)};
  }
  Eigen::Map<Eigen::MatrixXcd> matrix(std::size_t f) {
    return {data_.data() + f * directions_ * mics_,
            static_cast<Eigen::Index>(mics_),
            static_cast<Eigen::Index>(directions_)};
  }
  Eigen::Map<const Eigen::VectorXcd> vec(std::size_t f, std::size_t d) const {
    return {data_.data() + (f * directions_ + d) * mics_,
            static_cast<Eigen::Index>(mics_)};
  }
  /// Template SCM T_fd = a_fd a_fd^H.
  Eigen::MatrixXcd Template(std::size_t f, std::size_t d) const;

 private:
  std::size_t bins_ = 0;
  std::size_t directions_ = 0;
  std::size_t mics_ = 0;
  std::vector<double> freqs_;
  std::vector<Complex> data_;
};

SteeringField build_field(const ArrayGeometry& g, const DirectionGrid& grid,
                          const std::vector<double>& freqs);

}  // namespace sslvi
