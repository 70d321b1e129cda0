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

#include "sslvi/array.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "sslvi/error.hpp"

namespace sslvi {

ArrayGeometry::ArrayGeometry(std::vector<Eigen::Vector3d> mics,
                             double speed_of_sound)
    : mics_(std::move(mics)), speed_of_sound_(speed_of_sound) {
  SSLVI_REQUIRE(mics_.size() >= 2, "array: need at least two microphones");
  SSLVI_REQUIRE(speed_of_sound_ > 0.0, "array: speed of sound must be > 0");
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : mics_) {
    SSLVI_REQUIRE(p.allFinite(), "array: non-finite microphone position");
    centroid += p;
  }
  centroid /= static_cast<double>(mics_.size());
  for (auto& p : mics_) p -= centroid;
}

ArrayGeometry ArrayGeometry::Circular(std::size_t num_mics, double diameter,
                                      double speed_of_sound) {
  SSLVI_REQUIRE(diameter > 0.0, "array: diameter must be > 0");
  std::vector<Eigen::Vector3d> mics;
  const double r = diameter / 2.0;
  for (std::size_t m = 0; m < num_mics; ++m) {
    const double phi = 2.0 * std::numbers::pi * m / num_mics;
    mics.emplace_back(r * std::cos(phi), r * std::sin(phi), 0.0);
  }
  return ArrayGeometry(std::move(mics), speed_of_sound);
}

ArrayGeometry ArrayGeometry::FromJson(const nlohmann::json& j) {
  if (!j.contains("mics") || !j["mics"].is_array()) {
    throw InputError("array json: missing 'mics' array");
  }
  std::vector<Eigen::Vector3d> mics;
  for (const auto& p : j["mics"]) {
    if (!p.is_array() || p.size() != 3) {
      throw InputError("array json: each mic must be [x, y, z]");
    }
    mics.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  return ArrayGeometry(std::move(mics), j.value("c", kDefaultSpeedOfSound));
}

ArrayGeometry ArrayGeometry::Load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("array: cannot open " + path.string());
  try {
    return FromJson(nlohmann::json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("array: " + path.string() + ": " + e.what());
  }
}

nlohmann::json ArrayGeometry::ToJson() const {
  nlohmann::json mics = nlohmann::json::array();
  for (const auto& p : mics_) mics.push_back({p.x(), p.y(), p.z()});
  return {{"mics", mics}, {"c", speed_of_sound_}};
}

DirectionGrid::DirectionGrid(std::size_t num_directions) : size_(num_directions) {
  SSLVI_REQUIRE(num_directions >= 1, "grid: need at least one direction");
}

double DirectionGrid::azimuth(std::size_t d) const {
  return 2.0 * std::numbers::pi * static_cast<double>(d) /
         static_cast<double>(size_);
}

std::size_t DirectionGrid::NearestBin(double azimuth_deg) const {
  const double wrapped = std::fmod(std::fmod(azimuth_deg, 360.0) + 360.0, 360.0);
  const auto bin = static_cast<std::size_t>(std::lround(wrapped / spacing_degrees()));
  return bin % size_;
}

Eigen::Vector3d DirectionVector(double azimuth) {
  return {std::cos(azimuth), std::sin(azimuth), 0.0};
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& g, double azimuth,
                                 double freq_hz) {
  SSLVI_REQUIRE(freq_hz >= 0.0, "steering_vector: frequency must be >= 0");
  const Eigen::Vector3d u = DirectionVector(azimuth);
  Eigen::VectorXcd a(static_cast<Eigen::Index>(g.size()));
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double tau = -g.mics()[m].dot(u) / g.speed_of_sound();
    a[static_cast<Eigen::Index>(m)] =
        std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * tau);
  }
  return a;
}

SteeringField::SteeringField(std::size_t bins, std::size_t directions,
                             std::size_t mics, std::vector<double> freqs)
    : bins_(bins),
      directions_(directions),
      mics_(mics),
      freqs_(std::move(freqs)),
      data_(bins * directions * mics) {
  SSLVI_REQUIRE(freqs_.size() == bins_, "steering field: one frequency per bin");
}

Eigen::MatrixXcd SteeringField::Template(std::size_t f, std::size_t d) const {
  const auto a = vec(f, d);
  return a * a.adjoint();
}

SteeringField build_field(const ArrayGeometry& g, const DirectionGrid& grid,
                          const std::vector<double>& freqs) {
  SteeringField field(freqs.size(), grid.size(), g.size(), freqs);
  for (std::size_t f = 0; f < freqs.size(); ++f) {
    auto a = field.matrix(f);
    for (std::size_t d = 0; d < grid.size(); ++d) {
      a.col(static_cast<Eigen::Index>(d)) =
          steering_vector(g, grid.azimuth(d), freqs[f]);
    }
  }
  return field;
}

}  // namespace sslvi
