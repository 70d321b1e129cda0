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
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sslvi/array.hpp"
#include "sslvi/dsp.hpp"

namespace sslvi {

/// Shoebox room with uniform wall absorption derived from the target RT60.
struct RoomSpec {
  Eigen::Vector3d dims{5.0, 5.0, 3.0};
  double rt60 = 0.3;
  int max_order = 30;
  double speed_of_sound = kDefaultSpeedOfSound;

  /// Sabine absorption coefficient; 1 for rt60 == 0.
  double Absorption() const;
  /// Pressure reflection coefficient sqrt(1 - absorption).
  double Reflection() const;
  bool Contains(const Eigen::Vector3d& p) const;
};

inline constexpr int kFractionalDelayTaps = 81;

/// Image-method impulse response between two points. Image sources up to
/// room.max_order reflections, 1/(4 pi r) spreading, fractional delays by a
/// Hann-windowed sinc. A zero `length` picks max(rt60, direct path) plus
/// the filter half-width.
std::vector<double> image_method_rir(const RoomSpec& room, const Eigen::Vector3d& src,
                                     const Eigen::Vector3d& mic, double sample_rate,
                                     std::size_t length = 0);

/// Linear convolution truncated to `out_len` samples (FFT based).
std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& h,
                             std::size_t out_len);

enum class SignalKind { kSpeechlike, kTone, kNoiseburst, kFile };

std::string ToString(SignalKind kind);
SignalKind ParseSignalKind(const std::string& s);

/// Deterministic monaural test signal, peak-normalized to 0.5. Speechlike is
/// pink noise with random formant emphasis, amplitude modulated at 2-8 Hz.
std::vector<double> synth_source(SignalKind kind, double duration, double sample_rate,
                                 std::uint64_t seed);

struct SourceSpec {
  double azimuth_deg = 0.0;
  double distance = 1.0;
  double gain_db = 0.0;
  bool active = true;
  SignalKind kind = SignalKind::kSpeechlike;
  std::uint64_t seed = 0;
  std::filesystem::path file;  // used when kind == kFile
};

struct SceneSpec {
  RoomSpec room;
  ArrayGeometry array = ArrayGeometry::Circular(6);
  Eigen::Vector3d array_center{2.5, 2.5, 1.5};
  std::vector<SourceSpec> sources;
  /// Diffuse-noise SNR in dB; nullopt renders without noise.
  std::optional<double> snr_db = 20.0;
  double duration = 1.0;
  double sample_rate = 16000.0;
  std::size_t grid_size = 72;
  std::uint64_t seed = 0;
  int condition = 1;

  Eigen::Vector3d SourcePosition(std::size_t i) const;
  void Validate() const;
};

nlohmann::json ToJson(const SceneSpec& spec);
SceneSpec SceneSpecFromJson(const nlohmann::json& j);

struct GroundTruth {
  std::vector<double> doas_deg;       // every source, as specified
  std::vector<std::size_t> doa_bins;  // every source, snapped to the grid
  std::vector<bool> active;
  std::size_t true_count = 0;

  /// Grid-snapped azimuths in degrees of the active sources.
  std::vector<double> ActiveDoasDeg(std::size_t grid_size) const;
};

GroundTruth MakeGroundTruth(const SceneSpec& spec);

/// Reference power of every rendered source image before its gain.
inline constexpr double kReferencePower = 1e-2;

/// Unscaled M-channel image of one source signal at the microphones.
Waveform source_image(const SceneSpec& spec, std::size_t index,
                      const std::vector<double>& signal);

struct RenderedScene {
  Waveform mixture;
  GroundTruth truth;
};

/// Convolves each active source with its RIRs, scales its image to
/// kReferencePower * 10^(gain/10), sums, and adds white Gaussian noise at
/// exactly snr_db below the summed source power.
RenderedScene render_scene(const SceneSpec& spec, std::mt19937_64& rng);
/// Uses an RNG seeded with spec.seed.
RenderedScene render_scene(const SceneSpec& spec);

/// Randomization ranges for generated datasets. Condition 1 makes every
/// person speak; condition 2 silences all but [min_active, max_active].
struct DatasetTemplate {
  std::size_t n_mics = 6;
  double array_diameter = 0.20;
  int condition = 1;
  std::size_t min_persons = 2;
  std::size_t max_persons = 3;
  std::size_t min_active = 2;
  std::size_t max_active = 3;
  Eigen::Vector3d room_dims{5.0, 5.0, 3.0};
  double rt60_min = 0.2;
  double rt60_max = 0.4;
  int max_order = 30;
  double distance_min = 0.5;
  double distance_max = 2.0;
  double gain_db_range = 2.5;
  std::optional<double> snr_db = 20.0;
  double min_separation_deg = 20.0;
  double duration = 1.0;
  double sample_rate = 16000.0;
  SignalKind kind = SignalKind::kSpeechlike;
  std::size_t grid_size = 72;
  /// Draw azimuths on grid bins instead of continuously.
  bool on_grid = false;

  /// Condition-2 preset: 2-4 persons, 2-3 speaking.
  static DatasetTemplate Condition2();
  void Validate() const;
};

nlohmann::json ToJson(const DatasetTemplate& t);
DatasetTemplate DatasetTemplateFromJson(const nlohmann::json& j,
                                        DatasetTemplate base = {});

/// Derives an independent 64-bit seed for stream `index` of `root`.
std::uint64_t DeriveSeed(std::uint64_t root, std::uint64_t index);

/// Draws one scene from the template using `seed`.
SceneSpec draw_scene(const DatasetTemplate& t, std::uint64_t seed);

struct DatasetEntry {
  std::string id;
  SceneSpec spec;
  std::filesystem::path wav;
  std::filesystem::path truth;
};

/// Draws and renders n scenes, writing <id>.wav, <id>.json and manifest.json
/// into out_dir.
std::vector<DatasetEntry> make_dataset(const DatasetTemplate& t, std::size_t n_scenes,
                                       std::uint64_t root_seed,
                                       const std::filesystem::path& out_dir);

/// Ground-truth document written next to each WAV.
nlohmann::json TruthJson(const std::string& id, const SceneSpec& spec);

}  // namespace sslvi
