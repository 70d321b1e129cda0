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

#include "sslvi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "sslvi/error.hpp"
#include "sslvi/wav.hpp"

namespace sslvi {
namespace {

constexpr double kPi = std::numbers::pi;

double Sinc(double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

std::size_t NextPow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void PeakNormalize(std::vector<double>* x, double peak) {
  double top = 0.0;
  for (double v : *x) top = std::max(top, std::abs(v));
  if (top > 0.0) {
    for (auto& v : *x) v *= peak / top;
  }
}

double MeanPower(const Waveform& w) {
  double acc = 0.0;
  for (const auto& ch : w.channels) {
    for (double v : ch) acc += v * v;
  }
  const double n = static_cast<double>(w.num_channels() * w.length());
  return n > 0.0 ? acc / n : 0.0;
}

nlohmann::json Vec3(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d Vec3From(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

double RoomSpec::Absorption() const {
  if (rt60 <= 0.0) return 1.0;
  const double volume = dims.prod();
  const double surface = 2.0 * (dims.x() * dims.y() + dims.x() * dims.z() +
                                dims.y() * dims.z());
  return 24.0 * std::log(10.0) * volume / (speed_of_sound * surface * rt60);
}

double RoomSpec::Reflection() const {
  const double alpha = Absorption();
  SSLVI_REQUIRE(alpha <= 1.0, "room: rt60 too short for this room (absorption > 1)");
  return std::sqrt(1.0 - alpha);
}

bool RoomSpec::Contains(const Eigen::Vector3d& p) const {
  return (p.array() > 0.0).all() && (p.array() < dims.array()).all();
}

std::vector<double> image_method_rir(const RoomSpec& room, const Eigen::Vector3d& src,
                                     const Eigen::Vector3d& mic, double sample_rate,
                                     std::size_t length) {
  SSLVI_REQUIRE((room.dims.array() > 0.0).all(), "rir: room dimensions must be > 0");
  SSLVI_REQUIRE(room.rt60 >= 0.0, "rir: rt60 must be >= 0");
  SSLVI_REQUIRE(room.Contains(src), "rir: source outside the room");
  SSLVI_REQUIRE(room.Contains(mic), "rir: microphone outside the room");
  SSLVI_REQUIRE(sample_rate > 0.0, "rir: sample rate must be > 0");
  const double c = room.speed_of_sound;
  const double beta = room.Reflection();
  constexpr int kHalf = kFractionalDelayTaps / 2;
  if (length == 0) {
    const double direct = (src - mic).norm() / c * sample_rate;
    length = static_cast<std::size_t>(
        std::ceil(std::max(room.rt60 * sample_rate, direct))) + kHalf + 1;
  }
  std::vector<double> h(length, 0.0);
  const int order = beta == 0.0 ? 0 : std::max(room.max_order, 0);
  const int span = order / 2 + 1;
  const double max_delay = static_cast<double>(length) + kHalf;

  for (int mx = -span; mx <= span; ++mx) {
    for (int my = -span; my <= span; ++my) {
      for (int mz = -span; mz <= span; ++mz) {
        for (int q = 0; q <= 1; ++q) {
          for (int j = 0; j <= 1; ++j) {
            for (int k = 0; k <= 1; ++k) {
              const int refl = std::abs(2 * mx - q) + std::abs(2 * my - j) +
                               std::abs(2 * mz - k);
              if (refl > order) continue;
              const Eigen::Vector3d image(
                  (1 - 2 * q) * src.x() + 2 * mx * room.dims.x(),
                  (1 - 2 * j) * src.y() + 2 * my * room.dims.y(),
                  (1 - 2 * k) * src.z() + 2 * mz * room.dims.z());
              const double dist = (image - mic).norm();
              const double delay = dist / c * sample_rate;
              if (delay >= max_delay) continue;
              const double gain = std::pow(beta, refl) / (4.0 * kPi * dist);
              const double base = std::floor(delay);
              const double frac = delay - base;
              const auto n0 = static_cast<long>(base);
              for (int i = -kHalf; i <= kHalf; ++i) {
                const long n = n0 + i;
                if (n < 0 || n >= static_cast<long>(length)) continue;
                const double x = i - frac;
                const double win = 0.5 * (1.0 + std::cos(kPi * x / (kHalf + 1)));
                h[static_cast<std::size_t>(n)] += gain * win * Sinc(x);
              }
            }
          }
        }
      }
    }
  }
  return h;
}

std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& h,
                             std::size_t out_len) {
  std::vector<double> y(out_len, 0.0);
  if (x.empty() || h.empty() || out_len == 0) return y;
  const std::size_t n = NextPow2(x.size() + h.size() - 1);
  std::vector<double> xp(n, 0.0), hp(n, 0.0);
  std::copy(x.begin(), x.end(), xp.begin());
  std::copy(h.begin(), h.end(), hp.begin());
  Eigen::FFT<double> fft;
  std::vector<Complex> xf, hf;
  fft.fwd(xf, xp);
  fft.fwd(hf, hp);
  for (std::size_t i = 0; i < xf.size(); ++i) xf[i] *= hf[i];
  std::vector<double> full;
  fft.inv(full, xf);
  std::copy_n(full.begin(), std::min(out_len, full.size()), y.begin());
  return y;
}

std::string ToString(SignalKind kind) {
  switch (kind) {
    case SignalKind::kSpeechlike: return "speechlike";
    case SignalKind::kTone: return "tone";
    case SignalKind::kNoiseburst: return "noiseburst";
    case SignalKind::kFile: return "file";
  }
  return "speechlike";
}

SignalKind ParseSignalKind(const std::string& s) {
  if (s == "speechlike") return SignalKind::kSpeechlike;
  if (s == "tone") return SignalKind::kTone;
  if (s == "noiseburst") return SignalKind::kNoiseburst;
  if (s == "file") return SignalKind::kFile;
  throw ContractError("unknown signal kind '" + s + "'");
}

std::vector<double> synth_source(SignalKind kind, double duration, double sample_rate,
                                 std::uint64_t seed) {
  SSLVI_REQUIRE(duration > 0.0 && sample_rate > 0.0,
                "synth_source: duration and sample rate must be > 0");
  SSLVI_REQUIRE(kind != SignalKind::kFile, "synth_source: file sources are loaded, not synthesized");
  const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n, 0.0);

  if (kind == SignalKind::kTone) {
    const double freq = 300.0 + 2700.0 * uni(rng);
    const double phase = 2.0 * kPi * uni(rng);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::sin(2.0 * kPi * freq * i / sample_rate + phase);
    }
  } else if (kind == SignalKind::kNoiseburst) {
    const auto burst = static_cast<std::size_t>(0.1 * sample_rate);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = normal(rng);
      x[i] = (i / burst) % 2 == 0 ? v : 0.0;
    }
  } else {
    // Shape white noise in the frequency domain: 1/f power plus three
    // formant-like bumps in log frequency.
    const std::size_t nfft = NextPow2(n);
    std::vector<double> white(nfft);
    for (auto& v : white) v = normal(rng);
    const double formant_lo[3] = {300.0, 900.0, 2200.0};
    const double formant_hi[3] = {800.0, 2200.0, 3500.0};
    double centers[3];
    for (int i = 0; i < 3; ++i) {
      centers[i] = formant_lo[i] * std::pow(formant_hi[i] / formant_lo[i], uni(rng));
    }
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<Complex> spec;
    fft.fwd(spec, white);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const double hz = std::max(static_cast<double>(k) * sample_rate / nfft, 50.0);
      double gain = 1.0 / std::sqrt(hz / 50.0);
      for (double fc : centers) {
        const double octaves = std::log2(hz / fc);
        gain *= 1.0 + 3.0 * std::exp(-0.5 * (octaves / 0.25) * (octaves / 0.25));
      }
      spec[k] *= gain;
    }
    std::vector<double> pink;
    fft.inv(pink, spec, static_cast<Eigen::Index>(nfft));

    // Syllable-rate envelope: rectified sum of three 2-8 Hz sinusoids.
    double rates[3], phases[3];
    for (int i = 0; i < 3; ++i) {
      rates[i] = 2.0 + 6.0 * uni(rng);
      phases[i] = 2.0 * kPi * uni(rng);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double t = i / sample_rate;
      double s = 0.0;
      for (int r = 0; r < 3; ++r) s += std::sin(2.0 * kPi * rates[r] * t + phases[r]);
      const double env = std::pow(std::max(s / 3.0 + 0.2, 0.0), 1.5) + 0.01;
      x[i] = pink[i] * env;
    }
  }
  PeakNormalize(&x, 0.5);
  return x;
}

Eigen::Vector3d SceneSpec::SourcePosition(std::size_t i) const {
  const auto& s = sources.at(i);
  return array_center + s.distance * DirectionVector(s.azimuth_deg * kPi / 180.0);
}

void SceneSpec::Validate() const {
  SSLVI_REQUIRE(duration > 0.0, "scene: duration must be > 0");
  SSLVI_REQUIRE(sample_rate > 0.0, "scene: sample rate must be > 0");
  SSLVI_REQUIRE(grid_size >= 1, "scene: grid size must be >= 1");
  for (const auto& m : array.mics()) {
    SSLVI_REQUIRE(room.Contains(array_center + m), "scene: microphone outside the room");
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    SSLVI_REQUIRE(room.Contains(SourcePosition(i)),
                  "scene: source " + std::to_string(i) + " outside the room");
  }
}

nlohmann::json ToJson(const SceneSpec& spec) {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : spec.sources) {
    nlohmann::json js = {{"azimuth_deg", s.azimuth_deg}, {"distance", s.distance},
                         {"gain_db", s.gain_db},         {"active", s.active},
                         {"kind", ToString(s.kind)},     {"seed", s.seed}};
    if (s.kind == SignalKind::kFile) js["file"] = s.file.string();
    sources.push_back(js);
  }
  return {{"room", {{"dims", Vec3(spec.room.dims)},
                    {"rt60", spec.room.rt60},
                    {"max_order", spec.room.max_order},
                    {"c", spec.room.speed_of_sound}}},
          {"array", spec.array.ToJson()},
          {"array_center", Vec3(spec.array_center)},
          {"sources", sources},
          {"snr_db", spec.snr_db ? nlohmann::json(*spec.snr_db) : nlohmann::json(nullptr)},
          {"duration", spec.duration},
          {"sample_rate", spec.sample_rate},
          {"grid_size", spec.grid_size},
          {"seed", spec.seed},
          {"condition", spec.condition}};
}

SceneSpec SceneSpecFromJson(const nlohmann::json& j) {
  SceneSpec spec;
  const auto& room = j.at("room");
  spec.room.dims = Vec3From(room.at("dims"));
  spec.room.rt60 = room.at("rt60").get<double>();
  spec.room.max_order = room.value("max_order", 30);
  spec.room.speed_of_sound = room.value("c", kDefaultSpeedOfSound);
  spec.array = ArrayGeometry::FromJson(j.at("array"));
  spec.array_center = Vec3From(j.at("array_center"));
  for (const auto& js : j.at("sources")) {
    SourceSpec s;
    s.azimuth_deg = js.at("azimuth_deg").get<double>();
    s.distance = js.at("distance").get<double>();
    s.gain_db = js.value("gain_db", 0.0);
    s.active = js.value("active", true);
    s.kind = ParseSignalKind(js.value("kind", std::string("speechlike")));
    s.seed = js.value("seed", std::uint64_t{0});
    if (js.contains("file")) s.file = js["file"].get<std::string>();
    spec.sources.push_back(s);
  }
  if (j.contains("snr_db") && !j["snr_db"].is_null()) {
    spec.snr_db = j["snr_db"].get<double>();
  } else {
    spec.snr_db = std::nullopt;
  }
  spec.duration = j.value("duration", 1.0);
  spec.sample_rate = j.value("sample_rate", 16000.0);
  spec.grid_size = j.value("grid_size", std::size_t{72});
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.condition = j.value("condition", 1);
  return spec;
}

std::vector<double> GroundTruth::ActiveDoasDeg(std::size_t grid_size) const {
  std::vector<double> out;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i]) out.push_back(360.0 * doa_bins[i] / grid_size);
  }
  return out;
}

GroundTruth MakeGroundTruth(const SceneSpec& spec) {
  const DirectionGrid grid(spec.grid_size);
  GroundTruth gt;
  for (const auto& s : spec.sources) {
    gt.doas_deg.push_back(s.azimuth_deg);
    gt.doa_bins.push_back(grid.NearestBin(s.azimuth_deg));
    gt.active.push_back(s.active);
    gt.true_count += s.active ? 1 : 0;
  }
  return gt;
}

Waveform source_image(const SceneSpec& spec, std::size_t index,
                      const std::vector<double>& signal) {
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.sample_rate));
  const Eigen::Vector3d src = spec.SourcePosition(index);
  Waveform out(spec.sample_rate, spec.array.size(), n);
  for (std::size_t m = 0; m < spec.array.size(); ++m) {
    const auto rir = image_method_rir(spec.room, src, spec.array_center + spec.array.mics()[m],
                                      spec.sample_rate);
    out.channels[m] = convolve(signal, rir, n);
  }
  return out;
}

RenderedScene render_scene(const SceneSpec& spec, std::mt19937_64& rng) {
  spec.Validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.sample_rate));
  const std::size_t M = spec.array.size();
  RenderedScene out;
  out.truth = MakeGroundTruth(spec);
  out.mixture = Waveform(spec.sample_rate, M, n);
  if (out.truth.true_count == 0 && spec.snr_db) {
    throw ContractError("scene: no active sources, SNR is undefined");
  }

  for (std::size_t i = 0; i < spec.sources.size(); ++i) {
    const auto& s = spec.sources[i];
    if (!s.active) continue;
    std::vector<double> signal;
    if (s.kind == SignalKind::kFile) {
      const Waveform w = read_wav(s.file, spec.sample_rate);
      signal = w.channels.front();
      signal.resize(n, 0.0);
    } else {
      signal = synth_source(s.kind, spec.duration, spec.sample_rate, s.seed);
    }
    const Waveform image = source_image(spec, i, signal);
    const double power = MeanPower(image);
    if (power <= 0.0) continue;
    const double scale =
        std::sqrt(kReferencePower * std::pow(10.0, s.gain_db / 10.0) / power);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t t = 0; t < n; ++t) {
        out.mixture.channels[m][t] += scale * image.channels[m][t];
      }
    }
  }

  if (spec.snr_db) {
    const double signal_power = MeanPower(out.mixture);
    Waveform noise(spec.sample_rate, M, n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& ch : noise.channels) {
      for (auto& v : ch) v = normal(rng);
    }
    const double target = signal_power / std::pow(10.0, *spec.snr_db / 10.0);
    const double scale = std::sqrt(target / MeanPower(noise));
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t t = 0; t < n; ++t) {
        out.mixture.channels[m][t] += scale * noise.channels[m][t];
      }
    }
  }
  return out;
}

RenderedScene render_scene(const SceneSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  return render_scene(spec, rng);
}

DatasetTemplate DatasetTemplate::Condition2() {
  DatasetTemplate t;
  t.condition = 2;
  t.min_persons = 2;
  t.max_persons = 4;
  t.min_active = 2;
  t.max_active = 3;
  return t;
}

void DatasetTemplate::Validate() const {
  SSLVI_REQUIRE(n_mics >= 2, "template: need at least two microphones");
  SSLVI_REQUIRE(condition == 1 || condition == 2, "template: condition must be 1 or 2");
  SSLVI_REQUIRE(min_persons >= 1 && min_persons <= max_persons,
                "template: bad person-count range");
  SSLVI_REQUIRE(condition == 1 || (min_active >= 1 && min_active <= max_active &&
                                   min_active <= min_persons),
                "template: bad active-count range");
  SSLVI_REQUIRE(rt60_min >= 0.0 && rt60_min <= rt60_max, "template: bad rt60 range");
  SSLVI_REQUIRE(distance_min > 0.0 && distance_min <= distance_max,
                "template: bad distance range");
  SSLVI_REQUIRE(duration > 0.0 && sample_rate > 0.0, "template: bad duration or rate");
  SSLVI_REQUIRE(min_separation_deg >= 0.0, "template: separation must be >= 0");
}

nlohmann::json ToJson(const DatasetTemplate& t) {
  return {{"n_mics", t.n_mics},
          {"array_diameter", t.array_diameter},
          {"condition", t.condition},
          {"min_persons", t.min_persons},
          {"max_persons", t.max_persons},
          {"min_active", t.min_active},
          {"max_active", t.max_active},
          {"room_dims", Vec3(t.room_dims)},
          {"rt60_min", t.rt60_min},
          {"rt60_max", t.rt60_max},
          {"max_order", t.max_order},
          {"distance_min", t.distance_min},
          {"distance_max", t.distance_max},
          {"gain_db_range", t.gain_db_range},
          {"snr_db", t.snr_db ? nlohmann::json(*t.snr_db) : nlohmann::json(nullptr)},
          {"min_separation_deg", t.min_separation_deg},
          {"duration", t.duration},
          {"sample_rate", t.sample_rate},
          {"kind", ToString(t.kind)},
          {"grid_size", t.grid_size},
          {"on_grid", t.on_grid}};
}

DatasetTemplate DatasetTemplateFromJson(const nlohmann::json& j, DatasetTemplate t) {
  t.n_mics = j.value("n_mics", t.n_mics);
  t.array_diameter = j.value("array_diameter", t.array_diameter);
  t.condition = j.value("condition", t.condition);
  t.min_persons = j.value("min_persons", t.min_persons);
  t.max_persons = j.value("max_persons", t.max_persons);
  t.min_active = j.value("min_active", t.min_active);
  t.max_active = j.value("max_active", t.max_active);
  if (j.contains("room_dims")) t.room_dims = Vec3From(j["room_dims"]);
  t.rt60_min = j.value("rt60_min", t.rt60_min);
  t.rt60_max = j.value("rt60_max", t.rt60_max);
  t.max_order = j.value("max_order", t.max_order);
  t.distance_min = j.value("distance_min", t.distance_min);
  t.distance_max = j.value("distance_max", t.distance_max);
  t.gain_db_range = j.value("gain_db_range", t.gain_db_range);
  if (j.contains("snr_db")) {
    t.snr_db = j["snr_db"].is_null() ? std::nullopt
                                     : std::optional<double>(j["snr_db"].get<double>());
  }
  t.min_separation_deg = j.value("min_separation_deg", t.min_separation_deg);
  t.duration = j.value("duration", t.duration);
  t.sample_rate = j.value("sample_rate", t.sample_rate);
  if (j.contains("kind")) t.kind = ParseSignalKind(j["kind"].get<std::string>());
  t.grid_size = j.value("grid_size", t.grid_size);
  t.on_grid = j.value("on_grid", t.on_grid);
  return t;
}

std::uint64_t DeriveSeed(std::uint64_t root, std::uint64_t index) {
  // splitmix64 finalizer over the combined state.
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SceneSpec draw_scene(const DatasetTemplate& t, std::uint64_t seed) {
  t.Validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto uniform_int = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  SceneSpec spec;
  spec.room.dims = t.room_dims;
  spec.room.rt60 = t.rt60_min + (t.rt60_max - t.rt60_min) * uni(rng);
  spec.room.max_order = t.max_order;
  spec.array = ArrayGeometry::Circular(t.n_mics, t.array_diameter);
  spec.array_center = Eigen::Vector3d(t.room_dims.x() / 2, t.room_dims.y() / 2, 1.5);
  spec.snr_db = t.snr_db;
  spec.duration = t.duration;
  spec.sample_rate = t.sample_rate;
  spec.grid_size = t.grid_size;
  spec.condition = t.condition;

  const std::size_t persons = uniform_int(t.min_persons, t.max_persons);
  std::size_t speaking = persons;
  if (t.condition == 2) speaking = uniform_int(t.min_active, std::min(t.max_active, persons));

  if (static_cast<double>(persons) * t.min_separation_deg > 360.0) {
    throw ContractError("dataset: cannot place " + std::to_string(persons) +
                        " sources with " + std::to_string(t.min_separation_deg) +
                        " degree separation");
  }
  const DirectionGrid grid(t.grid_size);
  std::vector<double> azimuths;
  for (int attempt = 0; azimuths.size() < persons; ++attempt) {
    if (attempt > 10000) {
      throw ContractError("dataset: separation constraint could not be satisfied");
    }
    double az = 360.0 * uni(rng);
    if (t.on_grid) az = grid.degrees(grid.NearestBin(az));
    const bool ok = std::all_of(azimuths.begin(), azimuths.end(), [&](double b) {
      const double d = std::fmod(std::abs(az - b), 360.0);
      return std::min(d, 360.0 - d) >= t.min_separation_deg;
    });
    if (ok) azimuths.push_back(az);
  }

  std::vector<std::size_t> order(persons);
  for (std::size_t i = 0; i < persons; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> active(persons, false);
  for (std::size_t i = 0; i < speaking; ++i) active[order[i]] = true;

  for (std::size_t i = 0; i < persons; ++i) {
    SourceSpec s;
    s.azimuth_deg = azimuths[i];
    s.distance = t.distance_min + (t.distance_max - t.distance_min) * uni(rng);
    s.gain_db = t.gain_db_range * (2.0 * uni(rng) - 1.0);
    s.active = active[i];
    s.kind = t.kind;
    s.seed = rng();
    spec.sources.push_back(s);
  }
  spec.seed = rng();
  return spec;
}

nlohmann::json TruthJson(const std::string& id, const SceneSpec& spec) {
  const GroundTruth gt = MakeGroundTruth(spec);
  nlohmann::json j = ToJson(spec);
  j["id"] = id;
  j["doas_deg"] = gt.doas_deg;
  j["doa_bins"] = gt.doa_bins;
  j["active"] = gt.active;
  j["true_count"] = gt.true_count;
  j["rt60"] = spec.room.rt60;
  j["n_mics"] = spec.array.size();
  return j;
}

std::vector<DatasetEntry> make_dataset(const DatasetTemplate& t, std::size_t n_scenes,
                                       std::uint64_t root_seed,
                                       const std::filesystem::path& out_dir) {
  SSLVI_REQUIRE(n_scenes >= 1, "dataset: need at least one scene");
  t.Validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("dataset: cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<DatasetEntry> entries;
  nlohmann::json manifest_scenes = nlohmann::json::array();
  for (std::size_t i = 0; i < n_scenes; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%04zu", i);
    DatasetEntry e{id, draw_scene(t, DeriveSeed(root_seed, i)), out_dir / (std::string(id) + ".wav"),
                   out_dir / (std::string(id) + ".json")};
    const auto rendered = render_scene(e.spec);
    write_wav(e.wav, rendered.mixture, WavFormat::kFloat32);
    std::ofstream js(e.truth);
    if (!js) throw IoError("dataset: cannot write " + e.truth.string());
    js << TruthJson(e.id, e.spec).dump(2) << "\n";
    manifest_scenes.push_back({{"id", e.id},
                               {"wav", e.wav.filename().string()},
                               {"truth", e.truth.filename().string()},
                               {"n_mics", e.spec.array.size()},
                               {"n_sources", e.spec.sources.size()},
                               {"n_active", rendered.truth.true_count}});
    entries.push_back(std::move(e));
  }
  nlohmann::json manifest = {{"template", ToJson(t)},
                             {"root_seed", root_seed},
                             {"scenes", manifest_scenes}};
  std::ofstream ms(out_dir / "manifest.json");
  if (!ms) throw IoError("dataset: cannot write manifest");
  ms << manifest.dump(2) << "\n";
  return entries;
}

}  // namespace sslvi
