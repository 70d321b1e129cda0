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
#include <iterator>
#include <numeric>
#include <set>

#include <gtest/gtest.h>
#include <unsupported/Eigen/FFT>

#include "sslvi/error.hpp"
#include "sslvi/wav.hpp"
#include "test_util.hpp"

namespace sslvi {
namespace {

constexpr double kPiD = 3.14159265358979323846;

double Energy(const std::vector<double>& h) {
  return std::inner_product(h.begin(), h.end(), h.begin(), 0.0);
}

double Power(const Waveform& w) {
  double s = 0.0;
  for (const auto& ch : w.channels) s += Energy(ch);
  return s / static_cast<double>(w.channels.size() * w.length());
}

// Schroeder backward integration, line fit between -5 and -25 dB.
double SchroederRt60(const std::vector<double>& h, double fs) {
  std::vector<double> edc(h.size());
  double acc = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    edc[i] = acc;
  }
  std::vector<double> t, db;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double v = 10.0 * std::log10(edc[i] / edc[0]);
    if (v <= -5.0 && v >= -25.0) {
      t.push_back(i / fs);
      db.push_back(v);
    }
  }
  const double n = static_cast<double>(t.size());
  const double mt = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double md = std::accumulate(db.begin(), db.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - mt) * (db[i] - md);
    sxx += (t[i] - mt) * (t[i] - mt);
  }
  return -60.0 / (sxy / sxx);
}

TEST(ImageMethod, AnechoicDirectPathOnly) {
  RoomSpec room;
  room.rt60 = 0.0;
  const Eigen::Vector3d mic(2.0, 2.0, 1.5), src(3.0, 2.0, 1.5);
  const auto h = image_method_rir(room, src, mic, 16000.0);
  const auto peak = std::max_element(h.begin(), h.end()) - h.begin();
  EXPECT_EQ(peak, std::lround(16000.0 / 343.0));
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  EXPECT_NEAR(sum * 4.0 * kPiD, 1.0, 0.02);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (std::abs(static_cast<double>(i) - 16000.0 / 343.0) > 41) EXPECT_EQ(h[i], 0.0);
  }
}

TEST(ImageMethod, SchroederDecayMatchesTarget) {
  RoomSpec room;
  room.rt60 = 0.3;
  // Scene geometry: array at the room center, talkers at the same height.
  const Eigen::Vector3d mic(2.5, 2.5, 1.5);
  for (const Eigen::Vector3d src : {Eigen::Vector3d(3.2, 1.9, 1.5), Eigen::Vector3d(1.0, 3.0, 1.5),
                                    Eigen::Vector3d(2.5, 4.2, 1.5)}) {
    const auto h = image_method_rir(room, src, mic, 16000.0, 16000);
    EXPECT_NEAR(SchroederRt60(h, 16000.0) / 0.3, 1.0, 0.2) << src.transpose();
  }
}

TEST(ImageMethod, EnergyGrowsWithOrder) {
  RoomSpec room;
  room.rt60 = 0.4;
  double prev = 0.0;
  for (int order = 0; order <= 8; ++order) {
    room.max_order = order;
    const double e = Energy(image_method_rir(room, {1.0, 4.0, 2.0}, {2.5, 2.5, 1.5}, 16000.0, 8000));
    EXPECT_GT(e, prev) << "order " << order;
    prev = e;
  }
}

TEST(ImageMethod, RejectsPositionsOutsideRoom) {
  RoomSpec room;
  EXPECT_THROW(image_method_rir(room, {6.0, 1.0, 1.0}, {2.0, 2.0, 1.5}, 16000.0), ContractError);
  EXPECT_THROW(image_method_rir(room, {1.0, 1.0, 1.0}, {2.0, 2.0, 0.0}, 16000.0), ContractError);
  room.rt60 = 0.01;
  EXPECT_THROW(image_method_rir(room, {1.0, 1.0, 1.0}, {2.0, 2.0, 1.5}, 16000.0), ContractError);
}

TEST(SynthSource, DeterministicAndPeakNormalized) {
  for (auto kind : {SignalKind::kSpeechlike, SignalKind::kTone, SignalKind::kNoiseburst}) {
    const auto a = synth_source(kind, 1.0, 16000.0, 9);
    const auto b = synth_source(kind, 1.0, 16000.0, 9);
    EXPECT_EQ(a, b) << ToString(kind);
    ASSERT_EQ(a.size(), 16000u);
    double peak = 0.0;
    for (double v : a) peak = std::max(peak, std::abs(v));
    EXPECT_NEAR(peak, 0.5, 1e-6);
  }
  EXPECT_NE(synth_source(SignalKind::kSpeechlike, 1.0, 16000.0, 1),
            synth_source(SignalKind::kSpeechlike, 1.0, 16000.0, 2));
  EXPECT_THROW(synth_source(SignalKind::kTone, 0.0, 16000.0, 1), ContractError);
  EXPECT_EQ(ParseSignalKind(ToString(SignalKind::kNoiseburst)), SignalKind::kNoiseburst);
  EXPECT_THROW(ParseSignalKind("violin"), ContractError);
}

TEST(SynthSource, EnvelopeModulationPeaksAtSyllableRate) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const double fs = 16000.0;
    const auto x = synth_source(SignalKind::kSpeechlike, 8.0, fs, seed);
    const std::size_t frame = 160;
    std::vector<double> env;
    for (std::size_t i = 0; i + frame <= x.size(); i += frame) {
      double s = 0.0;
      for (std::size_t j = 0; j < frame; ++j) s += x[i + j] * x[i + j];
      env.push_back(std::sqrt(s / frame));
    }
    const double mean = std::accumulate(env.begin(), env.end(), 0.0) / env.size();
    for (auto& v : env) v -= mean;
    const double rate = fs / frame, n = static_cast<double>(env.size());
    double best_hz = 0.0, best = -1.0;
    for (double hz = 0.5; hz <= 30.0; hz += 1.0 / 8.0) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < env.size(); ++i) {
        acc += env[i] * std::polar(1.0, -2.0 * kPiD * hz * i / rate);
      }
      if (std::norm(acc) / n > best) {
        best = std::norm(acc) / n;
        best_hz = hz;
      }
    }
    EXPECT_GE(best_hz, 2.0) << "seed " << seed;
    EXPECT_LE(best_hz, 8.0) << "seed " << seed;
  }
}

TEST(RenderScene, ShapeAndTruth) {
  auto spec = testutil::AnechoicSpec(5, {10.0, 100.0, 250.0}, 61, 0.25);
  spec.sources[1].active = false;
  spec.snr_db = 20.0;
  const auto r = render_scene(spec);
  EXPECT_EQ(r.mixture.channels.size(), 5u);
  EXPECT_EQ(r.mixture.length(), 4000u);
  EXPECT_EQ(r.truth.true_count, 2u);
  EXPECT_EQ(r.truth.active, (std::vector<bool>{true, false, true}));
  EXPECT_EQ(r.truth.doa_bins, (std::vector<std::size_t>{2, 20, 50}));
  EXPECT_EQ(r.truth.ActiveDoasDeg(72), (std::vector<double>{10.0, 250.0}));
}

TEST(RenderScene, MeasuredSnrMatchesSpec) {
  for (double snr : {0.0, 10.0, 20.0}) {
    auto spec = testutil::AnechoicSpec(4, {45.0, 200.0}, 63, 0.5);
    spec.room.rt60 = 0.25;
    spec.room.max_order = 10;
    spec.snr_db = snr;
    const auto noisy = render_scene(spec);
    spec.snr_db.reset();
    const auto clean = render_scene(spec);
    Waveform noise = noisy.mixture;
    for (std::size_t m = 0; m < noise.channels.size(); ++m) {
      for (std::size_t t = 0; t < noise.length(); ++t) {
        noise.channels[m][t] -= clean.mixture.channels[m][t];
      }
    }
    EXPECT_NEAR(10.0 * std::log10(Power(clean.mixture) / Power(noise)), snr, 0.5);
  }
}

TEST(RenderScene, LinearInSources) {
  auto both = testutil::AnechoicSpec(4, {30.0, 150.0}, 65, 0.3);
  both.room.rt60 = 0.2;
  both.room.max_order = 6;
  both.sources[1].gain_db = -2.0;
  auto first = both, second = both;
  first.sources[1].active = false;
  second.sources[0].active = false;
  const auto a = render_scene(first), b = render_scene(second), ab = render_scene(both);
  for (std::size_t m = 0; m < 4; ++m) {
    for (std::size_t t = 0; t < ab.mixture.length(); ++t) {
      EXPECT_NEAR(ab.mixture.channels[m][t], a.mixture.channels[m][t] + b.mixture.channels[m][t], 1e-10);
    }
  }
}

TEST(RenderScene, NoActiveSourceWithNoiseIsRejected) {
  auto spec = testutil::AnechoicSpec(4, {30.0}, 67, 0.2);
  spec.sources[0].active = false;
  spec.snr_db = 20.0;
  EXPECT_THROW(render_scene(spec), ContractError);
  spec.snr_db.reset();
  const auto r = render_scene(spec);
  for (const auto& ch : r.mixture.channels) EXPECT_EQ(Energy(ch), 0.0);
}

TEST(RenderScene, IdenticalSeedsGiveIdenticalWavBytes) {
  const auto dir = testutil::TempDir("render_det");
  auto spec = testutil::AnechoicSpec(4, {80.0}, 69, 0.3);
  spec.room.rt60 = 0.3;
  spec.room.max_order = 8;
  spec.snr_db = 15.0;
  write_wav(dir / "a.wav", render_scene(spec).mixture);
  write_wav(dir / "b.wav", render_scene(spec).mixture);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(is), {});
  };
  EXPECT_EQ(slurp(dir / "a.wav"), slurp(dir / "b.wav"));
}

// Integer lag maximizing the PHAT-weighted cross-correlation of b against a.
long GccPhatLag(const std::vector<double>& a, const std::vector<double>& b, long max_lag) {
  const std::size_t n = 2 * a.size();
  std::vector<double> pa(a), pb(b);
  pa.resize(n, 0.0);
  pb.resize(n, 0.0);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, pa);
  fft.fwd(fb, pb);
  for (std::size_t k = 0; k < fa.size(); ++k) {
    const auto c = fb[k] * std::conj(fa[k]);
    fa[k] = c / std::max(std::abs(c), 1e-12);
  }
  std::vector<double> cc;
  fft.inv(cc, fa);
  long best = 0;
  double best_v = -1e300;
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    const double v = cc[static_cast<std::size_t>((lag + static_cast<long>(n)) % static_cast<long>(n))];
    if (v > best_v) {
      best_v = v;
      best = lag;
    }
  }
  return best;
}

TEST(RenderScene, DirectPathDelaysRecoverableByGccPhat) {
  for (double az : {0.0, 70.0, 225.0}) {
    const auto spec = testutil::AnechoicSpec(6, {az}, 71, 0.5);
    const auto r = render_scene(spec);
    const Eigen::Vector3d src = spec.SourcePosition(0);
    const auto& mics = spec.array.mics();
    for (std::size_t m = 1; m < 6; ++m) {
      const double d0 = (src - spec.array_center - mics[0]).norm();
      const double dm = (src - spec.array_center - mics[m]).norm();
      const double tdoa = (dm - d0) / 343.0 * 16000.0;
      const long lag = GccPhatLag(r.mixture.channels[0], r.mixture.channels[m], 20);
      EXPECT_LE(std::abs(static_cast<double>(lag) - tdoa), 1.0)
          << "az " << az << " mic " << m << " expected " << tdoa;
    }
  }
}

TEST(SceneSpec, JsonRoundTripAndValidation) {
  auto spec = testutil::AnechoicSpec(4, {15.0, 300.0}, 73, 0.4);
  spec.sources[1].gain_db = 1.5;
  spec.sources[1].kind = SignalKind::kTone;
  spec.snr_db = 12.0;
  const auto back = SceneSpecFromJson(ToJson(spec));
  auto strip = [](nlohmann::json j) {
    j.erase("array");
    return j;
  };
  EXPECT_EQ(strip(ToJson(back)), strip(ToJson(spec)));
  for (std::size_t m = 0; m < 4; ++m) {
    EXPECT_LT((back.array.mics()[m] - spec.array.mics()[m]).norm(), 1e-12);
  }
  spec.sources[0].distance = 4.0;
  EXPECT_THROW(spec.Validate(), ContractError);
  spec.sources[0].distance = 1.0;
  spec.duration = 0.0;
  EXPECT_THROW(spec.Validate(), ContractError);
}

TEST(Dataset, ConditionOneEverySourceActive) {
  DatasetTemplate t;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto spec = draw_scene(t, DeriveSeed(5, i));
    EXPECT_GE(spec.sources.size(), t.min_persons);
    EXPECT_LE(spec.sources.size(), t.max_persons);
    for (const auto& s : spec.sources) EXPECT_TRUE(s.active);
  }
}

TEST(Dataset, ConditionTwoFourPersonsTwoOrThreeActive) {
  auto t = DatasetTemplate::Condition2();
  t.min_persons = t.max_persons = 4;
  std::set<std::size_t> seen;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto spec = draw_scene(t, DeriveSeed(6, i));
    ASSERT_EQ(spec.sources.size(), 4u);
    const auto n = MakeGroundTruth(spec).true_count;
    EXPECT_TRUE(n == 2 || n == 3) << n;
    seen.insert(n);
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(Dataset, DrawsRespectPublishedRangesAndSeparation) {
  auto t = DatasetTemplate::Condition2();
  t.min_separation_deg = 40.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto spec = draw_scene(t, DeriveSeed(7, i));
    EXPECT_GE(spec.room.rt60, 0.2);
    EXPECT_LE(spec.room.rt60, 0.4);
    for (std::size_t a = 0; a < spec.sources.size(); ++a) {
      const auto& s = spec.sources[a];
      EXPECT_GE(s.distance, 0.5);
      EXPECT_LE(s.distance, 2.0);
      EXPECT_LE(std::abs(s.gain_db), 2.5);
      for (std::size_t b = a + 1; b < spec.sources.size(); ++b) {
        const double d = std::fmod(std::abs(s.azimuth_deg - spec.sources[b].azimuth_deg), 360.0);
        EXPECT_GE(std::min(d, 360.0 - d), 40.0);
      }
    }
    EXPECT_NO_THROW(spec.Validate());
  }
}

TEST(Dataset, InfeasibleSeparationIsAnError) {
  DatasetTemplate t;
  t.min_persons = t.max_persons = 3;
  t.min_separation_deg = 150.0;
  EXPECT_THROW(draw_scene(t, 1), ContractError);
}

TEST(Dataset, SeedsAreDistinctAndStable) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(DeriveSeed(42, i));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_EQ(DeriveSeed(42, 3), DeriveSeed(42, 3));
  EXPECT_NE(DeriveSeed(42, 3), DeriveSeed(43, 3));
}

TEST(Dataset, WritesWavTruthAndManifest) {
  const auto dir = testutil::TempDir("dataset");
  auto t = DatasetTemplate::Condition2();
  t.duration = 0.2;
  t.max_order = 4;
  const auto entries = make_dataset(t, 3, 11, dir);
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  for (const auto& e : entries) {
    const auto w = read_wav(e.wav);
    EXPECT_EQ(w.channels.size(), 6u);
    EXPECT_EQ(w.length(), 3200u);
    std::ifstream is(e.truth);
    const auto j = nlohmann::json::parse(is);
    for (const char* key : {"doas_deg", "active", "rt60", "snr_db", "seed"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(SceneSpecFromJson(j).seed, e.spec.seed);
  }
  EXPECT_THROW(make_dataset(t, 0, 11, dir), ContractError);
}

}  // namespace
}  // namespace sslvi
