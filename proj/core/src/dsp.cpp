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

#include "sslvi/dsp.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "sslvi/error.hpp"

namespace sslvi {

void Waveform::Validate() const {
  if (!(sample_rate > 0.0)) throw InputError("waveform: sample_rate must be > 0");
  for (const auto& ch : channels) {
    if (ch.size() != length()) {
      throw InputError("waveform: channels have different lengths");
    }
  }
}

MultichannelSpectrogram::MultichannelSpectrogram(std::size_t frames,
                                                 std::size_t bins,
                                                 std::size_t channels,
                                                 double sample_rate,
                                                 std::size_t window_len,
                                                 std::size_t hop)
    : frames_(frames),
      bins_(bins),
      channels_(channels),
      sample_rate_(sample_rate),
      window_len_(window_len),
      hop_(hop),
      data_(frames * bins * channels) {}

std::vector<double> MultichannelSpectrogram::bin_frequencies() const {
  std::vector<double> out(bins_);
  for (std::size_t f = 0; f < bins_; ++f) out[f] = bin_frequency(f);
  return out;
}

bool MultichannelSpectrogram::AllFinite() const {
  for (const auto& z : data_) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

MultichannelSpectrogram MultichannelSpectrogram::Scaled(double c) const {
  MultichannelSpectrogram out = *this;
  for (auto& z : out.data_) z *= c;
  return out;
}

std::vector<double> HannWindow(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

MultichannelSpectrogram stft(const Waveform& w, std::size_t window_len,
                             std::size_t hop) {
  w.Validate();
  SSLVI_REQUIRE(window_len >= 2 && window_len % 2 == 0,
                "stft: window_len must be even");
  SSLVI_REQUIRE(hop >= 1 && hop <= window_len, "stft: need 1 <= hop <= window_len");
  if (w.num_channels() == 0) throw InputError("stft: waveform has no channels");
  const std::size_t n = w.length();
  if (n < window_len) {
    throw InputError("stft: signal (" + std::to_string(n) +
                     " samples) shorter than one window (" +
                     std::to_string(window_len) + ")");
  }
  const std::size_t frames = 1 + (n - window_len) / hop;
  const std::size_t bins = window_len / 2 + 1;
  const std::size_t channels = w.num_channels();
  MultichannelSpectrogram spec(frames, bins, channels, w.sample_rate,
                               window_len, hop);

  const auto window = HannWindow(window_len);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(window_len);
  std::vector<Complex> out;
  for (std::size_t m = 0; m < channels; ++m) {
    const auto& x = w.channels[m];
    for (std::size_t t = 0; t < frames; ++t) {
      const std::size_t start = t * hop;
      for (std::size_t i = 0; i < window_len; ++i) {
        frame[i] = x[start + i] * window[i];
      }
      fft.fwd(out, frame);
      for (std::size_t f = 0; f < bins; ++f) spec.at(t, f, m) = out[f];
    }
  }
  return spec;
}

std::vector<double> WindowEnergyProfile(std::size_t length,
                                        std::size_t window_len,
                                        std::size_t hop) {
  std::vector<double> profile(length, 0.0);
  if (length < window_len) return profile;
  const auto window = HannWindow(window_len);
  const std::size_t frames = 1 + (length - window_len) / hop;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < window_len; ++i) {
      profile[t * hop + i] += window[i] * window[i];
    }
  }
  return profile;
}

Waveform istft(const MultichannelSpectrogram& spec) {
  if (spec.frames() == 0 || spec.channels() == 0) {
    throw InputError("istft: empty spectrogram");
  }
  const std::size_t window_len = spec.window_len();
  const std::size_t hop = spec.hop();
  SSLVI_REQUIRE(spec.bins() == window_len / 2 + 1,
                "istft: bin count does not match window length");
  const std::size_t length = (spec.frames() - 1) * hop + window_len;
  Waveform out(spec.sample_rate(), spec.channels(), length);

  const auto window = HannWindow(window_len);
  const auto denom = WindowEnergyProfile(length, window_len, hop);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> half(spec.bins());
  std::vector<double> frame;
  for (std::size_t m = 0; m < spec.channels(); ++m) {
    auto& y = out.channels[m];
    for (std::size_t t = 0; t < spec.frames(); ++t) {
      for (std::size_t f = 0; f < spec.bins(); ++f) half[f] = spec.at(t, f, m);
      fft.inv(frame, half, static_cast<Eigen::Index>(window_len));
      const std::size_t start = t * hop;
      for (std::size_t i = 0; i < window_len; ++i) {
        y[start + i] += frame[i] * window[i];
      }
    }
    for (std::size_t i = 0; i < length; ++i) {
      y[i] = denom[i] > 1e-12 ? y[i] / denom[i] : 0.0;
    }
  }
  return out;
}

Eigen::MatrixXd mean_var_normalize(const Eigen::MatrixXd& feat) {
  SSLVI_REQUIRE(feat.rows() >= 2, "mean_var_normalize: need at least 2 frames");
  Eigen::MatrixXd out(feat.rows(), feat.cols());
  const double n = static_cast<double>(feat.rows());
  for (Eigen::Index c = 0; c < feat.cols(); ++c) {
    const double mean = feat.col(c).sum() / n;
    const double var = (feat.col(c).array() - mean).square().sum() / n;
    if (var < kVarianceFloor) {
      out.col(c).setZero();
    } else {
      out.col(c) = (feat.col(c).array() - mean) / std::sqrt(var);
    }
  }
  return out;
}

std::vector<std::size_t> Band::Bins(const MultichannelSpectrogram& spec) const {
  std::vector<std::size_t> bins;
  for (std::size_t f = 0; f < spec.bins(); ++f) {
    const double hz = spec.bin_frequency(f);
    if (hz >= low_hz && hz <= high_hz) bins.push_back(f);
  }
  return bins;
}

}  // namespace sslvi
