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

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace sslvi {

using Complex = std::complex<double>;

/// Multichannel time-domain signal. All channels share one length.
struct Waveform {
  double sample_rate = 16000.0;
  std::vector<std::vector<double>> channels;

  Waveform() = default;
  Waveform(double rate, std::size_t num_channels, std::size_t length)
      : sample_rate(rate),
        channels(num_channels, std::vector<double>(length, 0.0)) {}

  std::size_t num_channels() const { return channels.size(); }
  std::size_t length() const {
    return channels.empty() ? 0 : channels.front().size();
  }

  /// Throws InputError when channel lengths differ or the rate is not
  /// positive.
  void Validate() const;
};

/// Complex STFT tensor indexed (frame, bin, channel); the channel index is
/// fastest so every x_tf is a contiguous M-vector.
class MultichannelSpectrogram {
 public:
  MultichannelSpectrogram() = default;
  MultichannelSpectrogram(std::size_t frames, std::size_t bins,
                          std::size_t channels, double sample_rate,
                          std::size_t window_len, std::size_t hop);

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t channels() const { return channels_; }
  double sample_rate() const { return sample_rate_; }
  std::size_t window_len() const { return window_len_; }
  std::size_t hop() const { return hop_; }

  /// Center frequency of bin f in Hz.
  double bin_frequency(std::size_t f) const {
    return static_cast<double>(f) * sample_rate_ /
           static_cast<double>(window_len_);
  }
  std::vector<double> bin_frequencies() const;

  Complex& at(std::size_t t, std::size_t f, std::size_t m) {
    return data_[index(t, f) + m];
  }
  const Complex& at(std::size_t t, std::size_t f, std::size_t m) const {
    return data_[index(t, f) + m];
  }

  /// Observation vector x_tf.
  Eigen::Map<const Eigen::VectorXcd> vec(std::size_t t, std::size_t f) const {
    return {data_.data() + index(t, f), static_cast<Eigen::Index>(channels_)};
  }
  Eigen::Map<Eigen::VectorXcd> vec(std::size_t t, std::size_t f) {
    return {data_.data() + index(t, f), static_cast<Eigen::Index>(channels_)};
  }

  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

  bool AllFinite() const;
  /// Returns a copy with every entry multiplied by `c`.
  MultichannelSpectrogram Scaled(double c) const;

 private:
  std::size_t index(std::size_t t, std::size_t f) const {
    return (t * bins_ + f) * channels_;
  }

  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t channels_ = 0;
  double sample_rate_ = 0.0;
  std::size_t window_len_ = 0;
  std::size_t hop_ = 0;
  std::vector<Complex> data_;
};

/// Periodic Hann window of length n.
std::vector<double> HannWindow(std::size_t n);

/// One-sided Hann-windowed STFT. Frames start at sample 0 and only full
/// frames are produced: T = 1 + (N - window_len) / hop.
MultichannelSpectrogram stft(const Waveform& w, std::size_t window_len,
                             std::size_t hop);

/// Weighted overlap-add inverse with the least-squares synthesis window
/// w(n) / sum_t w^2(n - t*hop). Exact wherever the denominator is nonzero.
Waveform istft(const MultichannelSpectrogram& spec);

/// Sum over frames of the squared analysis window at every output sample;
/// the per-sample weight under which STFT energy equals signal energy.
std::vector<double> WindowEnergyProfile(std::size_t length,
                                        std::size_t window_len,
                                        std::size_t hop);

/// Variance floor used by mean_var_normalize.
inline constexpr double kVarianceFloor = 1e-8;

/// Normalizes every column (one frequency across time) of a T x F matrix to
/// zero mean and unit population variance. Columns with variance below
/// kVarianceFloor become zero.
Eigen::MatrixXd mean_var_normalize(const Eigen::MatrixXd& feat);

/// Frequency band used by the likelihood and both baselines.
struct Band {
  double low_hz = 100.0;
  double high_hz = 7600.0;

  /// Bins of `spec` whose center frequency lies in [low_hz, high_hz].
  std::vector<std::size_t> Bins(const MultichannelSpectrogram& spec) const;
};

}  // namespace sslvi
