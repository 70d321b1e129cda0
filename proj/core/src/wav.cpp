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

#include "sslvi/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sslvi/error.hpp"

namespace sslvi {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T ReadLe(const std::vector<char>& buf, std::size_t pos) {
  if (pos + sizeof(T) > buf.size()) throw InputError("wav: truncated file");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

template <typename T>
void WriteLe(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path,
                  std::optional<double> expected_rate) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("wav: cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw InputError("wav: " + path.string() + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_pos = 0, data_len = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const auto len = ReadLe<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      format = ReadLe<std::uint16_t>(buf, body);
      channels = ReadLe<std::uint16_t>(buf, body + 2);
      rate = ReadLe<std::uint32_t>(buf, body + 4);
      bits = ReadLe<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible && len >= 26) {
        format = ReadLe<std::uint16_t>(buf, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      // 0xFFFFFFFF marks a streamed file whose length was never patched.
      if (len != 0xFFFFFFFFu && len > buf.size() - body) {
        throw InputError("wav: truncated data chunk in " + path.string());
      }
      data_len = std::min<std::size_t>(len, buf.size() - body);
      break;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt || data_pos == 0) {
    throw InputError("wav: missing fmt or data chunk in " + path.string());
  }
  if (channels == 0 || rate == 0) throw InputError("wav: bad header");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw InputError("wav: only PCM-16 and float-32 are supported");
  }
  if (expected_rate && std::abs(*expected_rate - rate) > 1e-9) {
    throw InputError("wav: sample rate " + std::to_string(rate) +
                     " does not match expected " +
                     std::to_string(*expected_rate));
  }

  const std::size_t bytes = bits / 8;
  const std::size_t frames = data_len / (bytes * channels);
  Waveform w(static_cast<double>(rate), channels, frames);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t m = 0; m < channels; ++m) {
      const std::size_t at = data_pos + (i * channels + m) * bytes;
      w.channels[m][i] =
          pcm16 ? ReadLe<std::int16_t>(buf, at) / 32768.0
                : static_cast<double>(ReadLe<float>(buf, at));
    }
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavFormat format) {
  w.Validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("wav: cannot write " + path.string());
  const std::uint16_t channels = static_cast<std::uint16_t>(w.num_channels());
  const std::uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
  const std::uint32_t block = channels * bits / 8;
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.length()) * block;

  os.write("RIFF", 4);
  WriteLe<std::uint32_t>(os, 36 + data_len);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteLe<std::uint32_t>(os, 16);
  WriteLe<std::uint16_t>(os, format == WavFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  WriteLe<std::uint16_t>(os, channels);
  WriteLe<std::uint32_t>(os, rate);
  WriteLe<std::uint32_t>(os, rate * block);
  WriteLe<std::uint16_t>(os, static_cast<std::uint16_t>(block));
  WriteLe<std::uint16_t>(os, bits);
  os.write("data", 4);
  WriteLe<std::uint32_t>(os, data_len);
  for (std::size_t i = 0; i < w.length(); ++i) {
    for (std::size_t m = 0; m < channels; ++m) {
      const double v = w.channels[m][i];
      if (format == WavFormat::kPcm16) {
        const double c = std::clamp(v, -1.0, 32767.0 / 32768.0);
        WriteLe<std::int16_t>(os, static_cast<std::int16_t>(std::lround(c * 32768.0)));
      } else {
        WriteLe<float>(os, static_cast<float>(v));
      }
    }
  }
  if (!os) throw IoError("wav: write failed for " + path.string());
}

}  // namespace sslvi
