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

#include <filesystem>
#include <optional>

#include "sslvi/dsp.hpp"

namespace sslvi {

enum class WavFormat { kPcm16, kFloat32 };

/// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples.
/// When `expected_rate` is set and differs from the header, throws InputError
/// (no resampling is performed).
Waveform read_wav(const std::filesystem::path& path,
                  std::optional<double> expected_rate = std::nullopt);

/// Writes every channel interleaved. PCM-16 output clips to [-1, 1].
void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavFormat format = WavFormat::kFloat32);

}  // namespace sslvi
