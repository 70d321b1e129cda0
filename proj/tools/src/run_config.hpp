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

#ifndef SSLVI_TOOLS_RUN_CONFIG_HPP_
#define SSLVI_TOOLS_RUN_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "sslvi/inference.hpp"
#include "sslvi/simulate.hpp"
#include "sslvi/variational.hpp"

namespace sslvi::cli {

/// Environment variable naming a default JSON config file.
inline constexpr const char* kConfigEnv = "SSLVI_CONFIG";

/// Everything a run can be configured with. Layering order: built-in
/// defaults, then the JSON config file, then command-line flags.
struct RunConfig {
  std::uint64_t seed = 0;
  FitConfig fit;
  Priors priors;
  double pi_threshold = kDefaultPiThreshold;
  double w_threshold = kDefaultWeightThreshold;
  std::size_t window_len = 512;
  std::size_t hop = 160;
  std::size_t grid_size = 72;
  /// MUSIC signal-subspace size; 0 selects 1 for M = 2, 2 for M <= 4
  /// and 3 otherwise.
  std::size_t music_sources = 0;
  std::size_t max_peaks = 4;
  double peak_rel_threshold = 0.5;
  double tolerance_deg = 10.0;
  std::size_t jobs = 1;
  DatasetTemplate dataset;

  void Validate() const;
  std::size_t MusicSources(std::size_t n_mics) const;
};

nlohmann::json ToJson(const RunConfig& c);
RunConfig RunConfigFromJson(const nlohmann::json& j);

/// Reads the file named by --config, or by SSLVI_CONFIG when no flag was
/// given, and applies `overrides` (a JSON merge patch built from flags).
RunConfig ResolveConfig(const std::optional<std::filesystem::path>& config_path,
                        const nlohmann::json& overrides);

}  // namespace sslvi::cli

#endif  // SSLVI_TOOLS_RUN_CONFIG_HPP_
