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

#ifndef SSLVI_TOOLS_COMMANDS_HPP_
#define SSLVI_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "run_config.hpp"
#include "sslvi/gradcheck.hpp"

namespace sslvi::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2, kCheckFailed = 3 };

struct SimulateOptions {
  std::filesystem::path out_dir;
  std::size_t n_scenes = 20;
};

struct LocalizeOptions {
  /// A manifest.json, a scene .json or a .wav with a sibling .json.
  std::filesystem::path input;
  std::string method = "vi";
  std::filesystem::path out_dir;
  /// Geometry file for bare WAV input without a scene description.
  std::optional<std::filesystem::path> array;
  bool dump_spectrum = false;
  /// Recompute scenes whose result file already exists.
  bool force = false;
};

struct EvaluateOptions {
  std::filesystem::path results_dir;
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  /// w-threshold grid for the optional sweep over vi results.
  std::vector<double> sweep;
};

struct GradcheckOptions {
  /// Empty runs the default suite.
  std::vector<GradCheckCase> cases;
  double tolerance = kGradCheckTolerance;
  /// Test hook: perturbs one analytic gradient entry before comparison.
  bool corrupt_gradient = false;
};

struct ReportOptions {
  std::filesystem::path report;
};

int cmd_simulate(const RunConfig& config, const SimulateOptions& opts, std::ostream& out,
                 std::ostream& err);
int cmd_localize(const RunConfig& config, const LocalizeOptions& opts, std::ostream& out,
                 std::ostream& err);
int cmd_evaluate(const RunConfig& config, const EvaluateOptions& opts, std::ostream& out,
                 std::ostream& err);
int cmd_gradcheck(const RunConfig& config, const GradcheckOptions& opts, std::ostream& out,
                  std::ostream& err);
int cmd_report(const RunConfig& config, const ReportOptions& opts, std::ostream& out,
               std::ostream& err);

/// Parses "K,D,M" triples separated by ';' into gradcheck cases.
std::vector<GradCheckCase> ParseSizes(const std::string& spec, std::uint64_t seed);
/// Parses "lo:hi:step" or a comma-separated list.
std::vector<double> ParseGrid(const std::string& spec);

/// Writes `text` to `path` via a temporary file and rename.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& text);

/// Stable 64-bit FNV-1a hash, used to derive per-scene seeds from ids.
std::uint64_t HashId(const std::string& id);

}  // namespace sslvi::cli

#endif  // SSLVI_TOOLS_COMMANDS_HPP_
