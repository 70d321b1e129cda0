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

#include "run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "sslvi/error.hpp"

namespace sslvi::cli {

void RunConfig::Validate() const {
  fit.Validate();
  priors.Validate();
  dataset.Validate();
  SSLVI_REQUIRE(pi_threshold >= 0.0 && pi_threshold < 1.0, "config: pi_threshold must be in [0, 1)");
  SSLVI_REQUIRE(w_threshold >= 0.0 && w_threshold < 1.0, "config: w_threshold must be in [0, 1)");
  SSLVI_REQUIRE(window_len >= 2 && hop >= 1 && hop <= window_len,
                "config: need window >= 2 and 1 <= hop <= window");
  SSLVI_REQUIRE(grid_size >= 2, "config: grid_size must be >= 2");
  SSLVI_REQUIRE(max_peaks >= 1, "config: max_peaks must be >= 1");
  SSLVI_REQUIRE(peak_rel_threshold >= 0.0 && peak_rel_threshold <= 1.0,
                "config: peak_rel_threshold must be in [0, 1]");
  SSLVI_REQUIRE(tolerance_deg > 0.0, "config: tolerance_deg must be > 0");
  SSLVI_REQUIRE(jobs >= 1, "config: jobs must be >= 1");
}

std::size_t RunConfig::MusicSources(std::size_t n_mics) const {
  if (music_sources > 0) return music_sources;
  if (n_mics <= 2) return 1;
  return n_mics <= 4 ? 2 : 3;
}

nlohmann::json ToJson(const RunConfig& c) {
  const FitConfig& f = c.fit;
  return {
      {"seed", c.seed},
      {"fit",
       {{"num_sources", f.num_sources},
        {"iters", f.iters},
        {"lr", f.lr},
        {"n_mc", f.n_mc},
        {"eps", f.eps},
        {"init_mode", ToString(f.init_mode)},
        {"mixing", ToString(f.mixing)},
        {"fix_pi", f.fix_pi},
        {"common_random_numbers", f.common_random_numbers},
        {"adam_beta1", f.adam_beta1},
        {"adam_beta2", f.adam_beta2},
        {"adam_epsilon", f.adam_epsilon},
        {"init_peak_logit", f.init_peak_logit},
        {"init_width_bins", f.init_width_bins},
        {"init_min_separation_bins", f.init_min_separation_bins}}},
      {"band", {{"low_hz", f.band.low_hz}, {"high_hz", f.band.high_hz}}},
      {"priors", {{"alpha0", c.priors.alpha0}, {"sigma0", c.priors.sigma0}}},
      {"thresholds", {{"pi", c.pi_threshold}, {"w", c.w_threshold}}},
      {"stft", {{"window", c.window_len}, {"hop", c.hop}}},
      {"grid_size", c.grid_size},
      {"music_sources", c.music_sources},
      {"max_peaks", c.max_peaks},
      {"peak_rel_threshold", c.peak_rel_threshold},
      {"tolerance_deg", c.tolerance_deg},
      {"jobs", c.jobs},
      {"dataset", ToJson(c.dataset)},
  };
}

RunConfig RunConfigFromJson(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("fit")) {
      const auto& f = j["fit"];
      FitConfig& o = c.fit;
      o.num_sources = f.value("num_sources", o.num_sources);
      o.iters = f.value("iters", o.iters);
      o.lr = f.value("lr", o.lr);
      o.n_mc = f.value("n_mc", o.n_mc);
      o.eps = f.value("eps", o.eps);
      if (f.contains("init_mode")) o.init_mode = ParseInitMode(f["init_mode"].get<std::string>());
      if (f.contains("mixing")) o.mixing = ParseMixingEstimate(f["mixing"].get<std::string>());
      o.fix_pi = f.value("fix_pi", o.fix_pi);
      o.common_random_numbers = f.value("common_random_numbers", o.common_random_numbers);
      o.adam_beta1 = f.value("adam_beta1", o.adam_beta1);
      o.adam_beta2 = f.value("adam_beta2", o.adam_beta2);
      o.adam_epsilon = f.value("adam_epsilon", o.adam_epsilon);
      o.init_peak_logit = f.value("init_peak_logit", o.init_peak_logit);
      o.init_width_bins = f.value("init_width_bins", o.init_width_bins);
      o.init_min_separation_bins = f.value("init_min_separation_bins", o.init_min_separation_bins);
    }
    if (j.contains("band")) {
      c.fit.band.low_hz = j["band"].value("low_hz", c.fit.band.low_hz);
      c.fit.band.high_hz = j["band"].value("high_hz", c.fit.band.high_hz);
    }
    if (j.contains("priors")) {
      c.priors.alpha0 = j["priors"].value("alpha0", c.priors.alpha0);
      c.priors.sigma0 = j["priors"].value("sigma0", c.priors.sigma0);
    }
    if (j.contains("thresholds")) {
      c.pi_threshold = j["thresholds"].value("pi", c.pi_threshold);
      c.w_threshold = j["thresholds"].value("w", c.w_threshold);
    }
    if (j.contains("stft")) {
      c.window_len = j["stft"].value("window", c.window_len);
      c.hop = j["stft"].value("hop", c.hop);
    }
    c.grid_size = j.value("grid_size", c.grid_size);
    c.music_sources = j.value("music_sources", c.music_sources);
    c.max_peaks = j.value("max_peaks", c.max_peaks);
    c.peak_rel_threshold = j.value("peak_rel_threshold", c.peak_rel_threshold);
    c.tolerance_deg = j.value("tolerance_deg", c.tolerance_deg);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("dataset")) c.dataset = DatasetTemplateFromJson(j["dataset"]);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  c.Validate();
  return c;
}

RunConfig ResolveConfig(const std::optional<std::filesystem::path>& config_path,
                        const nlohmann::json& overrides) {
  std::optional<std::filesystem::path> path = config_path;
  if (!path) {
    if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') path = env;
  }
  nlohmann::json merged = ToJson(RunConfig{});
  if (path) {
    std::ifstream in(*path);
    if (!in) throw IoError("config: cannot open " + path->string());
    nlohmann::json file;
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError("config: " + path->string() + ": " + e.what());
    }
    if (!file.is_object()) throw InputError("config: " + path->string() + " is not a JSON object");
    merged.merge_patch(file);
  }
  merged.merge_patch(overrides);
  return RunConfigFromJson(merged);
}

}  // namespace sslvi::cli
