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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "run_config.hpp"
#include "sslvi/error.hpp"

namespace {

using nlohmann::json;
using sslvi::cli::ExitCode;

template <typename T>
void Set(json& patch, const json::json_pointer& ptr, const std::optional<T>& v) {
  if (v) patch[ptr] = *v;
}

struct Common {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;

  void Add(CLI::App* app) {
    app->add_option("--config", config, "JSON config file (default: $SSLVI_CONFIG)");
    app->add_option("--seed", seed, "root seed");
    app->add_option("-j,--jobs", jobs, "scene-level worker threads");
  }
  void Patch(json& p) const {
    Set(p, "/seed"_json_pointer, seed);
    Set(p, "/jobs"_json_pointer, jobs);
  }
};

struct DatasetFlags {
  std::optional<std::size_t> mics, min_persons, max_persons, min_active, max_active;
  std::optional<std::string> condition, snr, kind;
  std::optional<double> rt60_min, rt60_max, separation, duration, diameter;
  bool on_grid = false;

  void Add(CLI::App* app) {
    app->add_option("--mics", mics, "microphones on the circular array");
    app->add_option("--diameter", diameter, "array diameter in meters");
    app->add_option("--condition", condition, "1, 2 or all-active");
    app->add_option("--min-persons", min_persons);
    app->add_option("--max-persons", max_persons);
    app->add_option("--min-active", min_active);
    app->add_option("--max-active", max_active);
    app->add_option("--rt60-min", rt60_min);
    app->add_option("--rt60-max", rt60_max);
    app->add_option("--snr", snr, "diffuse-noise SNR in dB, or 'none'");
    app->add_option("--min-separation", separation, "minimum source separation in degrees");
    app->add_option("--duration", duration, "scene length in seconds");
    app->add_option("--kind", kind, "speechlike, tone or noiseburst");
    app->add_flag("--on-grid", on_grid, "place sources on grid bins");
  }
  void Patch(json& p) const {
    json& d = p["dataset"];
    d = json::object();
    if (mics) d["n_mics"] = *mics;
    if (diameter) d["array_diameter"] = *diameter;
    if (condition) {
      if (*condition == "all-active" || *condition == "1") {
        d["condition"] = 1;
      } else if (*condition == "2") {
        d["condition"] = 2;
      } else {
        throw sslvi::InputError("--condition must be 1, 2 or all-active");
      }
    }
    if (min_persons) d["min_persons"] = *min_persons;
    if (max_persons) d["max_persons"] = *max_persons;
    if (min_active) d["min_active"] = *min_active;
    if (max_active) d["max_active"] = *max_active;
    if (rt60_min) d["rt60_min"] = *rt60_min;
    if (rt60_max) d["rt60_max"] = *rt60_max;
    if (snr) {
      if (*snr == "none") {
        d["snr_db"] = nullptr;
      } else {
        try {
          d["snr_db"] = std::stod(*snr);
        } catch (const std::exception&) {
          throw sslvi::InputError("--snr must be a number or 'none'");
        }
      }
    }
    if (separation) d["min_separation_deg"] = *separation;
    if (duration) d["duration"] = *duration;
    if (kind) d["kind"] = *kind;
    if (on_grid) d["on_grid"] = true;
    if (d.empty()) p.erase("dataset");
  }
};

struct FitFlags {
  std::optional<std::size_t> sources, grid, music_sources, max_peaks;
  std::optional<int> iters, n_mc;
  std::optional<double> lr, alpha0, sigma0, pi_thresh, w_thresh, peak_thresh, band_low,
      band_high, eps;
  std::optional<std::string> init, mixing;
  bool fix_pi = false;

  void Add(CLI::App* app) {
    app->add_option("-K,--sources", sources, "source classes K");
    app->add_option("--iters", iters, "optimizer iterations");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--n-mc", n_mc, "Monte Carlo draws per iteration");
    app->add_option("--eps", eps, "SCM ridge");
    app->add_option("--alpha0", alpha0, "Dirichlet prior concentration");
    app->add_option("--sigma0", sigma0, "log-normal prior scale");
    app->add_option("--pi-threshold", pi_thresh, "mixing-level threshold");
    app->add_option("--w-threshold", w_thresh, "DoA-indicator peak threshold");
    app->add_option("--init", init, "random or beam-power");
    app->add_option("--mixing", mixing, "mean or log-expectation");
    app->add_flag("--fix-pi", fix_pi, "hold mixing levels at 1/K");
    app->add_option("--grid", grid, "direction grid size D");
    app->add_option("--music-sources", music_sources, "MUSIC subspace size (0 = by M)");
    app->add_option("--max-peaks", max_peaks, "baseline peak count limit");
    app->add_option("--peak-threshold", peak_thresh, "baseline relative peak threshold");
    app->add_option("--band-low", band_low, "lowest frequency used, Hz");
    app->add_option("--band-high", band_high, "highest frequency used, Hz");
  }
  void Patch(json& p) const {
    Set(p, "/fit/num_sources"_json_pointer, sources);
    Set(p, "/fit/iters"_json_pointer, iters);
    Set(p, "/fit/lr"_json_pointer, lr);
    Set(p, "/fit/n_mc"_json_pointer, n_mc);
    Set(p, "/fit/eps"_json_pointer, eps);
    Set(p, "/fit/init_mode"_json_pointer, init);
    Set(p, "/fit/mixing"_json_pointer, mixing);
    if (fix_pi) p["fit"]["fix_pi"] = true;
    Set(p, "/priors/alpha0"_json_pointer, alpha0);
    Set(p, "/priors/sigma0"_json_pointer, sigma0);
    Set(p, "/thresholds/pi"_json_pointer, pi_thresh);
    Set(p, "/thresholds/w"_json_pointer, w_thresh);
    Set(p, "/grid_size"_json_pointer, grid);
    Set(p, "/music_sources"_json_pointer, music_sources);
    Set(p, "/max_peaks"_json_pointer, max_peaks);
    Set(p, "/peak_rel_threshold"_json_pointer, peak_thresh);
    Set(p, "/band/low_hz"_json_pointer, band_low);
    Set(p, "/band/high_hz"_json_pointer, band_high);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sslvi: sound source localization by variational inference"};
  app.require_subcommand(1);

  Common common;
  DatasetFlags dataset;
  FitFlags fitflags;
  std::optional<double> tol;

  sslvi::cli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "render a simulated dataset");
  common.Add(simulate);
  dataset.Add(simulate);
  simulate->add_option("-o,--out", sim.out_dir, "output directory")->required();
  simulate->add_option("-n,--scenes", sim.n_scenes, "number of scenes");

  sslvi::cli::LocalizeOptions loc;
  std::optional<std::string> array_path;
  auto* localize = app.add_subcommand("localize", "estimate DoAs for scenes");
  common.Add(localize);
  fitflags.Add(localize);
  localize->add_option("input", loc.input, "manifest.json, scene .json or .wav")->required();
  localize->add_option("-m,--method", loc.method, "vi, music or srp")
      ->check(CLI::IsMember({"vi", "music", "srp"}));
  localize->add_option("-o,--out", loc.out_dir, "result directory")->required();
  localize->add_option("--array", array_path, "array geometry JSON for bare WAV input");
  localize->add_flag("--dump-spectrum", loc.dump_spectrum, "store baseline spectra");
  localize->add_flag("--force", loc.force, "recompute existing results");

  sslvi::cli::EvaluateOptions ev;
  std::optional<std::string> sweep;
  auto* evaluate = app.add_subcommand("evaluate", "score results against ground truth");
  common.Add(evaluate);
  evaluate->add_option("-r,--results", ev.results_dir, "result directory")->required();
  evaluate->add_option("--manifest", ev.manifest, "dataset manifest.json")->required();
  evaluate->add_option("-o,--out", ev.out_dir, "report directory (default: results)");
  evaluate->add_option("--tol", tol, "matching tolerance in degrees");
  evaluate->add_option("--sweep", sweep, "w-threshold grid, lo:hi:step or a,b,c");

  sslvi::cli::GradcheckOptions gc;
  std::optional<std::string> sizes;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference ELBO gradient check");
  common.Add(gradcheck);
  gradcheck->add_option("--sizes", sizes, "K,D,M triples separated by ';'");
  gradcheck->add_option("--tol", gc.tolerance, "relative error tolerance");
  gradcheck->add_flag("--corrupt-gradient", gc.corrupt_gradient)->group("");

  sslvi::cli::ReportOptions rep;
  auto* report = app.add_subcommand("report", "print a score report as a table");
  common.Add(report);
  report->add_option("report", rep.report, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::kOk : ExitCode::kUsage;
  }

  sslvi::cli::RunConfig config;
  try {
    json patch = json::object();
    common.Patch(patch);
    if (simulate->parsed()) dataset.Patch(patch);
    if (localize->parsed()) fitflags.Patch(patch);
    Set(patch, "/tolerance_deg"_json_pointer, tol);
    std::optional<std::filesystem::path> path;
    if (common.config) path = *common.config;
    config = sslvi::cli::ResolveConfig(path, patch);
    if (array_path) loc.array = *array_path;
    if (sweep) ev.sweep = sslvi::cli::ParseGrid(*sweep);
    if (sizes) gc.cases = sslvi::cli::ParseSizes(*sizes, config.seed);
  } catch (const std::exception& e) {
    std::cerr << "sslvi: " << e.what() << "\n";
    return ExitCode::kUsage;
  }
  std::cout << "config " << sslvi::cli::ToJson(config).dump() << "\n";

  try {
    if (simulate->parsed()) return sslvi::cli::cmd_simulate(config, sim, std::cout, std::cerr);
    if (localize->parsed()) return sslvi::cli::cmd_localize(config, loc, std::cout, std::cerr);
    if (evaluate->parsed()) return sslvi::cli::cmd_evaluate(config, ev, std::cout, std::cerr);
    if (gradcheck->parsed()) return sslvi::cli::cmd_gradcheck(config, gc, std::cout, std::cerr);
    return sslvi::cli::cmd_report(config, rep, std::cout, std::cerr);
  } catch (const sslvi::ContractError& e) {
    std::cerr << "sslvi: " << e.what() << "\n";
    return ExitCode::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "sslvi: " << e.what() << "\n";
    return ExitCode::kRuntime;
  }
}
