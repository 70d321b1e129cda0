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

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "sslvi/array.hpp"
#include "sslvi/baselines.hpp"
#include "sslvi/dsp.hpp"
#include "sslvi/error.hpp"
#include "sslvi/eval.hpp"
#include "sslvi/wav.hpp"

namespace sslvi::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

struct SceneRef {
  std::string id;
  fs::path wav;
  std::optional<fs::path> description;
};

std::vector<SceneRef> ResolveScenes(const fs::path& input) {
  const std::string ext = input.extension().string();
  if (ext == ".wav") {
    fs::path desc = input;
    desc.replace_extension(".json");
    return {{input.stem().string(), input,
             fs::exists(desc) ? std::optional<fs::path>(desc) : std::nullopt}};
  }
  if (ext != ".json") throw InputError("localize: expected a .json or .wav input: " + input.string());
  const json j = ReadJson(input);
  const fs::path base = input.parent_path();
  if (j.contains("scenes")) {
    std::vector<SceneRef> out;
    for (const auto& s : j["scenes"]) {
      out.push_back({s.at("id").get<std::string>(), base / s.at("wav").get<std::string>(),
                     base / s.at("truth").get<std::string>()});
    }
    return out;
  }
  fs::path wav = input;
  wav.replace_extension(".wav");
  return {{j.value("id", input.stem().string()), wav, input}};
}

fs::path ResultPath(const fs::path& dir, const std::string& id, const std::string& method) {
  return dir / (id + "." + method + ".json");
}

bool HasUsableResult(const fs::path& path) {
  if (!fs::exists(path)) return false;
  try {
    const json j = ReadJson(path);
    return !j.contains("error");
  } catch (const Error&) {
    return false;
  }
}

std::vector<double> ActiveTruth(const SceneSpec& spec) {
  return MakeGroundTruth(spec).ActiveDoasDeg(spec.grid_size);
}

json LocalizeScene(const RunConfig& config, const LocalizeOptions& opts, const SceneRef& ref) {
  std::optional<SceneSpec> spec;
  ArrayGeometry array = ArrayGeometry::Circular(2);
  if (ref.description) {
    spec = SceneSpecFromJson(ReadJson(*ref.description));
    array = spec->array;
  } else if (opts.array) {
    array = ArrayGeometry::Load(*opts.array);
  } else {
    throw InputError("no scene description or --array for " + ref.wav.string());
  }
  const Waveform w = read_wav(ref.wav, spec ? std::optional<double>(spec->sample_rate) : std::nullopt);
  if (w.channels.size() != array.size()) {
    throw ShapeError(ref.wav.string() + " has " + std::to_string(w.channels.size()) +
                     " channels but the array has " + std::to_string(array.size()) + " mics");
  }
  const MultichannelSpectrogram x = stft(w, config.window_len, config.hop);
  const DirectionGrid grid(config.grid_size);
  const SteeringField field = build_field(array, grid, x.bin_frequencies());

  SceneResult result;
  result.id = ref.id;
  result.method = opts.method;
  result.n_mics = array.size();
  if (spec) result.true_doas = ActiveTruth(*spec);

  json extra = json::object();
  if (opts.method == "vi") {
    FitConfig fc = config.fit;
    fc.seed = DeriveSeed(config.seed, HashId(ref.id));
    const FitResult fr = fit(x, field, config.priors, fc);
    const LocalizationResult loc = localize(fr.params, config.pi_threshold, config.w_threshold);
    result.est_doas = loc.ActiveDoasDeg();
    result.candidates = loc;
    extra["fit"] = ToJson(fr);
  } else {
    const SpatialSpectrum s =
        opts.method == "music"
            ? music_spectrum(x, field, std::min(config.MusicSources(array.size()), array.size() - 1),
                             config.fit.band)
            : srp_phat(x, field, config.fit.band);
    for (std::size_t bin : peak_pick(s, config.max_peaks, config.peak_rel_threshold)) {
      result.est_doas.push_back(grid.degrees(bin));
    }
    if (opts.dump_spectrum) extra["spectrum"] = ToJson(s);
  }
  json j = ToJson(result);
  j.update(extra);
  return j;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void ParallelFor(std::size_t n, std::size_t jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  const std::size_t threads = std::min(jobs, n);
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

std::string Fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::uint64_t HashId(const std::string& id) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void WriteFileAtomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::vector<GradCheckCase> ParseSizes(const std::string& spec, std::uint64_t seed) {
  std::vector<GradCheckCase> out;
  std::stringstream all(spec);
  std::string item;
  while (std::getline(all, item, ';')) {
    if (item.empty()) continue;
    GradCheckCase c;
    char sep1 = 0, sep2 = 0;
    std::istringstream is(item);
    if (!(is >> c.num_sources >> sep1 >> c.directions >> sep2 >> c.mics) || sep1 != ',' ||
        sep2 != ',') {
      throw InputError("gradcheck: bad size '" + item + "', expected K,D,M");
    }
    c.seed = seed + out.size();
    out.push_back(c);
  }
  if (out.empty()) throw InputError("gradcheck: no sizes given");
  return out;
}

std::vector<double> ParseGrid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(spec);
    if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0 || hi < lo) {
      throw InputError("bad grid '" + spec + "', expected lo:hi:step");
    }
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
  }
  std::stringstream all(spec);
  std::string item;
  while (std::getline(all, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("bad grid value '" + item + "'");
    }
  }
  if (out.empty()) throw InputError("empty grid");
  return out;
}

int cmd_simulate(const RunConfig& config, const SimulateOptions& opts, std::ostream& out,
                 std::ostream&) {
  SSLVI_REQUIRE(opts.n_scenes >= 1, "simulate: need at least one scene");
  const auto entries = make_dataset(config.dataset, opts.n_scenes, config.seed, opts.out_dir);
  WriteFileAtomic(opts.out_dir / "config.json", ToJson(config).dump(2) + "\n");
  std::size_t active = 0;
  for (const auto& e : entries) active += MakeGroundTruth(e.spec).true_count;
  out << "wrote " << entries.size() << " scenes (" << active << " active sources) to "
      << opts.out_dir.string() << "\n";
  return kOk;
}

int cmd_localize(const RunConfig& config, const LocalizeOptions& opts, std::ostream& out,
                 std::ostream& err) {
  if (opts.method != "vi" && opts.method != "music" && opts.method != "srp") {
    throw ContractError("localize: unknown method '" + opts.method + "'");
  }
  const auto scenes = ResolveScenes(opts.input);
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec) throw IoError("cannot create " + opts.out_dir.string() + ": " + ec.message());

  std::mutex log_mutex;
  std::atomic<std::size_t> failed{0}, skipped{0};
  ParallelFor(scenes.size(), config.jobs, [&](std::size_t i) {
    const SceneRef& ref = scenes[i];
    const fs::path path = ResultPath(opts.out_dir, ref.id, opts.method);
    if (!opts.force && HasUsableResult(path)) {
      ++skipped;
      return;
    }
    json result;
    try {
      result = LocalizeScene(config, opts, ref);
    } catch (const std::exception& e) {
      ++failed;
      result = {{"id", ref.id}, {"method", opts.method}, {"error", e.what()}};
      std::lock_guard lock(log_mutex);
      err << "error: " << ref.id << ": " << e.what() << "\n";
    }
    WriteFileAtomic(path, result.dump(2) + "\n");
  });
  out << "localized " << scenes.size() - skipped - failed << " of " << scenes.size()
      << " scenes with " << opts.method;
  if (skipped > 0) out << " (" << skipped << " already done)";
  if (failed > 0) out << " (" << failed << " failed)";
  out << "\n";
  return failed > 0 ? kRuntime : kOk;
}

int cmd_evaluate(const RunConfig& config, const EvaluateOptions& opts, std::ostream& out,
                 std::ostream& err) {
  const json manifest = ReadJson(opts.manifest);
  if (!manifest.contains("scenes")) throw InputError(opts.manifest.string() + " is not a manifest");
  const fs::path base = opts.manifest.parent_path();

  std::set<std::string> methods;
  if (!fs::is_directory(opts.results_dir)) {
    throw IoError("results directory not found: " + opts.results_dir.string());
  }
  for (const auto& entry : fs::directory_iterator(opts.results_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".json" || name.ends_with(".tmp")) continue;
    const std::string stem = entry.path().stem().string();
    const auto dot = stem.rfind('.');
    if (dot != std::string::npos) methods.insert(stem.substr(dot + 1));
  }
  methods.erase("report");
  methods.erase("sweep");

  std::vector<SceneResult> results;
  std::vector<std::string> missing;
  for (const auto& method : methods) {
    for (const auto& s : manifest["scenes"]) {
      const std::string id = s.at("id").get<std::string>();
      const fs::path path = ResultPath(opts.results_dir, id, method);
      const std::string key = id + "." + method;
      if (!fs::exists(path)) {
        missing.push_back(key);
        continue;
      }
      const json j = ReadJson(path);
      if (j.contains("error")) {
        missing.push_back(key);
        continue;
      }
      SceneResult r = SceneResultFromJson(j);
      const SceneSpec spec = SceneSpecFromJson(ReadJson(base / s.at("truth").get<std::string>()));
      r.true_doas = ActiveTruth(spec);
      r.n_mics = spec.array.size();
      results.push_back(std::move(r));
    }
  }
  if (results.empty()) throw InputError("evaluate: no usable results in " + opts.results_dir.string());

  ScoreReport report = evaluate(results, config.tolerance_deg);
  report.missing = missing;
  const fs::path out_dir = opts.out_dir.empty() ? opts.results_dir : opts.out_dir;
  fs::create_directories(out_dir);
  WriteFileAtomic(out_dir / "report.json", ToJson(report).dump(2) + "\n");
  WriteFileAtomic(out_dir / "report.csv", ToCsv(report));
  for (const auto& [method, agg] : report.overall) {
    out << method << ": scenes=" << agg.scenes << " P=" << Fixed(agg.precision)
        << " R=" << Fixed(agg.recall) << " F=" << Fixed(agg.f_measure)
        << " count=" << Fixed(agg.count_rate) << "\n";
  }
  if (!missing.empty()) err << "warning: " << missing.size() << " results missing or failed\n";

  if (!opts.sweep.empty()) {
    std::vector<SceneResult> vi;
    for (const auto& r : results) {
      if (r.candidates) vi.push_back(r);
    }
    if (vi.empty()) {
      err << "warning: no candidate lists to sweep\n";
    } else {
      const SweepResult sweep = sweep_threshold(vi, opts.sweep, config.tolerance_deg);
      WriteFileAtomic(out_dir / "sweep.json", ToJson(sweep).dump(2) + "\n");
      out << "sweep: best w-threshold " << sweep.best_threshold << " (F=" << Fixed(sweep.best_f)
          << ")\n";
    }
  }
  return kOk;
}

int cmd_gradcheck(const RunConfig& config, const GradcheckOptions& opts, std::ostream& out,
                  std::ostream& err) {
  const auto cases = opts.cases.empty() ? default_gradcheck_suite(config.seed) : opts.cases;
  GradientHook hook;
  if (opts.corrupt_gradient) {
    hook = [](Eigen::VectorXd* g) { (*g)[0] += 1e-2 * (std::abs((*g)[0]) + 1.0); };
  }
  std::map<std::string, double> worst_by_group;
  std::size_t failures = 0;
  out << "config                                  mu        log_sigma pibar_lg  log_beta  result\n";
  for (const auto& c : cases) {
    const GradCheckOutcome o = check_elbo_gradient(c, opts.tolerance, hook);
    std::string label = c.Label();
    label.resize(std::max<std::size_t>(label.size(), 38), ' ');
    out << label;
    for (const auto& g : o.groups) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "  %.2e", g.max_rel_error);
      out << buf;
      worst_by_group[g.group] = std::max(worst_by_group[g.group], g.max_rel_error);
    }
    out << "  " << (o.passed ? "ok" : "FAIL") << "\n";
    if (!o.passed) {
      ++failures;
      for (const auto& g : o.groups) {
        if (g.max_rel_error < opts.tolerance) continue;
        err << "  " << c.Label() << ": " << g.group << "[" << g.worst_index
            << "] analytic=" << g.analytic << " numeric=" << g.numeric
            << " rel=" << g.max_rel_error << "\n";
      }
    }
  }
  out << "max relative error:";
  for (const char* g : {"mu", "log_sigma", "pibar_logits", "log_beta"}) {
    char buf[48];
    std::snprintf(buf, sizeof buf, " %s=%.2e", g, worst_by_group[g]);
    out << buf;
  }
  out << "\n" << cases.size() - failures << "/" << cases.size() << " configurations passed (tol "
      << opts.tolerance << ")\n";
  return failures == 0 ? kOk : kCheckFailed;
}

int cmd_report(const RunConfig&, const ReportOptions& opts, std::ostream& out, std::ostream&) {
  const json report = ReadJson(opts.report);
  if (!report.contains("overall")) throw InputError(opts.report.string() + " is not a score report");
  out << "tolerance " << report.value("tolerance_deg", 0.0) << " deg\n\n";
  out << "method    subset        scenes  P      R      F      count\n";
  auto row = [&](const std::string& method, const std::string& subset, const json& a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-9s %-13s %6zu  %.3f  %.3f  %.3f  %.3f\n", method.c_str(),
                  subset.c_str(), a.at("scenes").get<std::size_t>(), a.at("precision").get<double>(),
                  a.at("recall").get<double>(), a.at("f_measure").get<double>(),
                  a.at("count_rate").get<double>());
    out << buf;
  };
  for (const auto& [method, agg] : report["overall"].items()) row(method, "all", agg);
  if (report.contains("by_condition")) {
    for (const auto& [method, conditions] : report["by_condition"].items()) {
      for (const auto& [condition, agg] : conditions.items()) row(method, condition, agg);
    }
  }
  if (report.contains("missing") && !report["missing"].empty()) {
    out << "\nmissing: " << report["missing"].size() << "\n";
  }
  return kOk;
}

}  // namespace sslvi::cli
