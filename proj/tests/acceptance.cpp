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

// Acceptance run: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Pass criterion numbers to run a
// subset and -v for per-scene detail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "sslvi/baselines.hpp"
#include "sslvi/cgmm.hpp"
#include "sslvi/eval.hpp"
#include "sslvi/gradcheck.hpp"
#include "sslvi/inference.hpp"
#include "sslvi/simulate.hpp"
#include "sslvi/variational.hpp"
#include "sslvi/wav.hpp"

namespace {

using namespace sslvi;
using Clock = std::chrono::steady_clock;

bool g_verbose = false;

struct Outcome {
  bool pass = false;
  std::string summary;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

template <typename... Args>
std::string Format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

void Detail(const std::string& line) {
  if (g_verbose) std::printf("    %s\n", line.c_str());
}

struct Prepared {
  MultichannelSpectrogram x;
  SteeringField field;
  GroundTruth truth;
  SceneSpec spec;
};

Prepared Prepare(const SceneSpec& spec) {
  const auto r = render_scene(spec);
  Prepared p{stft(r.mixture, 512, 160), {}, r.truth, spec};
  p.field = build_field(spec.array, DirectionGrid(spec.grid_size), p.x.bin_frequencies());
  return p;
}

// ---------------------------------------------------------------- 1
Outcome GradientSuite() {
  const auto start = Clock::now();
  const auto suite = default_gradcheck_suite(2024);
  std::size_t passed = 0;
  double worst = 0.0;
  std::set<std::string> combos;
  for (const auto& c : suite) {
    const auto o = check_elbo_gradient(c);
    passed += o.passed;
    for (const auto& g : o.groups) worst = std::max(worst, g.max_rel_error);
    combos.insert(Format("%zu,%zu,%zu", c.num_sources, c.directions, c.mics));
    Detail(c.Label() + (o.passed ? " ok" : " FAILED"));
  }
  const double secs = Seconds(start);
  const bool ok = passed == suite.size() && suite.size() >= 10 && combos.size() == 8 &&
                  worst < kGradCheckTolerance && secs < 120.0;
  return {ok, Format("%zu/%zu configs, %zu (K,D,M) combos, max rel error %.2e, %.1f s",
                     passed, suite.size(), combos.size(), worst, secs)};
}

// ---------------------------------------------------------------- 2
struct Mc {
  double mean, se;
};

Mc Summarize(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

Mc McLognormalKl(const VariationalParams& p, const Priors& pr, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> draws(1000000);
  for (auto& out : draws) {
    double v = 0.0;
    for (Eigen::Index k = 0; k < p.mu.rows(); ++k) {
      const double s = std::exp(p.log_sigma[k]);
      for (Eigen::Index d = 0; d < p.mu.cols(); ++d) {
        const double e = normal(rng), z = p.mu(k, d) + s * e;
        v += std::log(pr.sigma0 / s) - 0.5 * e * e + 0.5 * z * z / (pr.sigma0 * pr.sigma0);
      }
    }
    out = v;
  }
  return Summarize(draws);
}

double QuadratureBetaKl(double a1, double a2, double alpha0) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double lq = std::lgamma(a1 + a2) - std::lgamma(a1) - std::lgamma(a2);
  const double lp = std::lgamma(2 * alpha0) - 2 * std::lgamma(alpha0);
  return integrator.integrate(
      [&](double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        const double lx = std::log(x), l1x = std::log1p(-x);
        const double logq = lq + (a1 - 1) * lx + (a2 - 1) * l1x;
        return std::exp(logq) * (logq - lp - (alpha0 - 1) * (lx + l1x));
      },
      0.0, 1.0);
}

Outcome KlOracles() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  std::size_t ln_ok = 0, ln_total = 0, dir_ok = 0, dir_total = 0, nonneg_fail = 0;
  double worst_z = 0.0, worst_dir = 0.0;

  std::vector<std::pair<VariationalParams, Priors>> cases;
  {
    VariationalParams p;
    p.mu = Eigen::MatrixXd::Constant(1, 1, 1.0);
    p.log_sigma = Eigen::VectorXd::Zero(1);
    p.pibar_logits = Eigen::VectorXd::Zero(1);
    cases.push_back({p, Priors{0.01, 1.0}});
  }
  for (int i = 0; i < 4; ++i) {
    VariationalParams p;
    p.mu = Eigen::MatrixXd(2, 3);
    for (Eigen::Index j = 0; j < p.mu.size(); ++j) p.mu(j) = n(rng);
    p.log_sigma = Eigen::VectorXd(2);
    for (auto& v : p.log_sigma) v = 0.5 * n(rng) - 0.3;
    p.pibar_logits = Eigen::VectorXd::Zero(2);
    cases.push_back({p, Priors{0.01, 0.5 + 0.25 * i}});
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [p, pr] = cases[i];
    const double kl = kl_lognormal(p, pr);
    const auto mc = McLognormalKl(p, pr, 100 + i);
    const double z = std::abs(mc.mean - kl) / mc.se;
    worst_z = std::max(worst_z, z);
    ln_ok += z <= 3.0;
    ++ln_total;
    nonneg_fail += kl < 0.0;
    Detail(Format("lognormal case %zu: closed %.6f mc %.6f +- %.6f", i, kl, mc.mean, mc.se));
  }

  std::vector<std::array<double, 3>> beta_cases{{2.0, 2.0, 1.0}};
  std::uniform_real_distribution<double> u(0.6, 6.0);
  for (int i = 0; i < 20; ++i) beta_cases.push_back({u(rng), u(rng), u(rng) / 3.0});
  for (const auto& [a1, a2, alpha0] : beta_cases) {
    Eigen::VectorXd pibar(2);
    pibar << a1 / (a1 + a2), a2 / (a1 + a2);
    const double kl = kl_dirichlet(pibar, a1 + a2, alpha0);
    const double err = std::abs(kl - QuadratureBetaKl(a1, a2, alpha0));
    worst_dir = std::max(worst_dir, err);
    dir_ok += err <= 1e-4;
    ++dir_total;
    nonneg_fail += kl < 0.0;
  }
  std::uniform_real_distribution<double> lb(-4.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    Eigen::VectorXd logits(4);
    for (auto& v : logits) v = 2.0 * n(rng);
    const Eigen::VectorXd pibar = logits.array().exp() / logits.array().exp().sum();
    nonneg_fail += kl_dirichlet(pibar, std::exp(lb(rng)), std::exp(lb(rng))) < -1e-12;
  }
  const bool ok = ln_ok == ln_total && dir_ok == dir_total && nonneg_fail == 0;
  return {ok, Format("lognormal %zu/%zu within 3 SE (max %.2f SE, 1e6 draws); Dirichlet %zu/%zu "
                     "within 1e-4 of quadrature (max %.1e); %zu negative values",
                     ln_ok, ln_total, worst_z, dir_ok, dir_total, worst_dir, nonneg_fail)};
}

// ---------------------------------------------------------------- 3
Outcome PsdOptimality() {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> mics(2, 6);
  std::size_t violations = 0;
  const std::size_t draws = 1000;
  for (std::size_t i = 0; i < draws; ++i) {
    const std::size_t M = static_cast<std::size_t>(mics(rng));
    const auto field = build_field(ArrayGeometry::Circular(M), DirectionGrid(36),
                                   {200.0 + 7000.0 * u(rng)});
    Eigen::VectorXd w(36);
    for (auto& v : w) v = u(rng) < 0.2 ? std::exp(2.0 * n(rng)) : 0.0;
    const auto s = mixture_scm(w, field, 0, kDefaultRidge);
    Eigen::VectorXcd x(static_cast<Eigen::Index>(M));
    for (auto& v : x) v = Complex(n(rng), n(rng)) * std::exp(n(rng));
    const double lam = psd_ml(x, s);
    const double best = ComponentLogDensity(x, s, lam);
    for (double f : {0.99, 1.01}) violations += ComponentLogDensity(x, s, f * lam) > best;
  }
  return {violations == 0, Format("%zu draws, %zu violations", draws, violations)};
}

// ---------------------------------------------------------------- 4
Outcome BaselineSanity() {
  const auto start = Clock::now();
  std::size_t music_ok = 0, srp_ok = 0;
  const std::size_t scenes = 40;
  for (std::size_t i = 0; i < scenes; ++i) {
    std::mt19937_64 rng(DeriveSeed(404, i));
    SceneSpec spec;
    spec.room.rt60 = 0.0;
    spec.room.max_order = 0;
    spec.array = ArrayGeometry::Circular(6);
    spec.duration = 0.5;
    spec.seed = rng();
    SourceSpec src;
    src.azimuth_deg = 5.0 * std::uniform_int_distribution<int>(0, 71)(rng);
    src.distance = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    src.seed = rng();
    spec.sources.push_back(src);
    const auto p = Prepare(spec);
    const auto argmax = [](const SpatialSpectrum& s) {
      return static_cast<std::size_t>(std::max_element(s.values.begin(), s.values.end()) -
                                      s.values.begin());
    };
    const std::size_t truth = p.truth.doa_bins[0];
    const std::size_t m = argmax(music_spectrum(p.x, p.field, 1));
    const std::size_t s = argmax(srp_phat(p.x, p.field));
    music_ok += m == truth;
    srp_ok += s == truth;
    Detail(Format("scene %zu truth %zu music %zu srp %zu", i, truth, m, s));
  }
  const double secs = Seconds(start);
  const bool ok = music_ok >= 0.95 * scenes && srp_ok >= 0.95 * scenes && secs < 60.0;
  return {ok, Format("MUSIC %zu/%zu, SRP-PHAT %zu/%zu at the true bin, %.1f s", music_ok,
                     scenes, srp_ok, scenes, secs)};
}

// ---------------------------------------------------------------- 5
Outcome ConditionOneLocalization() {
  DatasetTemplate t;
  t.min_persons = t.max_persons = 2;
  t.rt60_min = t.rt60_max = 0.2;
  t.min_separation_deg = 60.0;
  const std::size_t scenes = 20;
  double f_sum = 0.0, worst_secs = 0.0;
  for (std::size_t i = 0; i < scenes; ++i) {
    const auto start = Clock::now();
    const auto p = Prepare(draw_scene(t, DeriveSeed(505, i)));
    FitConfig cfg;
    cfg.seed = DeriveSeed(5050, i);
    const auto fr = fit(p.x, p.field, Priors{}, cfg);
    const auto loc = localize(fr.params, kDefaultPiThreshold, kDefaultWeightThreshold);
    const auto sc = match_and_score(loc.ActiveDoasDeg(), p.truth.ActiveDoasDeg(72), 10.0);
    f_sum += sc.f_measure;
    worst_secs = std::max(worst_secs, Seconds(start));
    Detail(Format("scene %zu F %.3f (%zu estimated)", i, sc.f_measure, loc.ActiveDoasDeg().size()));
  }
  const double mean_f = f_sum / scenes;
  return {mean_f >= 0.80 && worst_secs < 300.0,
          Format("mean F %.3f over %zu scenes (target >= 0.80), slowest scene %.1f s", mean_f,
                 scenes, worst_secs)};
}

// ---------------------------------------------------------------- 6 and 7
struct ConditionTwoRun {
  std::size_t scenes = 0;
  std::size_t count_ok = 0;
  std::size_t shrunk = 0;
  double f_vi = 0.0;
  double f_fixed = 0.0;
};

const ConditionTwoRun& ConditionTwo() {
  static ConditionTwoRun run;
  static bool done = false;
  if (done) return run;
  auto t = DatasetTemplate::Condition2();
  t.min_active = t.max_active = 2;
  run.scenes = 20;
  for (std::size_t i = 0; i < run.scenes; ++i) {
    const auto p = Prepare(draw_scene(t, DeriveSeed(606, i)));
    const auto truth = p.truth.ActiveDoasDeg(72);
    FitConfig cfg;
    cfg.seed = DeriveSeed(6060, i);
    const auto vi = localize(fit(p.x, p.field, Priors{}, cfg).params, kDefaultPiThreshold,
                             kDefaultWeightThreshold);
    cfg.fix_pi = true;
    const auto fixed = localize(fit(p.x, p.field, Priors{}, cfg).params, kDefaultPiThreshold,
                                kDefaultWeightThreshold);
    std::size_t below = 0;
    for (const auto& c : vi.candidates) below += c.mixing_level < kDefaultPiThreshold;
    const double fv = match_and_score(vi.ActiveDoasDeg(), truth, 10.0).f_measure;
    const double ff = match_and_score(fixed.ActiveDoasDeg(), truth, 10.0).f_measure;
    run.count_ok += count_sources(vi) == truth.size();
    run.shrunk += below >= cfg.num_sources - truth.size();
    run.f_vi += fv / run.scenes;
    run.f_fixed += ff / run.scenes;
    std::string pis;
    for (const auto& c : vi.candidates) pis += Format(" %.3f", c.mixing_level);
    Detail(Format("scene %zu persons %zu count %zu pibar%s F %.3f fixed-pi F %.3f", i,
                  p.spec.sources.size(), count_sources(vi), pis.c_str(), fv, ff));
  }
  done = true;
  return run;
}

Outcome Shrinkage() {
  const auto& r = ConditionTwo();
  const bool ok = r.count_ok >= 0.6 * r.scenes && r.shrunk >= 0.8 * r.scenes;
  return {ok, Format("count correct %zu/%zu (target >= 60%%), >= K-L components below 0.02 in "
                     "%zu/%zu (target >= 80%%)",
                     r.count_ok, r.scenes, r.shrunk, r.scenes)};
}

Outcome InactiveRejection() {
  const auto& r = ConditionTwo();
  return {r.f_vi > r.f_fixed, Format("mean F %.3f with fitted mixing levels vs %.3f with pi = 1/K "
                                     "over %zu scenes",
                                     r.f_vi, r.f_fixed, r.scenes)};
}

// ---------------------------------------------------------------- 8
std::string PipelineReport(const std::filesystem::path& dir) {
  DatasetTemplate t = DatasetTemplate::Condition2();
  t.duration = 0.4;
  const auto entries = make_dataset(t, 3, 808, dir);
  std::vector<SceneResult> results;
  for (const auto& e : entries) {
    const Waveform w = read_wav(e.wav);
    const auto x = stft(w, 512, 160);
    const auto field = build_field(e.spec.array, DirectionGrid(72), x.bin_frequencies());
    FitConfig cfg;
    cfg.iters = 40;
    cfg.seed = DeriveSeed(8080, results.size());
    const auto loc = localize(fit(x, field, Priors{}, cfg).params, 0.02, 0.1);
    SceneResult vi{e.id, "vi", e.spec.array.size(),
                   MakeGroundTruth(e.spec).ActiveDoasDeg(72), loc.ActiveDoasDeg(), loc};
    results.push_back(vi);
    SceneResult srp{e.id, "srp", e.spec.array.size(), vi.true_doas, {}, std::nullopt};
    for (std::size_t b : peak_pick(srp_phat(x, field), 4, 0.5)) srp.est_doas.push_back(5.0 * b);
    results.push_back(srp);
  }
  const auto report = evaluate(results, 10.0);
  std::ifstream manifest(dir / "manifest.json", std::ios::binary);
  return ToJson(report).dump(2) + ToCsv(report) +
         std::string(std::istreambuf_iterator<char>(manifest), {});
}

Outcome DeterminismAndRoundTrip() {
  const auto base = std::filesystem::temp_directory_path() / "sslvi_acceptance";
  std::filesystem::remove_all(base);
  const std::string a = PipelineReport(base / "a"), b = PipelineReport(base / "b");
  const bool identical = a == b;

  double worst_rt = 0.0;
  std::mt19937_64 rng(81);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto [L, hop] : {std::pair<std::size_t, std::size_t>{512, 160}, {512, 128}, {256, 64}}) {
    Waveform w(16000.0, 4, 12000);
    for (auto& ch : w.channels) {
      for (auto& v : ch) v = n(rng);
    }
    const auto y = istft(stft(w, L, hop));
    double err = 0.0, ref = 0.0;
    for (std::size_t m = 0; m < 4; ++m) {
      for (std::size_t i = L; i + L < w.length(); ++i) {
        err += std::pow(y.channels[m][i] - w.channels[m][i], 2);
        ref += std::pow(w.channels[m][i], 2);
      }
    }
    worst_rt = std::max(worst_rt, std::sqrt(err / ref));
  }

  double worst_snr = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    auto spec = draw_scene(DatasetTemplate::Condition2(), DeriveSeed(818, i));
    spec.duration = 0.5;
    spec.snr_db = 5.0 + 2.0 * static_cast<double>(i);
    const auto noisy = render_scene(spec);
    const double target = *spec.snr_db;
    spec.snr_db.reset();
    const auto clean = render_scene(spec);
    double ps = 0.0, pn = 0.0;
    for (std::size_t m = 0; m < clean.mixture.channels.size(); ++m) {
      for (std::size_t t = 0; t < clean.mixture.length(); ++t) {
        const double c = clean.mixture.channels[m][t];
        ps += c * c;
        pn += std::pow(noisy.mixture.channels[m][t] - c, 2);
      }
    }
    worst_snr = std::max(worst_snr, std::abs(10.0 * std::log10(ps / pn) - target));
  }
  std::filesystem::remove_all(base);
  const bool ok = identical && worst_rt < 1e-6 && worst_snr <= 0.5;
  return {ok, Format("reports %s, STFT round trip %.1e relative, SNR error %.3f dB",
                     identical ? "byte-identical" : "DIFFER", worst_rt, worst_snr)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "-v" || a == "--verbose") {
      g_verbose = true;
    } else {
      wanted.insert(std::atoi(a.c_str()));
    }
  }
  const std::vector<Criterion> criteria{
      {1, "gradient suite", GradientSuite},
      {2, "KL oracles", KlOracles},
      {3, "PSD optimality", PsdOptimality},
      {4, "baseline sanity", BaselineSanity},
      {5, "condition-1 VI localization", ConditionOneLocalization},
      {6, "shrinkage and source counting", Shrinkage},
      {7, "inactive-source rejection", InactiveRejection},
      {8, "determinism and round trips", DeterminismAndRoundTrip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.summary.c_str());
  }
  return failed == 0 ? 0 : 1;
}
