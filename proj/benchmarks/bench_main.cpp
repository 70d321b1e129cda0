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


#include <map>
#include <random>

#include <benchmark/benchmark.h>

#include "sslvi/baselines.hpp"
#include "sslvi/cgmm.hpp"
#include "sslvi/simulate.hpp"
#include "sslvi/variational.hpp"

namespace {

using namespace sslvi;

struct Fixture {
  Waveform wave;
  MultichannelSpectrogram x;
  SteeringField field;
};

const Fixture& Scene(std::size_t mics) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(mics);
  if (it != cache.end()) return it->second;
  auto t = DatasetTemplate::Condition2();
  t.n_mics = mics;
  t.duration = 1.0;
  const auto spec = draw_scene(t, 42);
  Fixture f;
  f.wave = render_scene(spec).mixture;
  f.x = stft(f.wave, 512, 160);
  f.field = build_field(spec.array, DirectionGrid(72), f.x.bin_frequencies());
  return cache.emplace(mics, std::move(f)).first->second;
}

MixtureState RandomState(const SteeringField& field, std::size_t K) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MixtureState s;
  s.weights = Eigen::MatrixXd(static_cast<Eigen::Index>(K), 72);
  for (Eigen::Index i = 0; i < s.weights.size(); ++i) s.weights(i) = u(rng);
  s.pi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(K), 1.0 / K);
  s.field = &field;
  return s;
}

void BM_Stft(benchmark::State& state) {
  const auto& f = Scene(6);
  for (auto _ : state) benchmark::DoNotOptimize(stft(f.wave, 512, 160));
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

void BM_LikelihoodGradient(benchmark::State& state) {
  const auto mics = static_cast<std::size_t>(state.range(0));
  const auto K = static_cast<std::size_t>(state.range(1));
  const auto& f = Scene(mics);
  const auto s = RandomState(f.field, K);
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood_gradient(f.x, s));
}
BENCHMARK(BM_LikelihoodGradient)
    ->Args({2, 2})
    ->Args({6, 4})
    ->Args({8, 4})
    ->Unit(benchmark::kMillisecond);

void BM_FitTenIterations(benchmark::State& state) {
  const auto& f = Scene(6);
  FitConfig cfg;
  cfg.iters = 10;
  for (auto _ : state) benchmark::DoNotOptimize(fit(f.x, f.field, Priors{}, cfg));
}
BENCHMARK(BM_FitTenIterations)->Unit(benchmark::kMillisecond);

void BM_Music(benchmark::State& state) {
  const auto& f = Scene(6);
  for (auto _ : state) benchmark::DoNotOptimize(music_spectrum(f.x, f.field, 2));
}
BENCHMARK(BM_Music)->Unit(benchmark::kMillisecond);

void BM_SrpPhat(benchmark::State& state) {
  const auto& f = Scene(6);
  for (auto _ : state) benchmark::DoNotOptimize(srp_phat(f.x, f.field));
}
BENCHMARK(BM_SrpPhat)->Unit(benchmark::kMillisecond);

void BM_RenderScene(benchmark::State& state) {
  const auto spec = draw_scene(DatasetTemplate::Condition2(), 42);
  for (auto _ : state) benchmark::DoNotOptimize(render_scene(spec));
}
BENCHMARK(BM_RenderScene)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
