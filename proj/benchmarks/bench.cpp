// Microbenchmarks for the hot paths: slotframe simulation, network
// forward/backward passes, advantage estimation and action sampling.

#include <benchmark/benchmark.h>

#include <vector>

#include "tschpg/baselines.hpp"
#include "tschpg/env.hpp"
#include "tschpg/nn.hpp"
#include "tschpg/ppg.hpp"
#include "tschpg/rng.hpp"
#include "tschpg/sim.hpp"

namespace {

using namespace tschpg;

void BM_RunSlotframe(benchmark::State& state) {
  Scenario s = Scenario::reference();
  s.net.n_nodes = static_cast<int>(state.range(0));
  s.qos = QosSpec::uniform(s.net.n_nodes, 64, 0.25, 0.5);
  SimState sim = make_episode_state(s, episode_seed(1, 0));
  const auto [schedule, powers] = random_schedule(s, 3);
  for (auto _ : state) {
    inject_traffic(sim);
    benchmark::DoNotOptimize(run_slotframe(sim, schedule, powers, s.qos));
  }
}
BENCHMARK(BM_RunSlotframe)->Arg(5)->Arg(10)->Arg(20);

void BM_MlpForward(benchmark::State& state) {
  Rng rng(7);
  Mlp net({32, 64, 64, 681});
  net.init_random(rng);
  std::vector<double> input(32);
  for (double& x : input) x = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(input));
  }
}
BENCHMARK(BM_MlpForward);

void BM_MlpForwardBackward(benchmark::State& state) {
  Rng rng(7);
  Mlp net({32, 64, 64, 681});
  net.init_random(rng);
  std::vector<double> input(32);
  for (double& x : input) x = rng.normal();
  std::vector<double> out_grad(681, 0.01);
  std::vector<double> grad(net.param_count());
  MlpCache cache;
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(input, &cache));
    net.backward(cache, out_grad, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_MlpForwardBackward);

void BM_ComputeGae(benchmark::State& state) {
  const int n = 256;
  Rng rng(11);
  std::vector<double> rewards(n), values(n + 1), advantages(n), targets(n);
  std::vector<uint8_t> dones(n, 0);
  for (int t = 0; t < n; ++t) {
    rewards[t] = rng.normal();
    values[t] = rng.normal();
    dones[t] = rng.uniform() < 0.05 ? 1 : 0;
  }
  values[n] = rng.normal();
  for (auto _ : state) {
    compute_gae(rewards, values, dones, 0.99, 0.95, advantages, targets);
    benchmark::DoNotOptimize(advantages.data());
  }
}
BENCHMARK(BM_ComputeGae);

void BM_SampleCategorical(benchmark::State& state) {
  Rng rng(13);
  std::vector<double> logits(64);
  for (double& l : logits) l = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_categorical(logits, rng));
  }
}
BENCHMARK(BM_SampleCategorical);

}  // namespace

BENCHMARK_MAIN();
