// Serial reference versus OpenMP kernels: per-dialog mB-MAPO gradients with
// an ordered reduction, and greedy decoding of a corpus.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "kbq/batch.hpp"
#include "kbq/buffers.hpp"
#include "kbq/estimators.hpp"
#include "kbq/exploration.hpp"
#include "kbq/metrics.hpp"
#include "kbq/synth.hpp"

namespace {

using namespace kbq;

struct Fixture {
  Benchmark bench;
  PolicyParameters params;
  std::vector<EncodedContext> contexts;
  std::vector<QueryRewarder> rewarders;
  std::vector<BufferPair> buffers;
  std::vector<int> positions;

  Fixture() : bench(generate(small())), params(PolicyParameters::zeros(bench.kb, PolicyConfig{})) {
    positions = gold_positions(bench.train);
    Rng rng(1);
    for (auto& w : params.weights) w = 0.05 * (2.0 * rng.uniform() - 1.0);
    for (const auto& d : bench.train) {
      const auto dc = make_context(d, *d.gold_position);
      const auto es = subsequent_entities(d, *d.gold_position, bench.kb);
      contexts.emplace_back(dc, bench.kb, params.config);
      rewarders.emplace_back(bench.kb, es);
      buffers.push_back(seed_buffer_pair(systematic_explore(dc, es, bench.kb)));
    }
  }

  static BenchConfig small() {
    BenchConfig c;
    c.n_train = 128;
    c.n_val = 8;
    c.n_test = 8;
    return c;
  }

  GradientVector estimate(std::size_t i) {
    Rng r(i);
    return mbmapo_gradient(params, contexts[i], rewarders[i], buffers[i], 0.5, 0.1, 8, r).gradient;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_GradientSerial(benchmark::State& state) {
  auto& f = fixture();
  std::vector<double> total(f.params.dim());
  for (auto _ : state) {
    const auto slots = serial_map<GradientVector>(f.contexts.size(), [&](std::size_t i) { return f.estimate(i); });
    std::fill(total.begin(), total.end(), 0.0);
    reduce_into(slots, 1.0, total);
    benchmark::DoNotOptimize(total.data());
  }
}

void BM_GradientParallel(benchmark::State& state) {
  auto& f = fixture();
  const int jobs = static_cast<int>(state.range(0));
  std::vector<double> total(f.params.dim());
  for (auto _ : state) {
    const auto slots = parallel_map<GradientVector>(f.contexts.size(), jobs, [&](std::size_t i) { return f.estimate(i); });
    std::fill(total.begin(), total.end(), 0.0);
    reduce_into(slots, 1.0, total);
    benchmark::DoNotOptimize(total.data());
  }
}

void BM_PredictSerial(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_queries_serial(f.params, f.bench.train, f.positions, f.bench.kb));
  }
}

void BM_PredictParallel(benchmark::State& state) {
  auto& f = fixture();
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_queries(f.params, f.bench.train, f.positions, f.bench.kb, jobs));
  }
}

const int kMaxJobs = omp_get_max_threads();

BENCHMARK(BM_GradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientParallel)->RangeMultiplier(2)->Range(1, kMaxJobs > 1 ? kMaxJobs : 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictParallel)->RangeMultiplier(2)->Range(1, kMaxJobs > 1 ? kMaxJobs : 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
