#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sspfield/baselines.hpp"
#include "sspfield/generator.hpp"
#include "sspfield/grid.hpp"
#include "sspfield/normalize.hpp"
#include "sspfield/ops.hpp"

using namespace sspfield;

namespace {

std::vector<double> rand_vals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

// One desk-scale sample with its normalization, shared across benchmarks.
struct SampleFixture {
  GeneratorConfig gcfg;
  Generator gen;
  ParameterStore store;
  NormStats stats;
  NormalizedSample ns;
  Sample raw;

  SampleFixture() : gen(gcfg) {
    GridField field = synthesize_field(3, 8, 8, 12, gcfg.depth);
    SplitSpec spec;
    spec.train_begin = {2000, 1};
    spec.train_end = {2000, 9};
    spec.test_begin = {2000, 10};
    spec.test_end = {2000, 12};
    SampleSplit split = build_samples(field, spec);
    gen.init_params(store, 1);
    stats = normalize_stats(split.train);
    raw = split.train.front();
    ns = apply_norm(raw, stats);
  }
};

SampleFixture& fixture() {
  static SampleFixture f;
  return f;
}

}  // namespace

static void BM_GeneratorForward(benchmark::State& state) {
  SampleFixture& f = fixture();
  for (auto _ : state) {
    std::vector<double> delta = f.gen.perturbation(f.store, f.ns);
    benchmark::DoNotOptimize(delta.data());
  }
}
BENCHMARK(BM_GeneratorForward);

static void BM_AttentionLayer(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0)), d = 32;
  std::vector<double> qv = rand_vals(static_cast<std::size_t>(m * d), 1);
  std::vector<double> kv = rand_vals(static_cast<std::size_t>(m * d), 2);
  std::vector<double> vv = rand_vals(static_cast<std::size_t>(m * d), 3);
  for (auto _ : state) {
    diff::Tape tape;
    diff::Tensor out = diff::attention_layer(tape.constant({m, d}, qv),
                                             tape.constant({m, d}, kv),
                                             tape.constant({m, d}, vv));
    benchmark::DoNotOptimize(out.value().data());
  }
}
BENCHMARK(BM_AttentionLayer)->Arg(8)->Arg(32)->Arg(128);

static void BM_DepthwiseSeparableConv(benchmark::State& state) {
  const int c = 8, len = static_cast<int>(state.range(0)), k = 3, cout = 8;
  std::vector<double> xv = rand_vals(static_cast<std::size_t>(c * len), 4);
  std::vector<double> dw = rand_vals(static_cast<std::size_t>(c * k), 5);
  std::vector<double> pw = rand_vals(static_cast<std::size_t>(cout * c), 6);
  std::vector<double> bv = rand_vals(static_cast<std::size_t>(cout), 7);
  for (auto _ : state) {
    diff::Tape tape;
    diff::Tensor out = diff::dsconv1d(tape.constant({c, len}, xv),
                                      tape.constant({c, k}, dw),
                                      tape.constant({cout, c}, pw),
                                      tape.constant({cout}, bv));
    benchmark::DoNotOptimize(out.value().data());
  }
}
BENCHMARK(BM_DepthwiseSeparableConv)->Arg(64)->Arg(512);

static void BM_BackwardSweep(benchmark::State& state) {
  SampleFixture& f = fixture();
  for (auto _ : state) {
    diff::Tape tape;
    TapeBinding bind(tape, f.store, {""});
    diff::Tensor delta = f.gen.forward(tape, bind, f.ns);
    diff::Tensor loss = diff::mean(diff::mul(delta, delta));
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.value().data());
  }
}
BENCHMARK(BM_BackwardSweep);

static void BM_InverseDistanceEstimate(benchmark::State& state) {
  SampleFixture& f = fixture();
  for (auto _ : state) {
    SoundSpeedProfile p = idw_estimate(f.raw);
    benchmark::DoNotOptimize(p.speeds.data());
  }
}
BENCHMARK(BM_InverseDistanceEstimate);

BENCHMARK_MAIN();
