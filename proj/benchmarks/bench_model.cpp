#include <benchmark/benchmark.h>

#include "forgetset/nnmodel.hpp"
#include "forgetset/synthgen.hpp"
#include "forgetset/trainer.hpp"

using namespace forgetset;

namespace {

const SynthSplits& data() {
  static const SynthSplits d = [] {
    SynthConfig c;
    c.n_train = 2000;
    c.n_test_id = 10;
    c.n_test_ood = 10;
    return generate(c);
  }();
  return d;
}

ModelConfig tier(int which) { return which == 0 ? ModelConfig::shallow() : ModelConfig::strong(); }

void BM_Forward(benchmark::State& state) {
  const Model m = Model::init(tier(state.range(0)), data().train.vocab().size(), 1);
  const auto s1 = data().train.s1_indices(0);
  const auto s2 = data().train.s2_indices(0);
  Workspace ws;
  for (auto _ : state) benchmark::DoNotOptimize(forward(m, s1, s2, ws).data());
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1);

void BM_Backward(benchmark::State& state) {
  const Model m = Model::init(tier(state.range(0)), data().train.vocab().size(), 1);
  const auto s1 = data().train.s1_indices(0);
  const auto s2 = data().train.s2_indices(0);
  std::vector<double> grad(m.parameter_count());
  Workspace ws;
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_gradient(m, s1, s2, data().train[0].label, grad, 1.0, ws));
  }
}
BENCHMARK(BM_Backward)->Arg(0)->Arg(1);

void BM_TrainEpoch(benchmark::State& state) {
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) {
    Model m = Model::init(tier(state.range(0)), data().train.vocab().size(), 1);
    benchmark::DoNotOptimize(train(m, data().train, cfg).ledger.n_recordings());
  }
  state.SetItemsProcessed(state.iterations() * data().train.size());
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
