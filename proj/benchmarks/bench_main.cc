// Copyright 2026 The Polydef Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <vector>

#include "polydef/define.h"
#include "polydef/eval.h"
#include "polydef/neural/graph.h"
#include "polydef/sparse_decomp.h"
#include "test_util.h"

namespace polydef {
namespace {

// One OMP encode against m unit atoms in 300 dimensions.
void BM_OmpEncode(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto world = testing::MakeSparseWorld(16, 300, m, 5, 0.01, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    auto code = SparseCodeOmp(world.table.vector(i++ % world.table.size()), world.atoms, 5);
    benchmark::DoNotOptimize(code);
  }
}
BENCHMARK(BM_OmpEncode)->Arg(100)->Arg(1000);

// Forward and backward through one dense layer, as in the LSTM gates.
void BM_MatVecBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  neural::ParamStore<float> store(1);
  auto& w = store.Create("w", {n, n}, neural::Init::kWeight);
  const std::vector<float> x(n, 0.5f);
  for (auto _ : state) {
    neural::Graph<float> g;
    auto y = g.Sum(g.Tanh(g.MatVec(w, g.Constant(std::span<const float>(x)))));
    g.Backward(y);
    benchmark::DoNotOptimize(w.grad.values.data());
  }
}
BENCHMARK(BM_MatVecBackward)->Arg(64)->Arg(300);

// Next-token distribution of a small trained-shape model.
void BM_DecoderStep(benchmark::State& state) {
  const auto w = testing::MakeTinyWorld(7);
  auto cfg = testing::TinyModelConfig(MatchMode::kGs);
  cfg.units = static_cast<std::size_t>(state.range(0));
  const auto model = DefineModel<double>::Create(cfg, w.entries, w.table.dim(), 3);
  const auto ex = model.InferenceExample("bank", Pos::kNoun, w.table, w.atoms);
  const std::vector<std::size_t> prefix{2, 3};
  for (auto _ : state) {
    auto p = model.NextDistribution(ex, ex.atoms.front().id, prefix);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_DecoderStep)->Arg(32)->Arg(128);

void BM_SentenceBleu(benchmark::State& state) {
  const auto hyp = testing::Words("a game played with a ball typically with a curved blade");
  const std::vector<Tokens> refs{
      testing::Words("a game in which two players use rackets to hit a small soft rubber ball"),
      testing::Words("a game played in an enclosed court by two or four players")};
  for (auto _ : state) benchmark::DoNotOptimize(SentenceBleu(hyp, refs));
}
BENCHMARK(BM_SentenceBleu);

}  // namespace
}  // namespace polydef

BENCHMARK_MAIN();
