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

#include "polydef/diagnostics.h"

#include "polydef/define.h"
#include "polydef/match.h"
#include "polydef/neural/layers.h"

namespace polydef {

using neural::Graph;
using neural::ParamStore;
using neural::Var;

namespace {

std::vector<double> RandomVector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.Uniform(-1.0, 1.0);
  return v;
}

// Reduces a vector node to a scalar through a fixed random projection so
// every output coordinate matters.
Var Project(Graph<double>& g, Var v, std::uint64_t seed) {
  Rng rng(seed);
  return g.Dot(v, g.Constant(RandomVector(g.size(v), rng)));
}

GradCheckReport CheckLstm(std::uint64_t seed, double eps) {
  ParamStore<double> store(seed, 0.3);
  neural::Lstm<double> lstm(store, "lstm", 3, 4, 2);
  Rng rng = Rng::Derive(seed, 1);
  std::vector<std::vector<double>> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(RandomVector(3, rng));
  auto loss = [&](Graph<double>& g) {
    std::vector<Var> in;
    for (const auto& x : xs) in.push_back(g.Constant(x));
    Rng unused(0);
    auto out = lstm.Forward(g, in, nullptr, 0.0, unused);
    std::vector<Var> parts;
    for (std::size_t t = 0; t < out.top.size(); ++t) parts.push_back(Project(g, out.top[t], seed + t));
    parts.push_back(Project(g, out.final.c.back(), seed + 99));
    return g.Sum(g.Concat(parts));
  };
  return {"lstm", neural::GradCheck(store, loss, false, eps)};
}

GradCheckReport CheckGate(std::uint64_t seed, double eps) {
  ParamStore<double> store(seed, 0.3);
  neural::GatedUpdate<double> gate(store, "gate", 5, 4);
  auto& v = store.Create("v", {5});
  auto& h = store.Create("h", {4});
  auto loss = [&](Graph<double>& g) {
    auto out = gate.Apply(g, g.Param(v), g.Param(h));
    return g.Add(Project(g, out.o, seed), g.Add(Project(g, out.z, seed + 1), Project(g, out.r, seed + 2)));
  };
  return {"gated_update", neural::GradCheck(store, loss, false, eps)};
}

GradCheckReport CheckCharCnn(std::uint64_t seed, double eps) {
  ParamStore<double> store(seed, 0.3);
  auto vocab = neural::CharVocab::Build({"unhappiness", "kindly"});
  neural::CharCnn<double> cnn(store, "char", vocab.size(), 3);
  auto loss = [&](Graph<double>& g) {
    return g.Add(Project(g, cnn.Apply(g, vocab, "unkind"), seed),
                 Project(g, cnn.Apply(g, vocab, "ly"), seed + 1));
  };
  return {"char_cnn", neural::GradCheck(store, loss, false, eps)};
}

GradCheckReport CheckEncoder(std::uint64_t seed, double eps) {
  ParamStore<double> store(seed, 0.3);
  auto& emb = store.Create("tok.emb", {8, 4});
  neural::DefinitionEncoder<double> enc(store, "enc", emb, 5, 2);
  const std::vector<std::size_t> ids = {4, 2, 7, 2};
  auto loss = [&](Graph<double>& g) {
    Rng unused(0);
    return Project(g, enc.Encode(g, ids, 0.0, unused), seed);
  };
  return {"encoder", neural::GradCheck(store, loss, false, eps)};
}

GradCheckReport CheckGumbel(std::uint64_t seed, double eps) {
  ParamStore<double> store(seed, 0.5);
  auto& def = store.Create("def", {5});
  neural::AtomScorer<double> scorer(store, "match", 6, 5);  // adapter in the path
  Rng rng = Rng::Derive(seed, 2);
  std::vector<AtomVector> atoms;
  for (std::size_t i = 0; i < 3; ++i) atoms.push_back({i, RandomVector(6, rng)});
  const auto noise = neural::SampleGumbel(3, rng);
  auto loss = [&](Graph<double>& g) {
    Var logits = scorer.Logits(g, g.Param(def), atoms);
    Var w = g.GumbelSoftmax(logits, noise, 0.7, false);
    std::vector<std::vector<double>> rows;
    for (const auto& a : atoms) rows.push_back(a.vec);
    return Project(g, g.Combine(w, rows), seed);
  };
  return {"gumbel_softmax", neural::GradCheck(store, loss, false, eps)};
}

GradCheckReport CheckDefineStep(std::uint64_t seed, double eps) {
  std::vector<DictEntry> corpus = {
      {"bank", Pos::kNoun, {"land", "beside", "a", "river"}, "synthetic", 1},
      {"bank", Pos::kNoun, {"a", "place", "for", "money", "money"}, "synthetic", 2},
      {"river", Pos::kNoun, {"a", "large", "stream"}, "synthetic", 1},
  };
  ModelConfig cfg;
  cfg.units = 4;
  cfg.layers = 2;
  cfg.token_width = 3;
  cfg.pos_width = 3;
  cfg.char_width = 2;
  cfg.min_count = 1;
  cfg.mode = MatchMode::kGs;
  const std::size_t dim = 5;
  auto model = DefineModel<double>::Create(cfg, corpus, dim, seed);

  Rng rng = Rng::Derive(seed, 3);
  Example ex;
  ex.word = "bank";
  ex.pos = Pos::kNoun;
  ex.word_vec = RandomVector(dim, rng);
  for (std::size_t i = 0; i < 3; ++i) ex.atoms.push_back({10 + i, RandomVector(dim, rng)});
  ex.definition = model.vocab().Encode(corpus[1].definition);
  ex.target = ex.definition;
  ex.target.push_back(Vocabulary::kEos);
  auto loss = [&](Graph<double>& g) {
    Rng noise = Rng::Derive(seed, 4);  // same Gumbel draw on every probe
    return model.Loss(g, ex, 0.8, true, 0.0, 0.5, noise, nullptr);
  };
  return {"define_step", neural::GradCheck(model.store(), loss, false, eps)};
}

}  // namespace

std::vector<GradCheckReport> RunGradientSuite(std::uint64_t seed, double eps) {
  return {CheckLstm(seed, eps),    CheckGate(seed, eps),   CheckCharCnn(seed, eps),
          CheckEncoder(seed, eps), CheckGumbel(seed, eps), CheckDefineStep(seed, eps)};
}

}  // namespace polydef
