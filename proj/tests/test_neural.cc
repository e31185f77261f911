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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "polydef/neural/grad_check.h"
#include "polydef/neural/graph.h"
#include "polydef/neural/layers.h"
#include "polydef/neural/tensor.h"
#include "test_util.h"

namespace polydef::neural {
namespace {

using testing::TempDir;

std::vector<double> RandomVector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.Uniform(-1.0, 1.0);
  return v;
}

void Fill(Parameter<double>& p, double value) {
  std::fill(p.value.values.begin(), p.value.values.end(), value);
}

TEST_CASE("tensors and stores keep shapes consistent") {
  Tensor<double> t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  ParamStore<double> store(1);
  auto& p = store.Create("w", {4, 5});
  CHECK(p.grad.shape == p.value.shape);
  CHECK(p.grad.size() == 20);
  CHECK_THROWS_AS(store.Create("w", {1}), Error);
  CHECK_THROWS_AS(store.Get("missing"), Error);
  CHECK(store.NumValues() == 20);
}

TEST_CASE("initialization is seeded and respects its range") {
  ParamStore<double> a(7), b(7), c(8);
  auto& pa = a.Create("x", {10, 10});
  auto& pb = b.Create("x", {10, 10});
  auto& pc = c.Create("x", {10, 10});
  CHECK(pa.value.values == pb.value.values);
  CHECK(pa.value.values != pc.value.values);
  for (double v : pa.value.values) CHECK(std::abs(v) <= 0.05);
  auto& z = a.Create("z", {3}, Init::kZeros);
  for (double v : z.value.values) CHECK(v == 0.0);

  // a weight gain switches matrices to the Xavier range
  ParamStore<double> x(3);
  x.set_weight_gain(3.0);
  auto& w = x.Create("w", {20, 40}, Init::kWeight);
  const double bound = 3.0 * std::sqrt(6.0 / 60.0);
  double widest = 0.0;
  for (double v : w.value.values) {
    CHECK(std::abs(v) <= bound);
    widest = std::max(widest, std::abs(v));
  }
  CHECK(widest > 0.5 * bound);
  auto& bias = x.Create("b", {20});
  for (double v : bias.value.values) CHECK(std::abs(v) <= 0.05);
  CHECK_THROWS_AS(x.Create("v", {5}, Init::kWeight), Error);
}

TEST_CASE("grad check of x squared at three") {
  ParamStore<double> store;
  store.Insert("x", Tensor<double>({1}, 3.0));
  auto r = GradCheck(store, [&](Graph<double>& g) {
    Var x = g.Param(store.Get("x"));
    return g.Mul(x, x);
  });
  CHECK(r.checked == 1);
  CHECK(r.max_rel_error < 1e-9);
  Graph<double> g;
  Var x = g.Param(store.Get("x"));
  g.Backward(g.Mul(x, x));
  CHECK(g.grad(x)[0] == doctest::Approx(6.0));
}

TEST_CASE("relative error uses a small absolute floor") {
  CHECK(RelativeError(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(RelativeError(0.0, 1e-9) == doctest::Approx(1e-3));
  CHECK(RelativeError(0.0, 0.0) == 0.0);
}

TEST_CASE("every graph op matches finite differences") {
  Rng rng(5);
  ParamStore<double> store(9, 0.5);
  store.Create("a", {6});
  store.Create("b", {6});
  store.Create("w", {4, 6});
  store.Create("emb", {5, 3});
  const std::vector<double> noise{0.3, -0.2, 1.1, 0.05};
  const std::vector<std::vector<double>> rows{RandomVector(3, rng), RandomVector(3, rng),
                                              RandomVector(3, rng), RandomVector(3, rng)};
  auto loss = [&](Graph<double>& g) {
    Var a = g.Param(store.Get("a"));
    Var b = g.Param(store.Get("b"));
    Var mixed = g.Add(g.Mul(g.Sigmoid(a), g.Tanh(b)), g.OneMinus(g.Scale(a, 0.3)));
    Var logits = g.MatVec(store.Get("w"), mixed);
    Var logp = g.LogSoftmax(logits);
    Var soft = g.GumbelSoftmax(logits, noise, 0.7, false);
    Var comb = g.Combine(soft, rows);
    const std::size_t ids[] = {4, 1, 4};
    Var e = g.Rows(store.Get("emb"), ids);
    Var tail = g.Slice(e, 3, 3);
    Var parts = g.Concat({comb, tail});
    Var total = g.Add(g.Pick(logp, 2), g.Dot(parts, g.Concat({tail, comb})));
    total = g.Add(total, g.MassAt(logp, {0, 3, 3}));
    return g.Add(total, g.Sum(g.Sub(a, b)));
  };
  auto r = GradCheck(store, loss);
  CHECK(r.checked == 6 + 6 + 24 + 15);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("lstm with zero weights stays at zero") {
  ParamStore<double> store(1);
  Lstm<double> lstm(store, "enc", 4, 3, 2);
  for (auto& [name, p] : store.params()) Fill(p, 0.0);
  Graph<double> g;
  Rng rng(0);
  Rng data(2);
  std::vector<Var> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(g.Constant(RandomVector(4, data)));
  auto out = lstm.Forward(g, xs, nullptr, 0.0, rng);
  REQUIRE(out.top.size() == 3);
  for (Var h : out.top) {
    for (double v : g.value(h)) CHECK(v == 0.0);
  }
  for (Var c : out.final.c) {
    for (double v : g.value(c)) CHECK(v == 0.0);
  }
}

TEST_CASE("lstm shapes and width checks") {
  ParamStore<double> store(1);
  Lstm<double> lstm(store, "enc", 4, 3, 2);
  CHECK(lstm.layers() == 2);
  Graph<double> g;
  Rng rng(0);
  auto out = lstm.Forward(g, {g.Constant(std::vector<double>(4, 0.5))}, nullptr, 0.0, rng);
  REQUIRE(out.top.size() == 1);
  CHECK(g.size(out.top[0]) == 3);
  REQUIRE(out.final.h.size() == 2);
  CHECK(g.size(out.final.h[1]) == 3);
  CHECK_THROWS_AS(lstm.Forward(g, {g.Constant(std::vector<double>(5, 0.5))}, nullptr, 0.0, rng),
                  Error);
  // rebinding sees the same parameters
  Lstm<double> again = Lstm<double>::Bind(store, "enc", 2);
  CHECK(again.units() == 3);
  CHECK(again.input_width() == 4);
}

TEST_CASE("lstm gradient of sum of final hidden state") {
  ParamStore<double> store(4, 0.3);
  Lstm<double> lstm(store, "enc", 3, 4, 2);
  Rng data(6);
  std::vector<std::vector<double>> xs;
  for (int t = 0; t < 4; ++t) xs.push_back(RandomVector(3, data));
  auto r = GradCheck(store, [&](Graph<double>& g) {
    Rng rng(0);
    std::vector<Var> in;
    for (const auto& x : xs) in.push_back(g.Constant(x));
    auto out = lstm.Forward(g, in, nullptr, 0.0, rng);
    return g.Sum(out.top.back());
  });
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("dropout is the identity at inference and inverted in training") {
  Rng rng(3);
  std::vector<double> x(1000, 2.0);
  Graph<double> infer(false);
  Var a = infer.Constant(x);
  CHECK(infer.Dropout(a, 0.5, rng).id == a.id);
  Graph<double> train(true);
  Var b = train.Constant(x);
  Var d = train.Dropout(b, 0.5, rng);
  std::size_t kept = 0;
  for (double v : train.value(d)) {
    CHECK((v == 0.0 || v == 4.0));
    kept += v != 0.0;
  }
  CHECK(kept > 400);
  CHECK(kept < 600);
  CHECK(train.Dropout(b, 0.0, rng).id == b.id);
}

struct GateFixture {
  ParamStore<double> store{11, 0.4};
  GatedUpdate<double> gate{store, "gate", 5, 3};
  std::vector<double> v, h;
  GateFixture() {
    Rng rng(12);
    v = RandomVector(5, rng);
    h = RandomVector(3, rng);
  }
};

TEST_CASE("gate closed passes the hidden state through") {
  GateFixture f;
  Fill(f.store.Get("gate.Wz"), 0.0);
  Fill(f.store.Get("gate.bz"), -50.0);
  Graph<double> g;
  auto out = f.gate.Apply(g, g.Constant(f.v), g.Constant(f.h));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(g.value(out.o)[i] - f.h[i]) <= 1e-15);
  CHECK(g.size(out.z) == 3);
  CHECK(g.size(out.r) == 5);
}

TEST_CASE("gate open emits the candidate state") {
  GateFixture f;
  Fill(f.store.Get("gate.Wz"), 0.0);
  Fill(f.store.Get("gate.bz"), 50.0);
  Graph<double> g;
  auto out = f.gate.Apply(g, g.Constant(f.v), g.Constant(f.h));

  // candidate state computed directly
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  auto mat = [&](const char* name) {
    const auto& p = f.store.Get(name).value;
    return Eigen::Map<const Mat>(p.values.data(), static_cast<Eigen::Index>(p.rows()),
                                 static_cast<Eigen::Index>(p.cols()));
  };
  auto vec = [&](const char* name) {
    const auto& p = f.store.Get(name).value;
    return Eigen::Map<const Eigen::VectorXd>(p.values.data(), static_cast<Eigen::Index>(p.size()));
  };
  Eigen::VectorXd vh(8);
  vh << Eigen::Map<const Eigen::VectorXd>(f.v.data(), 5), Eigen::Map<const Eigen::VectorXd>(f.h.data(), 3);
  Eigen::VectorXd r = (mat("gate.Wr") * vh + vec("gate.br")).unaryExpr([](double x) {
    return 1.0 / (1.0 + std::exp(-x));
  });
  Eigen::VectorXd rvh = vh;
  for (int i = 0; i < 5; ++i) rvh[i] *= r[i];
  Eigen::VectorXd cand = (mat("gate.Wh") * rvh + vec("gate.bh")).array().tanh();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g.value(out.o)[i] == doctest::Approx(cand[static_cast<Eigen::Index>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("gate gradients and width checks") {
  GateFixture f;
  auto r = GradCheck(f.store, [&](Graph<double>& g) {
    return g.Sum(f.gate.Apply(g, g.Constant(f.v), g.Constant(f.h)).o);
  });
  CHECK(r.max_rel_error < 1e-4);
  Graph<double> g;
  CHECK_THROWS_AS(f.gate.Apply(g, g.Constant(std::vector<double>(4, 0.0)), g.Constant(f.h)), Error);
  CHECK_THROWS_AS(f.gate.Apply(g, g.Constant(f.v), g.Constant(std::vector<double>(2, 0.0))), Error);
}

TEST_CASE("char cnn emits 160 features for any word") {
  auto vocab = CharVocab::Build({"cabinet", "closet"});
  ParamStore<double> store(2);
  CharCnn<double> cnn(store, "chars", vocab.size(), 4);
  for (const char* w : {"a", "cabinet", "zzz", "supercalifragilistic"}) {
    Graph<double> g;
    Var out = cnn.Apply(g, vocab, w);
    CHECK(g.size(out) == 160);
  }
  CHECK(cnn.output_width() == 10 + 30 + 40 + 40 + 40);
  Graph<double> g;
  CHECK_THROWS_AS(cnn.Apply(g, vocab, ""), Error);
}

TEST_CASE("char vocab maps unknowns and survives serialization") {
  auto vocab = CharVocab::Build({"ba", "cab"});
  CHECK(vocab.size() == 5);
  CHECK(vocab.Id('a') == 2);
  CHECK(vocab.Id('c') == 4);
  CHECK(vocab.Id('q') == CharVocab::kUnknown);
  auto back = CharVocab::Parse(vocab.Serialize());
  CHECK(back.Serialize() == vocab.Serialize());
  CHECK(back.Id('b') == vocab.Id('b'));
}

TEST_CASE("char cnn gradients") {
  auto vocab = CharVocab::Build({"unkind"});
  ParamStore<double> store(5, 0.5);
  CharCnn<double> cnn(store, "chars", vocab.size(), 3);
  auto r = GradCheck(store, [&](Graph<double>& g) { return g.Sum(cnn.Apply(g, vocab, "unkindly")); });
  CHECK(r.max_rel_error < 1e-4);
  auto short_word = GradCheck(store, [&](Graph<double>& g) { return g.Sum(cnn.Apply(g, vocab, "u")); });
  CHECK(short_word.max_rel_error < 1e-4);
}

TEST_CASE("gumbel softmax outputs are probability vectors") {
  Rng rng(1);
  for (double tau : {0.3, 1.0, 5.0}) {
    for (int i = 0; i < 200; ++i) {
      auto z = GumbelSoftmaxSample(std::vector<double>{0.5, -1.0, 2.0}, {tau, false}, rng);
      CHECK(std::accumulate(z.begin(), z.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
      for (double x : z) CHECK(x >= 0.0);
      auto st = GumbelSoftmaxSample(std::vector<double>{0.5, -1.0, 2.0}, {tau, true}, rng);
      CHECK(std::count(st.begin(), st.end(), 1.0) == 1);
      CHECK(std::count(st.begin(), st.end(), 0.0) == 2);
    }
  }
  auto single = GumbelSoftmaxSample(std::vector<double>{-3.0}, {0.1, false}, rng);
  CHECK(single == std::vector<double>{1.0});
  CHECK_THROWS_AS(GumbelSoftmaxSample(std::vector<double>{}, {}, rng), Error);
  CHECK_THROWS_AS(GumbelSoftmaxSample(std::vector<double>{1.0}, {0.0, false}, rng), Error);
}

TEST_CASE("gumbel argmax follows softmax of the logits regardless of temperature") {
  const std::vector<double> logits{1.0, 0.0};
  Rng rng(2024);
  const int draws = 100000;
  int warm = 0, cold = 0;
  for (int i = 0; i < draws; ++i) {
    const auto g = SampleGumbel(2, rng);
    auto a = Graph<double>::SoftmaxValues(logits, g, 1.0);
    auto b = Graph<double>::SoftmaxValues(logits, g, 0.3);
    warm += a[0] > a[1];
    cold += b[0] > b[1];
  }
  const double expected = std::exp(1.0) / (1.0 + std::exp(1.0));
  CHECK(std::abs(static_cast<double>(warm) / draws - expected) < 0.01);
  CHECK(warm == cold);
}

TEST_CASE("low temperature concentrates the sample") {
  // The max component stays <= 0.99 whenever the top two perturbed logits are
  // within tau * ln(99) of each other. A 4M-draw numpy run of the same
  // sampler puts P(max > 0.99) at 0.9775 for these logits at tau = 0.01.
  Rng rng(77);
  int sharp = 0;
  for (int i = 0; i < 10000; ++i) {
    auto z = GumbelSoftmaxSample(std::vector<double>{1.0, 0.0, -1.0}, {0.01, false}, rng);
    sharp += *std::max_element(z.begin(), z.end()) > 0.99;
  }
  CHECK(std::abs(sharp / 10000.0 - 0.9775) < 0.005);
}

TEST_CASE("straight-through forwards one-hot but differentiates the soft sample") {
  ParamStore<double> store(1, 1.0);
  store.Create("l", {3});
  const std::vector<double> noise{0.1, -0.4, 0.2};
  const std::vector<std::vector<double>> rows{{1, 2}, {-1, 0.5}, {0.3, 0.3}};
  Graph<double> st;
  Var w1 = st.GumbelSoftmax(st.Param(store.Get("l")), noise, 0.5, true);
  st.Backward(st.Sum(st.Combine(w1, rows)));
  const auto& hot = st.value(w1);
  CHECK(std::count(hot.begin(), hot.end(), 1.0) == 1);
  const auto st_grad = store.Get("l").grad.values;

  store.ZeroGrad();
  Graph<double> soft;
  Var w2 = soft.GumbelSoftmax(soft.Param(store.Get("l")), noise, 0.5, false);
  soft.Backward(soft.Sum(soft.Combine(w2, rows)));
  const auto& p = soft.value(w2);
  CHECK(hot[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())] == 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(st_grad[i] == doctest::Approx(store.Get("l").grad.values[i]));

  store.ZeroGrad();
  auto r = GradCheck(store, [&](Graph<double>& g) {
    return g.Sum(g.Combine(g.GumbelSoftmax(g.Param(store.Get("l")), noise, 0.5, false), rows));
  });
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("checkpoints round trip byte for byte") {
  TempDir dir;
  ParamStore<float> store(42);
  store.Create("enc.l0.W", {4, 3});
  store.Create("enc.l0.b", {4});
  store.Create("out.W", {2, 4}, Init::kWeight);
  const std::map<std::string, std::string> meta{{"config", "{\"units\":4}"}, {"vocab", "a b c"}};
  SaveCheckpoint(dir.File("a.ckpt"), store, meta);

  ParamStore<float> back;
  auto header = LoadCheckpoint(dir.File("a.ckpt"), back);
  CHECK(header.version == kCheckpointVersion);
  CHECK(header.seed == 42);
  CHECK(header.dtype == "f32");
  CHECK(header.metadata == meta);
  REQUIRE(back.params().size() == 3);
  for (const auto& [name, p] : store.params()) {
    CHECK(back.Get(name).value.shape == p.value.shape);
    CHECK(back.Get(name).value.values == p.value.values);
  }
  SaveCheckpoint(dir.File("b.ckpt"), back, meta);
  CHECK(testing::ReadText(dir.File("a.ckpt")) == testing::ReadText(dir.File("b.ckpt")));

  ParamStore<double> wide;
  LoadCheckpoint(dir.File("a.ckpt"), wide);
  CHECK(wide.Get("out.W").value.values[0] == static_cast<double>(store.Get("out.W").value.values[0]));

  testing::WriteText(dir.File("junk.ckpt"), "not a checkpoint at all");
  CHECK_THROWS_AS(LoadCheckpoint(dir.File("junk.ckpt"), back), ParseError);
}

TEST_CASE("parameters copy across precisions") {
  ParamStore<float> f(3);
  f.Create("x", {2, 2});
  ParamStore<double> d;
  d.Create("x", {2, 2});
  CopyParams(f, d);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(d.Get("x").value.values[i] == static_cast<double>(f.Get("x").value.values[i]));
  }
  ParamStore<double> wrong;
  wrong.Create("x", {4});
  CHECK_THROWS_AS(CopyParams(f, wrong), Error);
}

}  // namespace
}  // namespace polydef::neural
