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

#include "polydef/neural/layers.h"

#include <algorithm>
#include <cmath>

namespace polydef::neural {

namespace {

std::string LayerName(const std::string& prefix, std::size_t k, const char* what) {
  return prefix + ".l" + std::to_string(k) + "." + what;
}

}  // namespace

// ----------------------------------------------------------------- Lstm

template <typename T>
Lstm<T>::Lstm(ParamStore<T>& store, std::string prefix, std::size_t input_width,
              std::size_t units, std::size_t layers)
    : input_width_(input_width), units_(units) {
  if (layers == 0 || units == 0 || input_width == 0) throw Error("empty LSTM");
  for (std::size_t k = 0; k < layers; ++k) {
    const std::size_t in = k == 0 ? input_width : units;
    Layer l;
    l.w = &store.Create(LayerName(prefix, k, "W"), {4 * units, in}, Init::kWeight);
    l.u = &store.Create(LayerName(prefix, k, "U"), {4 * units, units}, Init::kWeight);
    l.b = &store.Create(LayerName(prefix, k, "b"), {4 * units});
    layers_.push_back(l);
  }
}

template <typename T>
Lstm<T> Lstm<T>::Bind(ParamStore<T>& store, std::string prefix, std::size_t layers) {
  Lstm lstm;
  for (std::size_t k = 0; k < layers; ++k) {
    Layer l;
    l.w = &store.Get(LayerName(prefix, k, "W"));
    l.u = &store.Get(LayerName(prefix, k, "U"));
    l.b = &store.Get(LayerName(prefix, k, "b"));
    lstm.layers_.push_back(l);
  }
  lstm.units_ = lstm.layers_[0].u->value.cols();
  lstm.input_width_ = lstm.layers_[0].w->value.cols();
  return lstm;
}

template <typename T>
LstmState<T> Lstm<T>::ZeroState(Graph<T>& g) const {
  LstmState<T> s;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    s.h.push_back(g.Constant(std::vector<T>(units_, T(0))));
    s.c.push_back(g.Constant(std::vector<T>(units_, T(0))));
  }
  return s;
}

template <typename T>
LstmState<T> Lstm<T>::Load(Graph<T>& g, const LstmStateValues<T>& values) const {
  LstmState<T> s;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    s.h.push_back(g.Constant(values.h.at(k)));
    s.c.push_back(g.Constant(values.c.at(k)));
  }
  return s;
}

template <typename T>
LstmStateValues<T> Lstm<T>::Save(const Graph<T>& g, const LstmState<T>& state) {
  LstmStateValues<T> v;
  for (Var h : state.h) v.h.push_back(g.value(h));
  for (Var c : state.c) v.c.push_back(g.value(c));
  return v;
}

template <typename T>
LstmState<T> Lstm<T>::Step(Graph<T>& g, Var x, const LstmState<T>& state, T dropout,
                           Rng& rng) const {
  if (g.size(x) != input_width_) {
    throw Error("LSTM input width " + std::to_string(g.size(x)) + ", expected " +
                std::to_string(input_width_));
  }
  LstmState<T> next;
  Var in = x;
  const std::size_t n = units_;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (k > 0) in = g.Dropout(in, dropout, rng);
    Var pre = g.Add(g.Affine(*l.w, in, *l.b), g.MatVec(*l.u, state.h[k]));
    Var i = g.Sigmoid(g.Slice(pre, 0, n));
    Var f = g.Sigmoid(g.Slice(pre, n, n));
    Var cand = g.Tanh(g.Slice(pre, 2 * n, n));
    Var o = g.Sigmoid(g.Slice(pre, 3 * n, n));
    Var c = g.Add(g.Mul(f, state.c[k]), g.Mul(i, cand));
    Var h = g.Mul(o, g.Tanh(c));
    next.h.push_back(h);
    next.c.push_back(c);
    in = h;
  }
  return next;
}

template <typename T>
typename Lstm<T>::Output Lstm<T>::Forward(Graph<T>& g, const std::vector<Var>& inputs,
                                          const LstmState<T>* initial, T dropout,
                                          Rng& rng) const {
  Output out;
  out.final = initial ? *initial : ZeroState(g);
  for (Var x : inputs) {
    out.final = Step(g, x, out.final, dropout, rng);
    out.top.push_back(out.final.h.back());
  }
  return out;
}

// ---------------------------------------------------------- GatedUpdate

template <typename T>
GatedUpdate<T>::GatedUpdate(ParamStore<T>& store, std::string prefix, std::size_t cond_width,
                            std::size_t units)
    : cond_width_(cond_width), units_(units) {
  const std::size_t in = cond_width + units;
  wz_ = &store.Create(prefix + ".Wz", {units, in}, Init::kWeight);
  bz_ = &store.Create(prefix + ".bz", {units});
  wr_ = &store.Create(prefix + ".Wr", {cond_width, in}, Init::kWeight);
  br_ = &store.Create(prefix + ".br", {cond_width});
  wh_ = &store.Create(prefix + ".Wh", {units, in}, Init::kWeight);
  bh_ = &store.Create(prefix + ".bh", {units});
}

template <typename T>
GatedUpdate<T> GatedUpdate<T>::Bind(ParamStore<T>& store, std::string prefix) {
  GatedUpdate gu;
  gu.wz_ = &store.Get(prefix + ".Wz");
  gu.bz_ = &store.Get(prefix + ".bz");
  gu.wr_ = &store.Get(prefix + ".Wr");
  gu.br_ = &store.Get(prefix + ".br");
  gu.wh_ = &store.Get(prefix + ".Wh");
  gu.bh_ = &store.Get(prefix + ".bh");
  gu.units_ = gu.wz_->value.rows();
  gu.cond_width_ = gu.wr_->value.rows();
  return gu;
}

template <typename T>
GateOutput<T> GatedUpdate<T>::Apply(Graph<T>& g, Var v_star, Var h) const {
  if (g.size(v_star) != cond_width_ || g.size(h) != units_) {
    throw Error("gated update width mismatch: conditioning " + std::to_string(g.size(v_star)) +
                "/" + std::to_string(cond_width_) + ", hidden " + std::to_string(g.size(h)) +
                "/" + std::to_string(units_));
  }
  Var vh = g.Concat({v_star, h});
  GateOutput<T> out;
  out.z = g.Sigmoid(g.Affine(*wz_, vh, *bz_));
  out.r = g.Sigmoid(g.Affine(*wr_, vh, *br_));
  Var reset = g.Concat({g.Mul(out.r, v_star), h});
  Var cand = g.Tanh(g.Affine(*wh_, reset, *bh_));
  out.o = g.Add(g.Mul(g.OneMinus(out.z), h), g.Mul(out.z, cand));
  return out;
}

// -------------------------------------------------------------- CharCnn

CharVocab CharVocab::Build(const std::vector<std::string>& words) {
  std::string chars;
  for (const auto& w : words) chars += w;
  std::sort(chars.begin(), chars.end());
  chars.erase(std::unique(chars.begin(), chars.end()), chars.end());
  CharVocab v;
  v.chars_ = std::move(chars);
  return v;
}

CharVocab CharVocab::Parse(std::string_view serialized) {
  CharVocab v;
  v.chars_ = std::string(serialized);
  if (!std::is_sorted(v.chars_.begin(), v.chars_.end())) throw Error("char vocabulary not sorted");
  return v;
}

std::string CharVocab::Serialize() const { return chars_; }

std::size_t CharVocab::Id(char c) const {
  auto it = std::lower_bound(chars_.begin(), chars_.end(), c);
  if (it == chars_.end() || *it != c) return kUnknown;
  return 2 + static_cast<std::size_t>(it - chars_.begin());
}

template <typename T>
CharCnn<T>::CharCnn(ParamStore<T>& store, std::string prefix, std::size_t num_chars,
                    std::size_t char_width)
    : char_width_(char_width) {
  emb_ = &store.Create(prefix + ".emb", {num_chars, char_width});
  for (std::size_t k = 0; k < kCharKernelWidths.size(); ++k) {
    const auto w = kCharKernelWidths[k];
    const auto tag = prefix + ".conv" + std::to_string(w);
    w_.push_back(&store.Create(tag + ".W", {kCharKernelCounts[k], w * char_width}, Init::kWeight));
    b_.push_back(&store.Create(tag + ".b", {kCharKernelCounts[k]}));
  }
}

template <typename T>
CharCnn<T> CharCnn<T>::Bind(ParamStore<T>& store, std::string prefix) {
  CharCnn cnn;
  cnn.emb_ = &store.Get(prefix + ".emb");
  cnn.char_width_ = cnn.emb_->value.cols();
  for (auto w : kCharKernelWidths) {
    const auto tag = prefix + ".conv" + std::to_string(w);
    cnn.w_.push_back(&store.Get(tag + ".W"));
    cnn.b_.push_back(&store.Get(tag + ".b"));
  }
  return cnn;
}

template <typename T>
Var CharCnn<T>::Apply(Graph<T>& g, const CharVocab& vocab, std::string_view word) const {
  if (word.empty()) throw Error("char CNN needs a nonempty word");
  std::vector<Var> pooled;
  for (std::size_t k = 0; k < kCharKernelWidths.size(); ++k) {
    const std::size_t width = kCharKernelWidths[k];
    std::vector<std::size_t> ids;
    for (char c : word) ids.push_back(vocab.Id(c));
    while (ids.size() < width) ids.push_back(CharVocab::kBoundary);
    Var seq = g.Rows(*emb_, ids);
    pooled.push_back(g.ConvMaxPool(seq, char_width_, width, *w_[k], *b_[k]));
  }
  return g.Concat(pooled);
}

// --------------------------------------------------------------- Gumbel

std::vector<double> SampleGumbel(std::size_t k, Rng& rng) {
  std::vector<double> g(k);
  for (auto& x : g) x = -std::log(-std::log(rng.Uniform()));
  return g;
}

std::vector<double> GumbelSoftmaxSample(std::span<const double> logits, const GumbelConfig& cfg,
                                        Rng& rng) {
  if (logits.empty()) throw Error("gumbel-softmax over zero categories");
  if (!(cfg.tau > 0.0)) throw Error("temperature must be positive");
  const auto noise = SampleGumbel(logits.size(), rng);
  auto z = Graph<double>::SoftmaxValues(logits, noise, cfg.tau);
  if (cfg.straight_through) {
    const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    std::fill(z.begin(), z.end(), 0.0);
    z[best] = 1.0;
  }
  return z;
}

template class Lstm<float>;
template class Lstm<double>;
template class GatedUpdate<float>;
template class GatedUpdate<double>;
template class CharCnn<float>;
template class CharCnn<double>;

}  // namespace polydef::neural
