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

#ifndef POLYDEF_NEURAL_LAYERS_H_
#define POLYDEF_NEURAL_LAYERS_H_

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "polydef/common.h"
#include "polydef/neural/graph.h"
#include "polydef/neural/tensor.h"

namespace polydef::neural {

// ---------------------------------------------------------------------------
// Stacked LSTM.
//
// Layer k owns "<prefix>.l<k>.W" [4H x in], ".U" [4H x H] and ".b" [4H]; the
// gate order inside the 4H block is input, forget, candidate, output.
// Dropout is applied to the input of every layer above the first, and only
// when the graph is in training mode.

template <typename T>
struct LstmState {
  std::vector<Var> h;
  std::vector<Var> c;
};

// Plain values of a state, for decoding outside one long graph.
template <typename T>
struct LstmStateValues {
  std::vector<std::vector<T>> h;
  std::vector<std::vector<T>> c;
};

template <typename T>
class Lstm {
 public:
  Lstm() = default;
  Lstm(ParamStore<T>& store, std::string prefix, std::size_t input_width,
       std::size_t units, std::size_t layers);
  // Binds to parameters that already exist in `store`.
  static Lstm Bind(ParamStore<T>& store, std::string prefix, std::size_t layers);

  std::size_t input_width() const { return input_width_; }
  std::size_t units() const { return units_; }
  std::size_t layers() const { return layers_.size(); }

  LstmState<T> ZeroState(Graph<T>& g) const;
  LstmState<T> Load(Graph<T>& g, const LstmStateValues<T>& values) const;
  static LstmStateValues<T> Save(const Graph<T>& g, const LstmState<T>& state);

  // One time step through all layers; returns the new state. The output of
  // the step is state.h.back().
  LstmState<T> Step(Graph<T>& g, Var x, const LstmState<T>& state, T dropout, Rng& rng) const;

  struct Output {
    std::vector<Var> top;  // top-layer hidden state per step
    LstmState<T> final;
  };
  Output Forward(Graph<T>& g, const std::vector<Var>& inputs, const LstmState<T>* initial,
                 T dropout, Rng& rng) const;

 private:
  struct Layer {
    Parameter<T>* w = nullptr;
    Parameter<T>* u = nullptr;
    Parameter<T>* b = nullptr;
  };
  std::size_t input_width_ = 0;
  std::size_t units_ = 0;
  std::vector<Layer> layers_;
};

// ---------------------------------------------------------------------------
// Gated conditioning update:
//   z = sigmoid(Wz [v; h] + bz)          width H
//   r = sigmoid(Wr [v; h] + br)          width |v|
//   h~ = tanh(Wh [r * v; h] + bh)        width H
//   o = (1 - z) * h + z * h~

template <typename T>
struct GateOutput {
  Var o;
  Var z;
  Var r;
};

template <typename T>
class GatedUpdate {
 public:
  GatedUpdate() = default;
  GatedUpdate(ParamStore<T>& store, std::string prefix, std::size_t cond_width,
              std::size_t units);
  static GatedUpdate Bind(ParamStore<T>& store, std::string prefix);

  std::size_t cond_width() const { return cond_width_; }
  std::size_t units() const { return units_; }

  GateOutput<T> Apply(Graph<T>& g, Var v_star, Var h) const;

 private:
  std::size_t cond_width_ = 0;
  std::size_t units_ = 0;
  Parameter<T>* wz_ = nullptr;
  Parameter<T>* bz_ = nullptr;
  Parameter<T>* wr_ = nullptr;
  Parameter<T>* br_ = nullptr;
  Parameter<T>* wh_ = nullptr;
  Parameter<T>* bh_ = nullptr;
};

// ---------------------------------------------------------------------------
// Character CNN affix detector.

// Byte-level character vocabulary. Id 0 is the unknown slot and id 1 the
// boundary symbol used for padding.
class CharVocab {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr std::size_t kBoundary = 1;

  CharVocab() = default;
  static CharVocab Build(const std::vector<std::string>& words);
  // Inverse of Serialize.
  static CharVocab Parse(std::string_view serialized);
  std::string Serialize() const;

  std::size_t size() const { return 2 + chars_.size(); }
  std::size_t Id(char c) const;

 private:
  std::string chars_;  // sorted, id = position + 2
};

inline constexpr std::array<std::size_t, 5> kCharKernelWidths = {2, 3, 4, 5, 6};
inline constexpr std::array<std::size_t, 5> kCharKernelCounts = {10, 30, 40, 40, 40};
inline constexpr std::size_t kCharCnnWidth = 160;

// Owns "<prefix>.emb" [chars x E] and "<prefix>.conv<w>.W" / ".b" for each
// kernel width. The word is embedded character by character, right-padded
// with the boundary symbol up to the kernel width, convolved and max-pooled
// per filter; the per-kernel results are concatenated.
template <typename T>
class CharCnn {
 public:
  CharCnn() = default;
  CharCnn(ParamStore<T>& store, std::string prefix, std::size_t num_chars,
          std::size_t char_width);
  static CharCnn Bind(ParamStore<T>& store, std::string prefix);

  std::size_t output_width() const { return kCharCnnWidth; }
  Var Apply(Graph<T>& g, const CharVocab& vocab, std::string_view word) const;

 private:
  std::size_t char_width_ = 0;
  Parameter<T>* emb_ = nullptr;
  std::vector<Parameter<T>*> w_;
  std::vector<Parameter<T>*> b_;
};

// ---------------------------------------------------------------------------
// Gumbel-Softmax.

struct GumbelConfig {
  double tau = 1.0;
  bool straight_through = false;
};

// g = -log(-log(u)), u ~ U(0, 1).
std::vector<double> SampleGumbel(std::size_t k, Rng& rng);

// Draws fresh noise and returns softmax((logits + g) / tau), or the one-hot
// argmax in straight-through mode.
std::vector<double> GumbelSoftmaxSample(std::span<const double> logits, const GumbelConfig& cfg,
                                        Rng& rng);

}  // namespace polydef::neural

#endif  // POLYDEF_NEURAL_LAYERS_H_
