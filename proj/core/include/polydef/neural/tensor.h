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

#ifndef POLYDEF_NEURAL_TENSOR_H_
#define POLYDEF_NEURAL_TENSOR_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "polydef/common.h"

namespace polydef::neural {

// Dense row-major array.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, T fill = T(0));

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? size() : size() / shape[0]; }
  std::span<T> row(std::size_t i) { return {values.data() + i * cols(), cols()}; }
  std::span<const T> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
};

// A trainable tensor with a gradient slot of identical shape.
template <typename T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;
  // Frozen parameters receive no optimizer updates.
  bool trainable = true;
};

// kWeight marks a dense weight matrix [out x in]. It draws like kUniform
// unless the store has a weight gain, in which case the range becomes the
// Xavier bound gain * sqrt(6 / (in + out)).
enum class Init { kUniform, kZeros, kWeight };

// Named parameters in name order. Uniform initialization draws from
// U(-init_scale, init_scale) using a stream seeded at construction, so the
// same creation sequence and seed give the same values.
template <typename T>
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0, T init_scale = T(0.05));

  Parameter<T>& Create(const std::string& name, std::vector<std::size_t> shape,
                       Init init = Init::kUniform);
  // Inserts a parameter with given values (used when loading).
  Parameter<T>& Insert(const std::string& name, Tensor<T> value);

  Parameter<T>& Get(const std::string& name);
  const Parameter<T>& Get(const std::string& name) const;
  bool Contains(const std::string& name) const { return params_.count(name) > 0; }

  std::map<std::string, Parameter<T>>& params() { return params_; }
  const std::map<std::string, Parameter<T>>& params() const { return params_; }

  void ZeroGrad();
  std::size_t NumValues() const;
  std::uint64_t seed() const { return seed_; }

  // 0 keeps the plain uniform range for weight matrices.
  void set_weight_gain(T gain) { weight_gain_ = gain; }

 private:
  std::uint64_t seed_;
  T init_scale_;
  T weight_gain_ = T(0);
  Rng rng_;
  std::map<std::string, Parameter<T>> params_;
};

// Copies values between stores of different precision; names and shapes
// must match.
template <typename To, typename From>
void CopyParams(const ParamStore<From>& from, ParamStore<To>& to);

// Binary container: magic, format version, seed, string metadata, then per
// parameter (name, dtype, shape, raw little-endian values).
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void SaveCheckpoint(const std::string& path, const ParamStore<T>& store,
                    const std::map<std::string, std::string>& metadata);

struct CheckpointHeader {
  std::uint32_t version = 0;
  std::uint64_t seed = 0;
  std::string dtype;
  std::map<std::string, std::string> metadata;
};

// Reads a checkpoint into `store` (which is cleared first). Values stored in
// another precision are converted.
template <typename T>
CheckpointHeader LoadCheckpoint(const std::string& path, ParamStore<T>& store);

}  // namespace polydef::neural

#endif  // POLYDEF_NEURAL_TENSOR_H_
