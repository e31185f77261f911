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

#include "polydef/neural/tensor.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace polydef::neural {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

template <typename T>
Tensor<T>::Tensor(std::vector<std::size_t> s, T fill) : shape(std::move(s)) {
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  values.assign(n, fill);
}

template <typename T>
ParamStore<T>::ParamStore(std::uint64_t seed, T init_scale)
    : seed_(seed), init_scale_(init_scale), rng_(seed) {}

template <typename T>
Parameter<T>& ParamStore<T>::Create(const std::string& name, std::vector<std::size_t> shape,
                                    Init init) {
  if (Contains(name)) throw Error("duplicate parameter '" + name + "'");
  Parameter<T> p;
  p.value = Tensor<T>(shape);
  p.grad = Tensor<T>(shape);
  if (init != Init::kZeros) {
    double range = init_scale_;
    if (init == Init::kWeight && weight_gain_ > T(0)) {
      if (shape.size() != 2) throw Error("weight '" + name + "' must be a matrix");
      range = weight_gain_ * std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
    }
    for (auto& v : p.value.values) v = static_cast<T>(rng_.Uniform(-range, range));
  }
  return params_.emplace(name, std::move(p)).first->second;
}

template <typename T>
Parameter<T>& ParamStore<T>::Insert(const std::string& name, Tensor<T> value) {
  if (Contains(name)) throw Error("duplicate parameter '" + name + "'");
  Parameter<T> p;
  p.grad = Tensor<T>(value.shape);
  p.value = std::move(value);
  return params_.emplace(name, std::move(p)).first->second;
}

template <typename T>
Parameter<T>& ParamStore<T>::Get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

template <typename T>
const Parameter<T>& ParamStore<T>::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

template <typename T>
void ParamStore<T>::ZeroGrad() {
  for (auto& [name, p] : params_) std::fill(p.grad.values.begin(), p.grad.values.end(), T(0));
}

template <typename T>
std::size_t ParamStore<T>::NumValues() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

template <typename To, typename From>
void CopyParams(const ParamStore<From>& from, ParamStore<To>& to) {
  for (const auto& [name, src] : from.params()) {
    auto& dst = to.Get(name);
    if (dst.value.shape != src.value.shape) throw Error("shape mismatch for '" + name + "'");
    for (std::size_t i = 0; i < src.value.size(); ++i) {
      dst.value.values[i] = static_cast<To>(src.value.values[i]);
    }
    dst.trainable = src.trainable;
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'L', 'D', 'F', 'C', 'K', 'P', 'T'};

template <typename T>
std::string DtypeName() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw Error("cannot write " + path);
  }
  void Bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void U32(std::uint32_t v) { Bytes(&v, sizeof v); }
  void U64(std::uint64_t v) { Bytes(&v, sizeof v); }
  void Str(const std::string& s) {
    U64(s.size());
    Bytes(s.data(), s.size());
  }
  void Finish() {
    out_.flush();
    if (!out_) throw Error("write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw ParseError(path, 0, "cannot open checkpoint");
  }
  void Bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw ParseError(path_, 0, "truncated checkpoint");
  }
  std::uint32_t U32() {
    std::uint32_t v;
    Bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t U64() {
    std::uint64_t v;
    Bytes(&v, sizeof v);
    return v;
  }
  std::string Str() {
    const auto n = U64();
    if (n > (1ULL << 32)) throw ParseError(path_, 0, "corrupt string length");
    std::string s(n, '\0');
    Bytes(s.data(), n);
    return s;
  }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

template <typename T>
void SaveCheckpoint(const std::string& path, const ParamStore<T>& store,
                    const std::map<std::string, std::string>& metadata) {
  Writer w(path);
  w.Bytes(kMagic, sizeof kMagic);
  w.U32(kCheckpointVersion);
  w.U64(store.seed());
  w.U64(metadata.size());
  for (const auto& [k, v] : metadata) {
    w.Str(k);
    w.Str(v);
  }
  w.U64(store.params().size());
  for (const auto& [name, p] : store.params()) {
    w.Str(name);
    w.Str(DtypeName<T>());
    w.U32(p.trainable ? 1 : 0);
    w.U64(p.value.shape.size());
    for (auto d : p.value.shape) w.U64(d);
    w.Bytes(p.value.values.data(), p.value.size() * sizeof(T));
  }
  w.Finish();
}

template <typename T>
CheckpointHeader LoadCheckpoint(const std::string& path, ParamStore<T>& store) {
  Reader r(path);
  char magic[8];
  r.Bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw ParseError(path, 0, "not a checkpoint");
  CheckpointHeader h;
  h.version = r.U32();
  if (h.version != kCheckpointVersion) {
    throw ParseError(path, 0, "unsupported checkpoint version " + std::to_string(h.version));
  }
  h.seed = r.U64();
  const auto nmeta = r.U64();
  for (std::uint64_t i = 0; i < nmeta; ++i) {
    auto k = r.Str();
    h.metadata[k] = r.Str();
  }
  store = ParamStore<T>(h.seed);
  const auto nparams = r.U64();
  for (std::uint64_t i = 0; i < nparams; ++i) {
    auto name = r.Str();
    auto dtype = r.Str();
    const bool trainable = r.U32() != 0;
    const auto ndim = r.U64();
    if (ndim > 8) throw ParseError(path, 0, "corrupt shape for '" + name + "'");
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = r.U64();
    Tensor<T> t(shape);
    if (dtype == "f32") {
      std::vector<float> raw(t.size());
      r.Bytes(raw.data(), raw.size() * sizeof(float));
      for (std::size_t k = 0; k < raw.size(); ++k) t.values[k] = static_cast<T>(raw[k]);
    } else if (dtype == "f64") {
      std::vector<double> raw(t.size());
      r.Bytes(raw.data(), raw.size() * sizeof(double));
      for (std::size_t k = 0; k < raw.size(); ++k) t.values[k] = static_cast<T>(raw[k]);
    } else {
      throw ParseError(path, 0, "unknown dtype '" + dtype + "'");
    }
    h.dtype = dtype;
    store.Insert(name, std::move(t)).trainable = trainable;
  }
  return h;
}

template struct Tensor<float>;
template struct Tensor<double>;
template class ParamStore<float>;
template class ParamStore<double>;
template void CopyParams<float, double>(const ParamStore<double>&, ParamStore<float>&);
template void CopyParams<double, float>(const ParamStore<float>&, ParamStore<double>&);
template void CopyParams<float, float>(const ParamStore<float>&, ParamStore<float>&);
template void CopyParams<double, double>(const ParamStore<double>&, ParamStore<double>&);
template void SaveCheckpoint<float>(const std::string&, const ParamStore<float>&,
                                    const std::map<std::string, std::string>&);
template void SaveCheckpoint<double>(const std::string&, const ParamStore<double>&,
                                     const std::map<std::string, std::string>&);
template CheckpointHeader LoadCheckpoint<float>(const std::string&, ParamStore<float>&);
template CheckpointHeader LoadCheckpoint<double>(const std::string&, ParamStore<double>&);

}  // namespace polydef::neural
