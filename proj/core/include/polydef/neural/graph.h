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

#ifndef POLYDEF_NEURAL_GRAPH_H_
#define POLYDEF_NEURAL_GRAPH_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "polydef/common.h"
#include "polydef/neural/tensor.h"

namespace polydef::neural {

// Handle to a node of a Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Tape for reverse-mode differentiation over vector-valued nodes. Build the
// forward computation by calling ops, then Backward() on a scalar node
// accumulates gradients into every Parameter the graph touched. A graph is
// single-use and single-threaded; independent examples use separate graphs.
template <typename T>
class Graph {
 public:
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using VecMap = Eigen::Map<Vec>;
  using ConstVecMap = Eigen::Map<const Vec>;
  using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatMap =
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  explicit Graph(bool training = false) : training_(training) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  const std::vector<T>& value(Var v) const { return nodes_[Check(v)].value; }
  const std::vector<T>& grad(Var v) const { return nodes_[Check(v)].grad; }
  std::size_t size(Var v) const { return value(v).size(); }
  T scalar(Var v) const { return value(v).at(0); }

  Var Constant(std::vector<T> v) { return Push(std::move(v), nullptr); }
  Var Constant(std::span<const T> v) { return Push(std::vector<T>(v.begin(), v.end()), nullptr); }

  // The whole parameter as one flat vector.
  Var Param(Parameter<T>& p) {
    Parameter<T>* pp = &p;
    return Push(p.value.values, [pp](Graph& g, int self) {
      if (!pp->trainable) return;
      const auto& d = g.nodes_[self].grad;
      for (std::size_t i = 0; i < d.size(); ++i) pp->grad.values[i] += d[i];
    });
  }

  // Concatenated rows of a 2-D parameter (embedding lookup).
  Var Rows(Parameter<T>& table, std::span<const std::size_t> rows) {
    const std::size_t width = table.value.cols();
    std::vector<T> out;
    out.reserve(rows.size() * width);
    for (auto r : rows) {
      if (r >= table.value.rows()) throw Error("embedding row out of range");
      auto src = table.value.row(r);
      out.insert(out.end(), src.begin(), src.end());
    }
    Parameter<T>* pp = &table;
    std::vector<std::size_t> ids(rows.begin(), rows.end());
    return Push(std::move(out), [pp, ids, width](Graph& g, int self) {
      if (!pp->trainable) return;
      const auto& d = g.nodes_[self].grad;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        auto dst = pp->grad.row(ids[k]);
        for (std::size_t c = 0; c < width; ++c) dst[c] += d[k * width + c];
      }
    });
  }
  Var Row(Parameter<T>& table, std::size_t row) { return Rows(table, {&row, 1}); }

  // w [out x in] times x.
  Var MatVec(Parameter<T>& w, Var x) {
    const auto rows = static_cast<Eigen::Index>(w.value.rows());
    const auto cols = static_cast<Eigen::Index>(w.value.cols());
    if (static_cast<Eigen::Index>(size(x)) != cols) {
      throw Error("matvec width mismatch: " + std::to_string(size(x)) + " vs " +
                  std::to_string(cols));
    }
    std::vector<T> out(static_cast<std::size_t>(rows));
    VecMap(out.data(), rows).noalias() =
        ConstMatMap(w.value.values.data(), rows, cols) * ConstVecMap(value(x).data(), cols);
    Parameter<T>* pp = &w;
    const int xi = x.id;
    return Push(std::move(out), [pp, xi, rows, cols](Graph& g, int self) {
      ConstVecMap dy(g.nodes_[self].grad.data(), rows);
      if (pp->trainable) {
        MatMap(pp->grad.values.data(), rows, cols).noalias() +=
            dy * ConstVecMap(g.nodes_[xi].value.data(), cols).transpose();
      }
      VecMap(g.nodes_[xi].grad.data(), cols).noalias() +=
          ConstMatMap(pp->value.values.data(), rows, cols).transpose() * dy;
    });
  }

  Var Affine(Parameter<T>& w, Var x, Parameter<T>& b) { return Add(MatVec(w, x), Param(b)); }

  Var Add(Var a, Var b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    SameSize(av, bv, "add");
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return Push(std::move(out), [a, b](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      auto& da = g.nodes_[a.id].grad;
      auto& db = g.nodes_[b.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) {
        da[i] += d[i];
        db[i] += d[i];
      }
    });
  }

  Var Sub(Var a, Var b) { return Add(a, Scale(b, T(-1))); }

  Var Mul(Var a, Var b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    SameSize(av, bv, "mul");
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return Push(std::move(out), [a, b](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      const auto& av = g.nodes_[a.id].value;
      const auto& bv = g.nodes_[b.id].value;
      auto& da = g.nodes_[a.id].grad;
      auto& db = g.nodes_[b.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) {
        da[i] += d[i] * bv[i];
        db[i] += d[i] * av[i];
      }
    });
  }

  Var Scale(Var a, T s) {
    std::vector<T> out = value(a);
    for (auto& x : out) x *= s;
    return Push(std::move(out), [a, s](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      auto& da = g.nodes_[a.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += s * d[i];
    });
  }

  // 1 - a
  Var OneMinus(Var a) {
    std::vector<T> out = value(a);
    for (auto& x : out) x = T(1) - x;
    return Push(std::move(out), [a](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      auto& da = g.nodes_[a.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) da[i] -= d[i];
    });
  }

  Var Sigmoid(Var a) {
    std::vector<T> out = value(a);
    for (auto& x : out) x = T(1) / (T(1) + std::exp(-x));
    return Push(std::move(out), [a](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      const auto& y = g.nodes_[self].value;
      auto& da = g.nodes_[a.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * y[i] * (T(1) - y[i]);
    });
  }

  Var Tanh(Var a) {
    std::vector<T> out = value(a);
    for (auto& x : out) x = std::tanh(x);
    return Push(std::move(out), [a](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      const auto& y = g.nodes_[self].value;
      auto& da = g.nodes_[a.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * (T(1) - y[i] * y[i]);
    });
  }

  Var Concat(std::span<const Var> parts) {
    std::vector<T> out;
    std::vector<std::pair<int, std::size_t>> spans;
    for (Var p : parts) {
      const auto& v = value(p);
      spans.push_back({p.id, out.size()});
      out.insert(out.end(), v.begin(), v.end());
    }
    return Push(std::move(out), [spans](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      for (auto [id, off] : spans) {
        auto& dp = g.nodes_[id].grad;
        for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += d[off + i];
      }
    });
  }
  Var Concat(std::initializer_list<Var> parts) {
    return Concat(std::span<const Var>(parts.begin(), parts.size()));
  }

  Var Slice(Var a, std::size_t offset, std::size_t len) {
    const auto& av = value(a);
    if (offset + len > av.size()) throw Error("slice out of range");
    std::vector<T> out(av.begin() + static_cast<std::ptrdiff_t>(offset),
                       av.begin() + static_cast<std::ptrdiff_t>(offset + len));
    return Push(std::move(out), [a, offset](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      auto& da = g.nodes_[a.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) da[offset + i] += d[i];
    });
  }

  Var Dot(Var a, Var b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    SameSize(av, bv, "dot");
    T s = T(0);
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    return Push({s}, [a, b](Graph& g, int self) {
      const T d = g.nodes_[self].grad[0];
      const auto& av = g.nodes_[a.id].value;
      const auto& bv = g.nodes_[b.id].value;
      auto& da = g.nodes_[a.id].grad;
      auto& db = g.nodes_[b.id].grad;
      for (std::size_t i = 0; i < av.size(); ++i) {
        da[i] += d * bv[i];
        db[i] += d * av[i];
      }
    });
  }

  Var Sum(Var a) {
    T s = T(0);
    for (T x : value(a)) s += x;
    return Push({s}, [a](Graph& g, int self) {
      const T d = g.nodes_[self].grad[0];
      for (auto& x : g.nodes_[a.id].grad) x += d;
    });
  }

  Var LogSoftmax(Var a) {
    const auto& av = value(a);
    if (av.empty()) throw Error("log-softmax of an empty vector");
    const T mx = *std::max_element(av.begin(), av.end());
    T z = T(0);
    for (T x : av) z += std::exp(x - mx);
    const T lse = mx + std::log(z);
    std::vector<T> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - lse;
    return Push(std::move(out), [a](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      const auto& y = g.nodes_[self].value;
      T total = T(0);
      for (T x : d) total += x;
      auto& da = g.nodes_[a.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] - std::exp(y[i]) * total;
    });
  }

  Var Pick(Var a, std::size_t i) {
    if (i >= size(a)) throw Error("pick index out of range");
    return Push({value(a)[i]}, [a, i](Graph& g, int self) {
      g.nodes_[a.id].grad[i] += g.nodes_[self].grad[0];
    });
  }

  // sum_i exp(logp[idx_i]): probability mass of a set of entries given a
  // log-probability vector. Indices are taken as a set.
  Var MassAt(Var logp, std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    const auto& lv = value(logp);
    T s = T(0);
    for (auto i : idx) s += std::exp(lv.at(i));
    return Push({s}, [logp, idx](Graph& g, int self) {
      const T d = g.nodes_[self].grad[0];
      const auto& lv = g.nodes_[logp.id].value;
      auto& dl = g.nodes_[logp.id].grad;
      for (auto i : idx) dl[i] += d * std::exp(lv[i]);
    });
  }

  // softmax((logits + noise) / tau). In straight-through mode the forward
  // value is one-hot at the argmax (lowest index on ties) while the backward
  // pass differentiates the soft sample.
  Var GumbelSoftmax(Var logits, std::span<const T> noise, T tau, bool straight_through) {
    const auto& lv = value(logits);
    if (lv.empty()) throw Error("gumbel-softmax over zero categories");
    if (noise.size() != lv.size()) throw Error("gumbel noise width mismatch");
    if (!(tau > T(0))) throw Error("temperature must be positive");
    std::vector<T> soft = SoftmaxValues(lv, noise, tau);
    std::vector<T> out = soft;
    if (straight_through) {
      const auto best = static_cast<std::size_t>(
          std::max_element(soft.begin(), soft.end()) - soft.begin());
      std::fill(out.begin(), out.end(), T(0));
      out[best] = T(1);
    }
    return Push(std::move(out), [logits, soft, tau](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      T inner = T(0);
      for (std::size_t i = 0; i < d.size(); ++i) inner += soft[i] * d[i];
      auto& dl = g.nodes_[logits.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) dl[i] += soft[i] * (d[i] - inner) / tau;
    });
  }

  // sum_i weights_i * rows_i with constant rows.
  Var Combine(Var weights, std::vector<std::vector<T>> rows) {
    const auto& w = value(weights);
    if (rows.size() != w.size() || rows.empty()) throw Error("combine arity mismatch");
    std::vector<T> out(rows[0].size(), T(0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      SameSize(rows[i], out, "combine");
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[i] * rows[i][c];
    }
    return Push(std::move(out), [weights, rows = std::move(rows)](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      auto& dw = g.nodes_[weights.id].grad;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        T s = T(0);
        for (std::size_t c = 0; c < d.size(); ++c) s += d[c] * rows[i][c];
        dw[i] += s;
      }
    });
  }

  // Inverted dropout; identity outside training mode or at rate 0.
  Var Dropout(Var a, T rate, Rng& rng) {
    if (!training_ || rate <= T(0)) return a;
    const T keep = T(1) - rate;
    std::vector<T> mask(size(a));
    for (auto& m : mask) m = rng.Uniform() < static_cast<double>(keep) ? T(1) / keep : T(0);
    std::vector<T> out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return Push(std::move(out), [a, mask](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      auto& da = g.nodes_[a.id].grad;
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * mask[i];
    });
  }

  // 1-D convolution (stride 1, no padding) of a sequence of `width`-wide
  // vectors with filters w [filters x window*width] and bias b [filters],
  // followed by a max over positions. Needs at least `window` positions.
  Var ConvMaxPool(Var seq, std::size_t width, std::size_t window, Parameter<T>& w,
                  Parameter<T>& b) {
    const auto& sv = value(seq);
    const std::size_t len = sv.size() / width;
    const std::size_t filters = w.value.rows();
    if (len < window) throw Error("sequence shorter than convolution window");
    if (w.value.cols() != window * width || b.value.size() != filters) {
      throw Error("convolution parameter shape mismatch");
    }
    std::vector<T> out(filters, -std::numeric_limits<T>::infinity());
    std::vector<std::size_t> argmax(filters, 0);
    const std::size_t span_len = window * width;
    for (std::size_t f = 0; f < filters; ++f) {
      auto wf = w.value.row(f);
      for (std::size_t p = 0; p + window <= len; ++p) {
        T s = b.value.values[f];
        const T* x = sv.data() + p * width;
        for (std::size_t k = 0; k < span_len; ++k) s += wf[k] * x[k];
        if (s > out[f]) {
          out[f] = s;
          argmax[f] = p;
        }
      }
    }
    Parameter<T>* wp = &w;
    Parameter<T>* bp = &b;
    return Push(std::move(out), [seq, wp, bp, argmax, width, span_len](Graph& g, int self) {
      const auto& d = g.nodes_[self].grad;
      const auto& sv = g.nodes_[seq.id].value;
      auto& ds = g.nodes_[seq.id].grad;
      for (std::size_t f = 0; f < d.size(); ++f) {
        const std::size_t off = argmax[f] * width;
        auto wf = wp->value.row(f);
        if (wp->trainable) {
          auto gf = wp->grad.row(f);
          for (std::size_t k = 0; k < span_len; ++k) gf[k] += d[f] * sv[off + k];
        }
        if (bp->trainable) bp->grad.values[f] += d[f];
        for (std::size_t k = 0; k < span_len; ++k) ds[off + k] += d[f] * wf[k];
      }
    });
  }

  // Seeds d(loss)/d(loss) = 1 and runs the tape backwards.
  void Backward(Var loss) {
    Check(loss);
    if (size(loss) != 1) throw Error("backward needs a scalar");
    for (auto& n : nodes_) n.grad.assign(n.value.size(), T(0));
    nodes_[loss.id].grad[0] = T(1);
    for (int i = loss.id; i >= 0; --i) {
      if (nodes_[i].backward) nodes_[i].backward(*this, i);
    }
  }

  static std::vector<T> SoftmaxValues(std::span<const T> logits, std::span<const T> noise, T tau) {
    std::vector<T> y(logits.size());
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = (logits[i] + (noise.empty() ? T(0) : noise[i])) / tau;
      mx = std::max(mx, y[i]);
    }
    T z = T(0);
    for (auto& v : y) {
      v = std::exp(v - mx);
      z += v;
    }
    for (auto& v : y) v /= z;
    return y;
  }

 private:
  struct Node {
    std::vector<T> value;
    std::vector<T> grad;
    std::function<void(Graph&, int)> backward;
  };

  Var Push(std::vector<T> value, std::function<void(Graph&, int)> backward) {
    nodes_.push_back(Node{std::move(value), {}, std::move(backward)});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::size_t Check(Var v) const {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) throw Error("invalid graph variable");
    return static_cast<std::size_t>(v.id);
  }

  static void SameSize(const std::vector<T>& a, const std::vector<T>& b, const char* op) {
    if (a.size() != b.size()) {
      throw Error(std::string(op) + " width mismatch: " + std::to_string(a.size()) + " vs " +
                  std::to_string(b.size()));
    }
  }

  bool training_;
  std::vector<Node> nodes_;
};

}  // namespace polydef::neural

#endif  // POLYDEF_NEURAL_GRAPH_H_
