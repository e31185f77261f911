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

#include "polydef/postprocess.h"

#include <algorithm>
#include <cstdint>
#include <numeric>

namespace polydef {

PosLexicon BuildPosLexicon(std::span<const DictEntry> entries) {
  std::map<std::string, std::array<std::size_t, kNumPos>> counts;
  for (const auto& e : entries) ++counts[e.word][static_cast<std::size_t>(e.pos)];
  PosLexicon lex;
  for (const auto& [w, c] : counts) {
    const auto best = std::max_element(c.begin(), c.end()) - c.begin();
    lex[w] = static_cast<Pos>(best);
  }
  return lex;
}

PosVote InferPos(std::span<const double> atom, const EmbeddingTable& table,
                 const PosLexicon& lexicon, std::size_t k) {
  if (k == 0) throw Error("POS vote needs k >= 1");
  PosVote vote;
  std::vector<Pos> order;  // voter classes, nearest first
  for (const auto& n : NearestWords(table, atom, std::min(k, table.size()))) {
    auto it = lexicon.find(n.word);
    if (it == lexicon.end()) continue;
    ++vote.counts[static_cast<std::size_t>(it->second)];
    order.push_back(it->second);
  }
  vote.voters = order.size();
  if (order.empty()) {
    vote.pos = Pos::kNoun;
    vote.fallback = true;
    return vote;
  }
  const std::size_t top = *std::max_element(vote.counts.begin(), vote.counts.end());
  for (Pos p : order) {
    if (vote.counts[static_cast<std::size_t>(p)] == top) {
      vote.pos = p;
      break;
    }
  }
  return vote;
}

double SymmetricBleu(std::span<const std::string> a, std::span<const std::string> b,
                     const BleuConfig& cfg) {
  if (a.empty() || b.empty()) throw Error("symmetric BLEU of an empty sequence");
  const Tokens ta(a.begin(), a.end());
  const Tokens tb(b.begin(), b.end());
  return 0.5 * (SentenceBleu(a, std::span<const Tokens>(&tb, 1), cfg) +
                SentenceBleu(b, std::span<const Tokens>(&ta, 1), cfg));
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t Find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void Join(std::size_t a, std::size_t b) {
    a = Find(a);
    b = Find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

MergedOutputs MergeOutputs(std::span<const DefinitionOutput> outputs, double threshold,
                           const BleuConfig& cfg) {
  MergedOutputs merged;
  const std::size_t n = outputs.size();
  if (n == 0) return merged;
  std::vector<Tokens> text;
  for (const auto& o : outputs) text.push_back(StripEos(o.tokens));
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d;
      if (text[i].empty() || text[j].empty()) {
        d = text[i].empty() && text[j].empty() ? 1.0 : 0.0;
      } else {
        d = SymmetricBleu(text[i], text[j], cfg);
      }
      if (d > threshold) uf.Join(i, j);
    }
  }
  std::map<std::size_t, std::size_t> group_index;
  merged.group_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = uf.Find(i);
    auto [it, fresh] = group_index.emplace(root, merged.groups.size());
    if (fresh) merged.groups.emplace_back();
    merged.groups[it->second].push_back(i);
    merged.group_of[i] = it->second;
  }
  auto better = [&](std::size_t a, std::size_t b) {
    const auto& x = outputs[a];
    const auto& y = outputs[b];
    if (x.score != y.score) return x.score > y.score;
    const auto ax = x.atom_id.value_or(SIZE_MAX);
    const auto ay = y.atom_id.value_or(SIZE_MAX);
    if (ax != ay) return ax < ay;
    return a < b;
  };
  for (const auto& g : merged.groups) {
    merged.representatives.push_back(*std::min_element(g.begin(), g.end(), better));
  }
  return merged;
}

}  // namespace polydef
