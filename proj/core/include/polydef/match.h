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

#ifndef POLYDEF_MATCH_H_
#define POLYDEF_MATCH_H_

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polydef/corpus.h"
#include "polydef/neural/graph.h"
#include "polydef/neural/layers.h"
#include "polydef/neural/tensor.h"
#include "polydef/sparse_decomp.h"

namespace polydef {

enum class MatchMode { kHeuristic, kGs, kStgs };

MatchMode ParseMatchMode(std::string_view name);  // "heu", "gs", "stgs"
std::string_view MatchModeName(MatchMode mode);

// Assignment of one definition to the target word's atoms.
struct MatchResult {
  std::vector<std::size_t> atom_ids;
  std::vector<double> weights;  // same order as atom_ids
  std::vector<double> scores;   // heuristic scores or logits
  std::size_t chosen_atom = 0;
  MatchMode mode = MatchMode::kHeuristic;
};

class StopwordList {
 public:
  explicit StopwordList(std::set<std::string> words);
  // Articles, prepositions, conjunctions, pronouns and auxiliaries.
  static StopwordList Default();
  // One token per line; blank lines and '#' comments ignored.
  static StopwordList Load(const std::string& path);

  bool Contains(std::string_view token) const { return words_.count(std::string(token)) > 0; }
  std::size_t size() const { return words_.size(); }

 private:
  std::set<std::string> words_;
};

struct AtomVector {
  std::size_t id = 0;
  std::vector<double> vec;
};

// The word's atoms in ascending id order. Throws Error for unknown words.
std::vector<AtomVector> WordAtomVectors(const AtomSet& set, std::string_view word);

// Sum of the two largest entries (the single entry when there is one).
double HeuristicScore(std::span<const double> similarities);

// similarities[i][t]: cosine between atom i and pruned definition word t.
// One-hot at the best score; ties go to the lowest atom id.
MatchResult MatchFromSimilarities(std::span<const std::size_t> atom_ids,
                                  const std::vector<std::vector<double>>& similarities);

// Drops stopwords (falling back to all tokens when nothing is left) and
// words missing from `table`, then scores each atom by its two most similar
// definition words. Throws Error when the word has no atoms or no definition
// word has an embedding.
MatchResult MatchHeuristic(const DictEntry& entry, std::span<const AtomVector> atoms,
                           const EmbeddingTable& table, const StopwordList& stopwords);

// logits_i = <def_vec, atom_i>
std::vector<double> MatchLogits(std::span<const double> def_vec,
                                std::span<const AtomVector> atoms);

// GS: soft Gumbel-Softmax weights. STGS: one-hot at the sampled argmax.
MatchResult MatchSampled(std::span<const std::size_t> atom_ids, std::span<const double> logits,
                         const neural::GumbelConfig& cfg, Rng& rng);

// sum_i weights_i * atom_i
std::vector<double> WeightedAtomEmbedding(std::span<const double> weights,
                                          std::span<const AtomVector> atoms);

namespace neural {

// Two-layer LSTM over definition token embeddings; the definition vector is
// the final top-layer hidden state. Parameters live under "<prefix>.lstm".
template <typename T>
class DefinitionEncoder {
 public:
  DefinitionEncoder() = default;
  DefinitionEncoder(ParamStore<T>& store, const std::string& prefix, Parameter<T>& token_emb,
                    std::size_t units, std::size_t layers);
  static DefinitionEncoder Bind(ParamStore<T>& store, const std::string& prefix,
                                Parameter<T>& token_emb, std::size_t layers);

  std::size_t units() const { return lstm_.units(); }
  Var Encode(Graph<T>& g, std::span<const std::size_t> token_ids, T dropout, Rng& rng) const;

 private:
  Parameter<T>* token_emb_ = nullptr;
  Lstm<T> lstm_;
};

// Atom logits against a definition vector. When the atom width differs from
// the encoder width, atoms pass through a shared learned linear map
// "<prefix>.adapter" [units x atom_dim] first.
template <typename T>
class AtomScorer {
 public:
  AtomScorer() = default;
  AtomScorer(ParamStore<T>& store, const std::string& prefix, std::size_t atom_dim,
             std::size_t units);
  static AtomScorer Bind(ParamStore<T>& store, const std::string& prefix, std::size_t atom_dim,
                         std::size_t units);

  Var Logits(Graph<T>& g, Var def_vec, std::span<const AtomVector> atoms) const;

 private:
  Parameter<T>* adapter_ = nullptr;
};

}  // namespace neural
}  // namespace polydef

#endif  // POLYDEF_MATCH_H_
