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

#include "polydef/match.h"

#include <algorithm>
#include <fstream>

namespace polydef {

MatchMode ParseMatchMode(std::string_view name) {
  if (name == "heu" || name == "heuristic") return MatchMode::kHeuristic;
  if (name == "gs") return MatchMode::kGs;
  if (name == "stgs") return MatchMode::kStgs;
  throw Error("unknown match mode '" + std::string(name) + "' (expected heu, gs or stgs)");
}

std::string_view MatchModeName(MatchMode mode) {
  switch (mode) {
    case MatchMode::kHeuristic: return "heu";
    case MatchMode::kGs: return "gs";
    case MatchMode::kStgs: return "stgs";
  }
  return "heu";
}

StopwordList::StopwordList(std::set<std::string> words) : words_(std::move(words)) {
  if (words_.empty()) throw Error("stopword list is empty");
}

StopwordList StopwordList::Default() {
  static const char* const kWords[] = {
      // articles and determiners
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every",
      "either", "neither", "such", "no", "all", "both", "other", "another",
      // prepositions
      "about", "above", "across", "after", "against", "along", "among", "around", "as", "at",
      "before", "behind", "below", "beneath", "beside", "between", "beyond", "by", "down",
      "during", "for", "from", "in", "inside", "into", "near", "of", "off", "on", "onto",
      "out", "outside", "over", "through", "throughout", "to", "toward", "towards", "under",
      "until", "up", "upon", "with", "within", "without", "via",
      // conjunctions
      "and", "or", "but", "nor", "so", "yet", "if", "because", "although", "though", "while",
      "whereas", "whether", "than", "when", "where", "which", "who", "whom", "whose", "what",
      // pronouns
      "i", "me", "my", "mine", "we", "us", "our", "ours", "you", "your", "yours", "he", "him",
      "his", "she", "her", "hers", "it", "its", "they", "them", "their", "theirs", "one",
      "oneself", "someone", "something", "somebody", "itself", "themselves", "himself",
      "herself",
      // auxiliaries
      "be", "is", "am", "are", "was", "were", "been", "being", "have", "has", "had", "having",
      "do", "does", "did", "will", "would", "shall", "should", "can", "could", "may", "might",
      "must",
      // misc function words and punctuation
      "not", "very", "too", "also", "especially", "typically", "usually", "often", "etc",
      ",", ".", ";", ":", "(", ")", "'", "\"", "-", "!", "?"};
  return StopwordList(std::set<std::string>(std::begin(kWords), std::end(kWords)));
}

StopwordList StopwordList::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open stopword file");
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto fields = SplitWhitespace(line);
    if (fields.empty() || fields[0].front() == '#') continue;
    words.insert(std::string(fields[0]));
  }
  if (words.empty()) throw ParseError(path, 0, "stopword file has no entries");
  return StopwordList(std::move(words));
}

std::vector<AtomVector> WordAtomVectors(const AtomSet& set, std::string_view word) {
  auto i = set.Find(word);
  if (!i) throw Error("word has no atoms: '" + std::string(word) + "'");
  std::vector<AtomVector> out;
  for (const auto& c : set.code(*i)) {
    auto a = set.atom(c.atom);
    out.push_back({c.atom, std::vector<double>(a.begin(), a.end())});
  }
  std::sort(out.begin(), out.end(), [](const AtomVector& a, const AtomVector& b) { return a.id < b.id; });
  return out;
}

double HeuristicScore(std::span<const double> similarities) {
  if (similarities.empty()) return 0.0;
  if (similarities.size() == 1) return similarities[0];
  std::vector<double> s(similarities.begin(), similarities.end());
  std::partial_sort(s.begin(), s.begin() + 2, s.end(), std::greater<>());
  return s[0] + s[1];
}

MatchResult MatchFromSimilarities(std::span<const std::size_t> atom_ids,
                                  const std::vector<std::vector<double>>& similarities) {
  if (atom_ids.empty()) throw Error("cannot match a definition to zero atoms");
  if (similarities.size() != atom_ids.size()) throw Error("similarity rows do not match atoms");
  MatchResult r;
  r.mode = MatchMode::kHeuristic;
  r.atom_ids.assign(atom_ids.begin(), atom_ids.end());
  std::size_t best = 0;
  for (std::size_t i = 0; i < atom_ids.size(); ++i) {
    r.scores.push_back(HeuristicScore(similarities[i]));
    const bool better = r.scores[i] > r.scores[best] ||
                        (r.scores[i] == r.scores[best] && atom_ids[i] < atom_ids[best]);
    if (i == 0 || better) best = i;
  }
  r.weights.assign(atom_ids.size(), 0.0);
  r.weights[best] = 1.0;
  r.chosen_atom = atom_ids[best];
  return r;
}

MatchResult MatchHeuristic(const DictEntry& entry, std::span<const AtomVector> atoms,
                           const EmbeddingTable& table, const StopwordList& stopwords) {
  if (atoms.empty()) throw Error("word '" + entry.word + "' has no atoms");
  auto collect = [&](bool prune) {
    std::set<std::string> seen;
    std::vector<std::size_t> rows;
    for (const auto& t : entry.definition) {
      if (prune && stopwords.Contains(t)) continue;
      if (!seen.insert(t).second) continue;
      if (auto i = table.Find(t)) rows.push_back(*i);
    }
    return rows;
  };
  auto rows = collect(true);
  if (rows.empty()) rows = collect(false);
  if (rows.empty()) {
    throw Error("no definition word of '" + entry.word + "' has an embedding");
  }
  std::vector<std::size_t> ids;
  std::vector<std::vector<double>> sims;
  for (const auto& a : atoms) {
    ids.push_back(a.id);
    std::vector<double> row;
    for (auto r : rows) row.push_back(Cosine(a.vec, table.vector(r)));
    sims.push_back(std::move(row));
  }
  return MatchFromSimilarities(ids, sims);
}

std::vector<double> MatchLogits(std::span<const double> def_vec,
                                std::span<const AtomVector> atoms) {
  if (atoms.empty()) throw Error("cannot compute logits over zero atoms");
  std::vector<double> out;
  for (const auto& a : atoms) {
    if (a.vec.size() != def_vec.size()) throw Error("atom width does not match definition vector");
    double s = 0.0;
    for (std::size_t i = 0; i < def_vec.size(); ++i) s += def_vec[i] * a.vec[i];
    out.push_back(s);
  }
  return out;
}

MatchResult MatchSampled(std::span<const std::size_t> atom_ids, std::span<const double> logits,
                         const neural::GumbelConfig& cfg, Rng& rng) {
  if (atom_ids.size() != logits.size()) throw Error("logits do not match atoms");
  MatchResult r;
  r.mode = cfg.straight_through ? MatchMode::kStgs : MatchMode::kGs;
  r.atom_ids.assign(atom_ids.begin(), atom_ids.end());
  r.scores.assign(logits.begin(), logits.end());
  r.weights = neural::GumbelSoftmaxSample(logits, cfg, rng);
  const auto best =
      static_cast<std::size_t>(std::max_element(r.weights.begin(), r.weights.end()) - r.weights.begin());
  r.chosen_atom = atom_ids[best];
  return r;
}

std::vector<double> WeightedAtomEmbedding(std::span<const double> weights,
                                          std::span<const AtomVector> atoms) {
  if (weights.size() != atoms.size() || atoms.empty()) throw Error("weights do not match atoms");
  std::vector<double> out(atoms[0].vec.size(), 0.0);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += weights[i] * atoms[i].vec[d];
  }
  return out;
}

namespace neural {

template <typename T>
DefinitionEncoder<T>::DefinitionEncoder(ParamStore<T>& store, const std::string& prefix,
                                        Parameter<T>& token_emb, std::size_t units,
                                        std::size_t layers)
    : token_emb_(&token_emb),
      lstm_(store, prefix + ".lstm", token_emb.value.cols(), units, layers) {}

template <typename T>
DefinitionEncoder<T> DefinitionEncoder<T>::Bind(ParamStore<T>& store, const std::string& prefix,
                                                Parameter<T>& token_emb, std::size_t layers) {
  DefinitionEncoder enc;
  enc.token_emb_ = &token_emb;
  enc.lstm_ = Lstm<T>::Bind(store, prefix + ".lstm", layers);
  return enc;
}

template <typename T>
Var DefinitionEncoder<T>::Encode(Graph<T>& g, std::span<const std::size_t> token_ids, T dropout,
                                 Rng& rng) const {
  if (token_ids.empty()) throw Error("cannot encode an empty definition");
  std::vector<Var> inputs;
  for (auto id : token_ids) inputs.push_back(g.Row(*token_emb_, id));
  return lstm_.Forward(g, inputs, nullptr, dropout, rng).top.back();
}

template <typename T>
AtomScorer<T>::AtomScorer(ParamStore<T>& store, const std::string& prefix, std::size_t atom_dim,
                          std::size_t units) {
  if (atom_dim != units) adapter_ = &store.Create(prefix + ".adapter", {units, atom_dim}, Init::kWeight);
}

template <typename T>
AtomScorer<T> AtomScorer<T>::Bind(ParamStore<T>& store, const std::string& prefix,
                                  std::size_t atom_dim, std::size_t units) {
  AtomScorer s;
  if (atom_dim != units) s.adapter_ = &store.Get(prefix + ".adapter");
  return s;
}

template <typename T>
Var AtomScorer<T>::Logits(Graph<T>& g, Var def_vec, std::span<const AtomVector> atoms) const {
  if (atoms.empty()) throw Error("cannot compute logits over zero atoms");
  std::vector<Var> logits;
  for (const auto& a : atoms) {
    Var av = g.Constant(std::vector<T>(a.vec.begin(), a.vec.end()));
    if (adapter_) av = g.MatVec(*adapter_, av);
    logits.push_back(g.Dot(def_vec, av));
  }
  return g.Concat(logits);
}

template class DefinitionEncoder<float>;
template class DefinitionEncoder<double>;
template class AtomScorer<float>;
template class AtomScorer<double>;

}  // namespace neural
}  // namespace polydef
