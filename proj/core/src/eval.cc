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

#include "polydef/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "polydef/postprocess.h"

namespace polydef {

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts CountNgrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> g;
    for (std::size_t k = 0; k < n; ++k) g.push_back(tokens[i + k]);
    ++counts[g];
  }
  return counts;
}

double BleuOneRef(std::span<const std::string> hyp, std::span<const std::string> ref,
                  const BleuConfig& cfg) {
  const std::size_t orders = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_order), hyp.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto h = CountNgrams(hyp, n);
    const auto r = CountNgrams(ref, n);
    std::size_t matches = 0;
    for (const auto& [g, c] : h) {
      auto it = r.find(g);
      if (it != r.end()) matches += std::min(c, it->second);
    }
    const double total = static_cast<double>(hyp.size() - n + 1);
    if (n == 1 && matches == 0 && cfg.zero_without_unigram_match) return 0.0;
    const double p = matches == 0 ? cfg.epsilon / total : static_cast<double>(matches) / total;
    log_sum += std::log(p);
  }
  double score = std::exp(log_sum / static_cast<double>(orders));
  if (cfg.brevity_penalty && hyp.size() < ref.size()) {
    score *= std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
  }
  return score;
}

}  // namespace

double SentenceBleu(std::span<const std::string> hyp, std::span<const Tokens> refs,
                    const BleuConfig& cfg) {
  if (hyp.empty()) throw Error("BLEU of an empty hypothesis");
  if (refs.empty()) throw Error("BLEU needs at least one reference");
  if (cfg.max_order < 1 || !(cfg.epsilon > 0.0)) throw Error("invalid BLEU configuration");
  double best = 0.0;
  for (const auto& ref : refs) best = std::max(best, BleuOneRef(hyp, ref, cfg));
  return best;
}

double SmoothingFloor(std::size_t hyp_length, const BleuConfig& cfg) {
  const std::size_t orders = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_order), hyp_length);
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    log_sum += std::log(cfg.epsilon / static_cast<double>(hyp_length - n + 1));
  }
  return std::exp(log_sum / static_cast<double>(orders));
}

namespace {

template <typename PerWord>
BleuReport Aggregate(const DefinitionSets& outputs, const DefinitionSets& truths, PerWord fn) {
  BleuReport report;
  std::set<std::string> words;
  for (const auto& [w, v] : outputs) words.insert(w);
  for (const auto& [w, v] : truths) words.insert(w);
  double total = 0.0;
  for (const auto& w : words) {
    auto o = outputs.find(w);
    auto t = truths.find(w);
    if (o == outputs.end() || t == truths.end() || o->second.empty() || t->second.empty()) {
      report.skipped.push_back(w);
      continue;
    }
    const double s = fn(o->second, t->second);
    report.per_word[w] = s;
    total += s;
    ++report.words_scored;
  }
  report.score = report.words_scored == 0 ? 0.0 : total / static_cast<double>(report.words_scored);
  return report;
}

}  // namespace

BleuReport CorpusBleu(const DefinitionSets& outputs, const DefinitionSets& truths,
                      const BleuConfig& cfg) {
  return Aggregate(outputs, truths, [&](const auto& outs, const auto& refs) {
    double s = 0.0;
    for (const auto& o : outs) s += SentenceBleu(o, refs, cfg);
    return s / static_cast<double>(outs.size());
  });
}

BleuReport ReverseBleu(const DefinitionSets& outputs, const DefinitionSets& truths,
                       const BleuConfig& cfg) {
  return Aggregate(outputs, truths, [&](const auto& outs, const auto& refs) {
    double s = 0.0;
    for (const auto& t : refs) s += SentenceBleu(t, outs, cfg);
    return s / static_cast<double>(refs.size());
  });
}

double FBleu(double bleu, double rbleu) {
  if (bleu < 0.0 || rbleu < 0.0) throw Error("BLEU scores must be nonnegative");
  if (bleu + rbleu == 0.0) return 0.0;
  return 2.0 * bleu * rbleu / (bleu + rbleu);
}

DefinitionSets GroupDefinitions(std::span<const DictEntry> entries) {
  DefinitionSets sets;
  for (const auto& e : entries) sets[e.word].push_back(e.definition);
  return sets;
}

std::vector<Tokens> BaselineNearestEntry(std::string_view word, std::span<const DictEntry> train,
                                         const EmbeddingTable& table,
                                         std::optional<std::size_t> cap, std::uint64_t seed) {
  if (train.empty()) throw Error("nearest-entry baseline needs training entries");
  const auto target = table.at(word);
  std::set<std::string> candidates;
  for (const auto& e : train) {
    if (e.word != word && table.Contains(e.word)) candidates.insert(e.word);
  }
  if (candidates.empty()) throw Error("no training word has an embedding");
  const std::string* best = nullptr;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {  // lexicographic order breaks ties
    const double s = Cosine(target, table.at(c));
    if (s > best_sim) {
      best_sim = s;
      best = &c;
    }
  }
  std::vector<Tokens> defs;
  for (const auto& e : train) {
    if (e.word == *best) defs.push_back(e.definition);
  }
  if (cap && *cap < defs.size()) {
    std::vector<std::size_t> idx(defs.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = Rng::Derive(seed, Fingerprint(word));
    rng.Shuffle(idx);
    idx.resize(*cap);
    std::sort(idx.begin(), idx.end());
    std::vector<Tokens> sample;
    for (auto i : idx) sample.push_back(defs[i]);
    defs = std::move(sample);
  }
  return defs;
}

std::vector<DictEntry> BaselineRandom(std::span<const DictEntry> corpus, std::uint64_t seed) {
  std::vector<DictEntry> out(corpus.begin(), corpus.end());
  std::vector<std::size_t> perm(out.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.Shuffle(perm);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& src = corpus[perm[i]];
    out[i].pos = src.pos;
    out[i].definition = src.definition;
    out[i].source = src.source;
    out[i].sense_group = src.sense_group;
  }
  return out;
}

// ------------------------------------------------------------ manual labels

Category ParseCategory(std::string_view name) {
  if (name == "I") return Category::kI;
  if (name == "II") return Category::kII;
  if (name == "III") return Category::kIII;
  if (name == "IV") return Category::kIV;
  throw Error("unknown label category '" + std::string(name) + "'");
}

std::string_view CategoryName(Category c) {
  switch (c) {
    case Category::kI: return "I";
    case Category::kII: return "II";
    case Category::kIII: return "III";
    case Category::kIV: return "IV";
  }
  return "IV";
}

void ScoreScheme::Validate() const {
  if (!(1.0 > a && a > b && b > 0.0)) {
    throw Error("score scheme must satisfy 1 > a > b > 0 (a=" + FormatReal(a) +
                ", b=" + FormatReal(b) + ")");
  }
}

double ScoreScheme::Score(Category c) const {
  switch (c) {
    case Category::kI: return 1.0;
    case Category::kII: return a;
    case Category::kIII: return b;
    case Category::kIV: return 0.0;
  }
  return 0.0;
}

TruthGroups CollectTruthGroups(std::span<const DictEntry> truths) {
  TruthGroups groups;
  for (const auto& e : truths) {
    if (e.sense_group) groups[e.word].insert(*e.sense_group);
  }
  return groups;
}

ManualReport ManualPrecisionRecall(std::span<const LabelRecord> labels, const TruthGroups& groups,
                                   const ScoreScheme& scheme) {
  scheme.Validate();
  std::map<std::string, std::vector<const LabelRecord*>> by_word;
  for (const auto& l : labels) by_word[l.word].push_back(&l);
  ManualReport report;
  for (const auto& [word, recs] : by_word) {
    auto g = groups.find(word);
    if (g == groups.end() || g->second.empty()) {
      throw Error("word '" + word + "' has labels but no ground-truth sense groups");
    }
    std::map<int, double> best;
    for (int id : g->second) best[id] = 0.0;
    double total = 0.0;
    for (const auto* r : recs) {
      const double s = scheme.Score(r->category);
      total += s;
      if (r->sense_group) {
        auto it = best.find(*r->sense_group);
        if (it == best.end()) {
          throw Error("label for '" + word + "' names unknown sense group " +
                      std::to_string(*r->sense_group));
        }
        it->second = std::max(it->second, s);
      }
    }
    PrecisionRecall pr;
    pr.precision = total / static_cast<double>(recs.size());
    double covered = 0.0;
    for (const auto& [id, s] : best) covered += s;
    pr.recall = covered / static_cast<double>(best.size());
    report.per_word[word] = pr;
    report.macro.precision += pr.precision;
    report.macro.recall += pr.recall;
  }
  if (!report.per_word.empty()) {
    report.macro.precision /= static_cast<double>(report.per_word.size());
    report.macro.recall /= static_cast<double>(report.per_word.size());
  }
  return report;
}

std::vector<ScoreScheme> ParseSweepGrid(std::string_view text) {
  auto range = [](std::string_view r) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      auto c = r.find(':', start);
      parts.push_back(r.substr(start, c == std::string_view::npos ? r.size() - start : c - start));
      if (c == std::string_view::npos) break;
      start = c + 1;
    }
    if (parts.size() != 3) throw Error("grid range must be lo:hi:step");
    const double lo = ParseReal(parts[0]);
    const double hi = ParseReal(parts[1]);
    const double step = ParseReal(parts[2]);
    if (!(step > 0.0) || hi < lo) throw Error("invalid grid range");
    std::vector<double> values;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i) {
      // round to a decimal grid so 0.1 * 3 prints as 0.3
      values.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
    }
    return values;
  };
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) throw Error("grid needs an 'a=' and a 'b' part");
  auto a_part = text.substr(0, comma);
  auto b_part = text.substr(comma + 1);
  if (a_part.substr(0, 2) != "a=") throw Error("grid must start with 'a=lo:hi:step'");
  const auto a_values = range(a_part.substr(2));
  std::vector<double> b_values;
  if (b_part == "b<a") {
    b_values = a_values;
  } else if (b_part.substr(0, 2) == "b=") {
    b_values = range(b_part.substr(2));
  } else {
    throw Error("grid b part must be 'b<a' or 'b=lo:hi:step'");
  }
  std::vector<ScoreScheme> grid;
  for (double a : a_values) {
    for (double b : b_values) {
      if (b < a && a < 1.0 && b > 0.0) grid.push_back({a, b});
    }
  }
  if (grid.empty()) throw Error("grid has no points with 1 > a > b > 0");
  return grid;
}

SweepResult SensitivitySweep(const std::map<std::string, std::vector<LabelRecord>>& labels,
                             const TruthGroups& groups, std::span<const ScoreScheme> grid) {
  SweepResult result;
  std::optional<std::vector<std::string>> first_p, first_r;
  for (const auto& scheme : grid) {
    scheme.Validate();
    std::vector<std::pair<std::string, PrecisionRecall>> scores;
    for (const auto& [model, recs] : labels) {
      auto rep = ManualPrecisionRecall(recs, groups, scheme);
      scores.emplace_back(model, rep.macro);
      result.rows.push_back({scheme.a, scheme.b, model, rep.macro.precision, rep.macro.recall});
    }
    auto order = [&](auto key) {
      auto s = scores;
      std::stable_sort(s.begin(), s.end(), [&](const auto& x, const auto& y) {
        return key(x.second) > key(y.second);
      });
      std::vector<std::string> names;
      for (auto& [m, pr] : s) names.push_back(m);
      return names;
    };
    auto p = order([](const PrecisionRecall& pr) { return pr.precision; });
    auto r = order([](const PrecisionRecall& pr) { return pr.recall; });
    if (!first_p) {
      first_p = p;
      first_r = r;
    }
    if (p != *first_p) result.precision_order_stable = false;
    if (r != *first_r) result.recall_order_stable = false;
  }
  return result;
}

std::string SweepCsv(const SweepResult& result) {
  std::ostringstream out;
  out << "# polydef-sweep 1\n";
  out << "a,b,model,precision,recall\n";
  for (const auto& r : result.rows) {
    out << FormatReal(r.a) << ',' << FormatReal(r.b) << ',' << r.model << ','
        << FormatReal(r.precision) << ',' << FormatReal(r.recall) << '\n';
  }
  out << "# ranking_stable," << (result.stable() ? "true" : "false") << '\n';
  return out.str();
}

std::vector<AtomFeatureRow> AtomFeatureTable(std::span<const std::string> words,
                                             const AtomSet& atoms, const EmbeddingTable& table,
                                             std::span<const DictEntry> truths,
                                             std::span<const DictEntry> train,
                                             const std::map<std::string, Pos>& pos_lexicon) {
  std::map<std::string, std::size_t> freq;
  for (const auto& e : train) {
    for (const auto& t : e.definition) ++freq[t];
  }
  std::map<std::string, std::size_t> truth_count;
  for (const auto& e : truths) ++truth_count[e.word];
  std::vector<AtomFeatureRow> rows;
  for (const auto& w : words) {
    const auto vec = table.at(w);
    double norm = 0.0;
    for (double x : vec) norm += x * x;
    for (const auto& c : WordAtoms(atoms, w)) {
      AtomFeatureRow row;
      row.word = w;
      row.atom_id = c.atom;
      row.word_frequency = freq.count(w) ? freq.at(w) : 0;
      row.truth_definitions = truth_count.count(w) ? truth_count.at(w) : 0;
      row.embedding_norm = std::sqrt(norm);
      row.atom_weight = c.alpha;
      row.atom_pos = InferPos(atoms.atom(c.atom), table, pos_lexicon).pos;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string AtomFeatureCsv(std::span<const AtomFeatureRow> rows) {
  std::ostringstream out;
  out << "# polydef-atom-features 1\n";
  out << "word,atom_id,word_frequency,truth_definitions,embedding_norm,atom_weight,atom_pos\n";
  for (const auto& r : rows) {
    out << r.word << ',' << r.atom_id << ',' << r.word_frequency << ',' << r.truth_definitions
        << ',' << FormatReal(r.embedding_norm) << ',' << FormatReal(r.atom_weight) << ','
        << PosName(r.atom_pos) << '\n';
  }
  return out.str();
}

}  // namespace polydef
