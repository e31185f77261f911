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

#ifndef POLYDEF_EVAL_H_
#define POLYDEF_EVAL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polydef/corpus.h"
#include "polydef/sparse_decomp.h"

namespace polydef {

using Tokens = std::vector<std::string>;

struct BleuConfig {
  int max_order = 4;
  // Numerator used for an n-gram order with no matches.
  double epsilon = 0.01;
  bool brevity_penalty = true;
  // A hypothesis sharing no unigram with a reference scores exactly 0
  // instead of the smoothed floor.
  bool zero_without_unigram_match = true;
};

// Modified n-gram precision BLEU against each reference, maximum over
// references. Orders above min(max_order, |hyp|) are dropped. Throws Error
// for an empty hypothesis or no references.
double SentenceBleu(std::span<const std::string> hyp, std::span<const Tokens> refs,
                    const BleuConfig& cfg = {});

// The largest score a hypothesis of this length can get with no n-gram
// match at any order (before any brevity penalty).
double SmoothingFloor(std::size_t hyp_length, const BleuConfig& cfg = {});

using DefinitionSets = std::map<std::string, std::vector<Tokens>>;

struct BleuReport {
  double score = 0.0;
  std::size_t words_scored = 0;
  std::vector<std::string> skipped;  // words missing outputs or ground truth
  std::map<std::string, double> per_word;
};

// Per word: mean over outputs of max-over-truths sentence BLEU; then the
// unweighted mean over words.
BleuReport CorpusBleu(const DefinitionSets& outputs, const DefinitionSets& truths,
                      const BleuConfig& cfg = {});

// Roles swapped: per word, mean over ground truths of max-over-outputs BLEU.
BleuReport ReverseBleu(const DefinitionSets& outputs, const DefinitionSets& truths,
                       const BleuConfig& cfg = {});

// Harmonic mean 2br / (b + r); 0 when both are 0.
double FBleu(double bleu, double rbleu);

DefinitionSets GroupDefinitions(std::span<const DictEntry> entries);

// Nearest-embedding baseline: all definitions of the training word closest
// (cosine) to `word`, or a seeded sample of `cap` of them. The word itself
// is never its own neighbor.
std::vector<Tokens> BaselineNearestEntry(std::string_view word, std::span<const DictEntry> train,
                                         const EmbeddingTable& table,
                                         std::optional<std::size_t> cap, std::uint64_t seed);

// Shuffles which word each (pos, definition) belongs to. Words keep their
// entry counts; fixed points are allowed.
std::vector<DictEntry> BaselineRandom(std::span<const DictEntry> corpus, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Manual labels.

enum class Category { kI, kII, kIII, kIV };

Category ParseCategory(std::string_view name);  // "I".."IV"
std::string_view CategoryName(Category c);

struct LabelRecord {
  std::string word;
  std::size_t output_id = 0;
  Category category = Category::kIV;
  std::optional<int> sense_group;
};

// Scores for categories II (a) and III (b); I is 1 and IV is 0.
struct ScoreScheme {
  double a = 0.6;
  double b = 0.3;

  void Validate() const;  // requires 1 > a > b > 0
  double Score(Category c) const;
};

using TruthGroups = std::map<std::string, std::set<int>>;

// sense_group values of each word's ground-truth entries.
TruthGroups CollectTruthGroups(std::span<const DictEntry> truths);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

struct ManualReport {
  std::map<std::string, PrecisionRecall> per_word;
  PrecisionRecall macro;
};

// precision: mean output score. recall: for each truth group the best score
// among outputs linked to it (0 if none), summed and divided by the number of
// groups. Macro figures average over words.
ManualReport ManualPrecisionRecall(std::span<const LabelRecord> labels, const TruthGroups& groups,
                                   const ScoreScheme& scheme);

struct SweepRow {
  double a = 0.0;
  double b = 0.0;
  std::string model;
  double precision = 0.0;
  double recall = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool precision_order_stable = true;
  bool recall_order_stable = true;
  bool stable() const { return precision_order_stable && recall_order_stable; }
};

// "a=lo:hi:step,b<a" or "a=lo:hi:step,b=lo:hi:step"; keeps points with b < a.
std::vector<ScoreScheme> ParseSweepGrid(std::string_view text);

SweepResult SensitivitySweep(const std::map<std::string, std::vector<LabelRecord>>& labels,
                             const TruthGroups& groups, std::span<const ScoreScheme> grid);

std::string SweepCsv(const SweepResult& result);

// ---------------------------------------------------------------------------
// Per-atom attributes for offline error analysis.

struct AtomFeatureRow {
  std::string word;
  std::size_t atom_id = 0;
  std::size_t word_frequency = 0;  // occurrences as a definition token
  std::size_t truth_definitions = 0;
  double embedding_norm = 0.0;
  double atom_weight = 0.0;
  Pos atom_pos = Pos::kOther;
};

std::vector<AtomFeatureRow> AtomFeatureTable(std::span<const std::string> words,
                                             const AtomSet& atoms, const EmbeddingTable& table,
                                             std::span<const DictEntry> truths,
                                             std::span<const DictEntry> train,
                                             const std::map<std::string, Pos>& pos_lexicon);

std::string AtomFeatureCsv(std::span<const AtomFeatureRow> rows);

}  // namespace polydef

#endif  // POLYDEF_EVAL_H_
