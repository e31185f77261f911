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

#ifndef POLYDEF_CORPUS_H_
#define POLYDEF_CORPUS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "polydef/common.h"

namespace polydef {

// Words mapped to dense vectors of one fixed width. Insertion order is kept.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  // Throws Error on a duplicate word or a vector of the wrong width.
  void Add(std::string word, std::span<const double> vec);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(std::size_t i) const { return words_[i]; }
  std::span<const double> vector(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  double norm(std::size_t i) const { return norms_[i]; }

  std::optional<std::size_t> Find(std::string_view word) const;
  bool Contains(std::string_view word) const { return Find(word).has_value(); }
  // Throws Error for unknown words.
  std::span<const double> at(std::string_view word) const;

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.words_ == b.words_ && a.values_ == b.values_;
  }

 private:
  std::size_t dim_;
  std::vector<std::string> words_;
  std::vector<double> values_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Text format: "<vocab_size> <dim>" header, then "word v1 ... v_dim" rows.
EmbeddingTable LoadEmbeddings(const std::string& path);
void SaveEmbeddings(const EmbeddingTable& table, const std::string& path);

struct DictEntry {
  std::string word;
  Pos pos = Pos::kOther;
  std::vector<std::string> definition;
  std::string source;
  std::optional<int> sense_group;
};

// Lowercases, detaches ASCII punctuation (apostrophes and hyphens inside a
// word stay attached) and splits on whitespace.
std::vector<std::string> Tokenize(std::string_view text);

// One JSON object per line with fields word, pos, definition and optional
// source / sense_group. Blank lines are ignored.
std::vector<DictEntry> LoadDictionary(const std::string& path);
DictEntry ParseDictRecord(std::string_view json_line);  // throws Error
void SaveDictionary(std::span<const DictEntry> entries, const std::string& path);

struct CorpusSplit {
  std::vector<DictEntry> train;
  std::vector<DictEntry> valid;
  std::vector<DictEntry> test;
};

// Word-level split: all entries of a word land in the same part. Fractions
// must be positive and sum to one.
CorpusSplit SplitCorpus(std::span<const DictEntry> entries,
                        std::array<double, 3> fractions, std::uint64_t seed);

struct CorpusStats {
  std::size_t num_words = 0;
  std::size_t num_entries = 0;
  std::size_t num_tokens = 0;
  double avg_length = 0.0;
};

CorpusStats ComputeCorpusStats(std::span<const DictEntry> part);

// Renders columns (e.g. train/valid/test) with the rows #words, #entries,
// #tokens and average length.
std::string FormatStatsTable(
    const std::vector<std::pair<std::string, CorpusStats>>& columns);

struct Neighbor {
  std::string word;
  double similarity = 0.0;
};

// Top-k vocabulary words by cosine similarity to `query`, descending, ties
// broken lexicographically. Throws Error on a zero query or width mismatch.
std::vector<Neighbor> NearestWords(const EmbeddingTable& table,
                                   std::span<const double> query, std::size_t k);

double Cosine(std::span<const double> a, std::span<const double> b);

}  // namespace polydef

#endif  // POLYDEF_CORPUS_H_
