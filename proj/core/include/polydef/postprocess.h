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

#ifndef POLYDEF_POSTPROCESS_H_
#define POLYDEF_POSTPROCESS_H_

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "polydef/corpus.h"
#include "polydef/define.h"
#include "polydef/eval.h"

namespace polydef {

using PosLexicon = std::map<std::string, Pos>;

// Most frequent POS per word; ties go to the earlier Pos enumerator.
PosLexicon BuildPosLexicon(std::span<const DictEntry> entries);

struct PosVote {
  Pos pos = Pos::kNoun;
  std::array<std::size_t, kNumPos> counts{};
  std::size_t voters = 0;
  bool fallback = false;  // no neighbor was in the lexicon
};

// Majority POS among the k nearest words (cosine) that the lexicon knows.
// A tie goes to the class of the nearest tied neighbor; no voters gives noun
// with `fallback` set.
PosVote InferPos(std::span<const double> atom, const EmbeddingTable& table,
                 const PosLexicon& lexicon, std::size_t k = 20);

// Mean of the sentence BLEU in both directions. Throws Error on an empty
// sequence.
double SymmetricBleu(std::span<const std::string> a, std::span<const std::string> b,
                     const BleuConfig& cfg = {});

struct MergedOutputs {
  std::vector<std::vector<std::size_t>> groups;  // indices into the input
  std::vector<std::size_t> representatives;      // one per group
  std::vector<std::size_t> group_of;             // per input
};

// Single-linkage grouping: outputs whose symmetric BLEU exceeds `threshold`
// are joined. Groups are ordered by their first member. The representative
// has the highest score, then the lowest atom id, then the lowest index.
// End markers are ignored when comparing.
MergedOutputs MergeOutputs(std::span<const DefinitionOutput> outputs, double threshold = 0.6,
                           const BleuConfig& cfg = {});

}  // namespace polydef

#endif  // POLYDEF_POSTPROCESS_H_
