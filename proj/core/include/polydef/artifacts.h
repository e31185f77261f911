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

#ifndef POLYDEF_ARTIFACTS_H_
#define POLYDEF_ARTIFACTS_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polydef/define.h"
#include "polydef/eval.h"

namespace polydef {

// Line-delimited JSON artifacts. Each file opens with a header record
// {"format": <name>, "version": 1}.
inline constexpr int kArtifactVersion = 1;

struct GenerationRecord {
  DefinitionOutput output;
  std::optional<std::size_t> group;
  std::optional<bool> representative;
};

void SaveGenerations(const std::string& path, std::span<const GenerationRecord> records);
std::vector<GenerationRecord> LoadGenerations(const std::string& path);

void SaveMatches(const std::string& path, std::span<const MatchRecord> records);
std::vector<MatchRecord> LoadMatches(const std::string& path);

// Records {word, output_id, category, sense_group?, model?}; the header is
// optional because these files are written by annotators. Records without
// a model field belong to "default".
std::map<std::string, std::vector<LabelRecord>> LoadLabels(const std::string& path);

std::string TrainLogJsonl(std::span<const EpochLog> log);

// One word per line, optionally followed by a POS tag.
struct WordRequest {
  std::string word;
  std::optional<Pos> pos;
};
std::vector<WordRequest> LoadWordList(const std::string& path);

}  // namespace polydef

#endif  // POLYDEF_ARTIFACTS_H_
