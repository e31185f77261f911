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

#include "polydef/vocab.h"

#include <algorithm>
#include <map>

namespace polydef {

Vocabulary::Vocabulary() {
  for (const char* s : {"<pad>", "<unk>", "<s>", "</s>"}) Add(s);
}

void Vocabulary::Add(std::string token) {
  if (index_.count(token) > 0) throw Error("duplicate vocabulary token '" + token + "'");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::Build(std::span<const DictEntry> entries, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : entries) {
    for (const auto& t : e.definition) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [t, c] : counts) {
    if (c >= std::max<std::size_t>(min_count, 1)) kept.emplace_back(t, c);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [t, c] : kept) {
    if (v.index_.count(t) == 0) v.Add(t);
  }
  return v;
}

Vocabulary Vocabulary::Parse(std::string_view serialized) {
  Vocabulary v;
  std::size_t start = 0;
  std::size_t n = 0;
  while (start <= serialized.size()) {
    auto end = serialized.find('\n', start);
    if (end == std::string_view::npos) end = serialized.size();
    std::string tok(serialized.substr(start, end - start));
    if (n < 4) {
      if (tok != v.tokens_[n]) throw Error("vocabulary does not start with the reserved tokens");
    } else if (!tok.empty()) {
      v.Add(std::move(tok));
    }
    ++n;
    start = end + 1;
  }
  return v;
}

std::string Vocabulary::Serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += tokens_[i];
  }
  return out;
}

std::size_t Vocabulary::Id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::Encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(Id(t));
  return ids;
}

}  // namespace polydef
