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

#ifndef POLYDEF_VOCAB_H_
#define POLYDEF_VOCAB_H_

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "polydef/corpus.h"

namespace polydef {

// Token vocabulary with four reserved ids.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kBos = 2;
  static constexpr std::size_t kEos = 3;

  Vocabulary();
  // Definition tokens seen at least `min_count` times, in (count desc,
  // token asc) order after the specials.
  static Vocabulary Build(std::span<const DictEntry> entries, std::size_t min_count);
  static Vocabulary Parse(std::string_view serialized);  // newline separated
  std::string Serialize() const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t Id(std::string_view token) const;  // kUnk when absent
  const std::string& Token(std::size_t id) const { return tokens_.at(id); }
  std::vector<std::size_t> Encode(std::span<const std::string> tokens) const;

 private:
  void Add(std::string token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace polydef

#endif  // POLYDEF_VOCAB_H_
