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

#ifndef POLYDEF_COMMON_H_
#define POLYDEF_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polydef {

// Base class for every error the library reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file could not be parsed. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class Pos { kNoun, kVerb, kAdjective, kAdverb, kOther };

inline constexpr int kNumPos = 5;

// n/noun -> noun, v/verb -> verb, a/s/adj/adjective -> adjective,
// r/adv/adverb -> adverb, anything else -> other.
Pos ParsePos(std::string_view tag);
std::string_view PosName(Pos pos);

// Shortest decimal text that reads back to the same value.
std::string FormatReal(double v);
std::string FormatReal(float v);
double ParseReal(std::string_view text);  // throws Error

// Splits on ASCII whitespace, dropping empty fields.
std::vector<std::string_view> SplitWhitespace(std::string_view line);

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t Fingerprint(std::string_view text);

// Portable seeded randomness. The standard distributions are
// implementation-defined, so everything that must be reproducible goes
// through these helpers on top of mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Derives an independent stream, e.g. per worker or per example.
  static Rng Derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in the open interval (0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal();
  // Uniform integer in [0, n).
  std::size_t Index(std::size_t n);

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[Index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace polydef

#endif  // POLYDEF_COMMON_H_
