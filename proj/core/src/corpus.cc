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

#include "polydef/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace polydef {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error("embedding dimension must be positive");
}

void EmbeddingTable::Add(std::string word, std::span<const double> vec) {
  if (vec.size() != dim_) {
    throw Error("vector for '" + word + "' has " + std::to_string(vec.size()) +
                " values, expected " + std::to_string(dim_));
  }
  if (index_.count(word) > 0) throw Error("duplicate word '" + word + "'");
  double sq = 0.0;
  for (double x : vec) sq += x * x;
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  values_.insert(values_.end(), vec.begin(), vec.end());
  norms_.push_back(std::sqrt(sq));
}

std::optional<std::size_t> EmbeddingTable::Find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingTable::at(std::string_view word) const {
  auto i = Find(word);
  if (!i) throw Error("word not in embedding table: '" + std::string(word) + "'");
  return vector(*i);
}

EmbeddingTable LoadEmbeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open embedding file");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
  auto header = SplitWhitespace(line);
  std::size_t vocab = 0;
  std::size_t dim = 0;
  try {
    if (header.size() != 2) throw Error("");
    double v = ParseReal(header[0]);
    double d = ParseReal(header[1]);
    if (v < 0 || d < 1 || v != std::floor(v) || d != std::floor(d)) throw Error("");
    vocab = static_cast<std::size_t>(v);
    dim = static_cast<std::size_t>(d);
  } catch (const Error&) {
    throw ParseError(path, 1, "malformed header, expected '<vocab_size> <dim>'");
  }
  EmbeddingTable table(dim);
  std::vector<double> vec(dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = SplitWhitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != dim + 1) {
      throw ParseError(path, lineno,
                       "expected " + std::to_string(dim) + " values, found " +
                           std::to_string(fields.size() - 1));
    }
    try {
      for (std::size_t i = 0; i < dim; ++i) vec[i] = ParseReal(fields[i + 1]);
      table.Add(std::string(fields[0]), vec);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(path, lineno, e.what());
    }
  }
  if (table.size() != vocab) {
    throw ParseError(path, lineno,
                     "header declares " + std::to_string(vocab) + " words, found " +
                         std::to_string(table.size()));
  }
  return table;
}

void SaveEmbeddings(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.word(i);
    for (double x : table.vector(i)) out << ' ' << FormatReal(x);
    out << '\n';
  }
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      const bool inner = (c == '\'' || c == '-') && !cur.empty() && i + 1 < text.size() &&
                         std::isalnum(static_cast<unsigned char>(text[i + 1]));
      if (inner) {
        cur.push_back(static_cast<char>(c));
      } else {
        flush();
        tokens.emplace_back(1, static_cast<char>(c));
      }
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

DictEntry ParseDictRecord(std::string_view json_line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("record is not a JSON object");
  auto field = [&](const char* name) -> std::string {
    if (!j.contains(name)) throw Error(std::string("missing field '") + name + "'");
    if (!j[name].is_string()) throw Error(std::string("field '") + name + "' is not a string");
    return j[name].get<std::string>();
  };
  DictEntry e;
  e.word = field("word");
  if (e.word.empty()) throw Error("empty word");
  e.pos = ParsePos(field("pos"));
  e.definition = Tokenize(field("definition"));
  if (e.definition.empty()) throw Error("empty definition");
  e.source = j.contains("source") ? field("source") : std::string("unknown");
  if (j.contains("sense_group") && !j["sense_group"].is_null()) {
    if (!j["sense_group"].is_number_integer()) throw Error("sense_group is not an integer");
    e.sense_group = j["sense_group"].get<int>();
  }
  return e;
}

std::vector<DictEntry> LoadDictionary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open dictionary file");
  std::vector<DictEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (SplitWhitespace(line).empty()) continue;
    if (entries.empty() && line.find("\"format\"") != std::string::npos) {
      // optional header record written by SaveDictionary
      auto h = nlohmann::json::parse(line, nullptr, false);
      if (h.is_object() && h.contains("format")) {
        if (h["format"] != "polydef-dictionary" || h.value("version", 0) != 1) {
          throw ParseError(path, lineno, "unsupported dictionary header");
        }
        continue;
      }
    }
    try {
      entries.push_back(ParseDictRecord(line));
    } catch (const Error& e) {
      throw ParseError(path, lineno, e.what());
    }
  }
  return entries;
}

void SaveDictionary(std::span<const DictEntry> entries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << R"({"format":"polydef-dictionary","version":1})" << '\n';
  for (const auto& e : entries) {
    std::string def;
    for (const auto& t : e.definition) {
      if (!def.empty()) def.push_back(' ');
      def += t;
    }
    nlohmann::ordered_json j;
    j["word"] = e.word;
    j["pos"] = std::string(PosName(e.pos));
    j["definition"] = def;
    j["source"] = e.source;
    if (e.sense_group) j["sense_group"] = *e.sense_group;
    out << j.dump() << '\n';
  }
}

CorpusSplit SplitCorpus(std::span<const DictEntry> entries,
                        std::array<double, 3> fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw Error("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("split fractions must sum to 1");

  std::set<std::string> distinct;
  for (const auto& e : entries) distinct.insert(e.word);
  std::vector<std::string> words(distinct.begin(), distinct.end());
  const std::size_t n = words.size();
  if (n < fractions.size()) {
    throw Error("cannot split " + std::to_string(n) + " distinct words three ways");
  }

  // Largest-remainder allocation, then every part gets at least one word.
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (rem[i] > rem[best]) best = i;
    }
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (counts[i] == 0) {
      auto largest = std::max_element(counts.begin(), counts.end()) - counts.begin();
      --counts[largest];
      ++counts[i];
    }
  }

  Rng rng(seed);
  rng.Shuffle(words);
  std::unordered_map<std::string, int> part;
  std::size_t k = 0;
  for (int p = 0; p < 3; ++p) {
    for (std::size_t c = 0; c < counts[p]; ++c) part[words[k++]] = p;
  }
  CorpusSplit split;
  for (const auto& e : entries) {
    switch (part.at(e.word)) {
      case 0: split.train.push_back(e); break;
      case 1: split.valid.push_back(e); break;
      default: split.test.push_back(e); break;
    }
  }
  return split;
}

CorpusStats ComputeCorpusStats(std::span<const DictEntry> part) {
  CorpusStats s;
  std::set<std::string_view> words;
  for (const auto& e : part) {
    words.insert(e.word);
    s.num_tokens += e.definition.size();
  }
  s.num_words = words.size();
  s.num_entries = part.size();
  s.avg_length = s.num_entries == 0
                     ? 0.0
                     : static_cast<double>(s.num_tokens) / static_cast<double>(s.num_entries);
  return s;
}

std::string FormatStatsTable(
    const std::vector<std::pair<std::string, CorpusStats>>& columns) {
  std::vector<std::vector<std::string>> rows(5);
  rows[0].push_back("splits");
  rows[1].push_back("#words");
  rows[2].push_back("#entries");
  rows[3].push_back("#tokens");
  rows[4].push_back("average length");
  for (const auto& [name, s] : columns) {
    std::ostringstream avg;
    avg.setf(std::ios::fixed);
    avg.precision(1);
    avg << s.avg_length;
    rows[0].push_back(name);
    rows[1].push_back(std::to_string(s.num_words));
    rows[2].push_back(std::to_string(s.num_entries));
    rows[3].push_back(std::to_string(s.num_tokens));
    rows[4].push_back(avg.str());
  }
  std::vector<std::size_t> width(columns.size() + 1, 0);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c > 0) out << " | ";
      out << r[c] << std::string(width[c] - r[c].size(), ' ');
    }
    out << '\n';
  }
  return out.str();
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Neighbor> NearestWords(const EmbeddingTable& table,
                                   std::span<const double> query, std::size_t k) {
  if (query.size() != table.dim()) throw Error("query width does not match table");
  if (k == 0) throw Error("k must be at least 1");
  double qn = 0.0;
  for (double x : query) qn += x * x;
  qn = std::sqrt(qn);
  if (qn == 0.0) throw Error("zero-norm query");

  std::vector<std::pair<double, std::size_t>> scored(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto v = table.vector(i);
    double dot = 0.0;
    for (std::size_t d = 0; d < v.size(); ++d) dot += v[d] * query[d];
    const double n = table.norm(i);
    scored[i] = {n == 0.0 ? 0.0 : dot / (n * qn), i};
  }
  const std::size_t top = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(top), scored.end(),
                    [&](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return table.word(a.second) < table.word(b.second);
                    });
  std::vector<Neighbor> out;
  out.reserve(top);
  for (std::size_t i = 0; i < top; ++i) {
    out.push_back({table.word(scored[i].second), scored[i].first});
  }
  return out;
}

}  // namespace polydef
