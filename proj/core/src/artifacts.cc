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

#include "polydef/artifacts.h"

#include <fstream>

#include <nlohmann/json.hpp>

namespace polydef {

namespace {

using Json = nlohmann::ordered_json;

std::ofstream OpenOut(const std::string& path, std::string_view format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  Json h;
  h["format"] = format;
  h["version"] = kArtifactVersion;
  out << h.dump() << '\n';
  return out;
}

// Calls fn(record, line) for each record. When `format` is set the first
// record must be the matching header; otherwise a header is skipped if
// present.
template <typename Fn>
void ReadJsonl(const std::string& path, std::string_view format, bool header_required, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::string line;
  std::size_t n = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, n, std::string("invalid JSON: ") + e.what());
    }
    if (first) {
      first = false;
      if (j.is_object() && j.contains("format")) {
        if (j["format"] != format) {
          throw ParseError(path, n, "expected format '" + std::string(format) + "'");
        }
        if (j.value("version", 0) != kArtifactVersion) {
          throw ParseError(path, n, "unsupported format version");
        }
        continue;
      }
      if (header_required) throw ParseError(path, n, "missing format header");
    }
    try {
      fn(j, n);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, n, std::string("bad record: ") + e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(path, n, e.what());
    }
  }
  if (first && header_required) throw ParseError(path, 0, "empty file");
}

}  // namespace

void SaveGenerations(const std::string& path, std::span<const GenerationRecord> records) {
  auto out = OpenOut(path, "polydef-generations");
  for (const auto& r : records) {
    Json j;
    j["word"] = r.output.word;
    j["atom_id"] = r.output.atom_id ? Json(*r.output.atom_id) : Json(nullptr);
    j["pos"] = PosName(r.output.pos);
    j["score"] = r.output.score;
    j["tokens"] = r.output.tokens;
    if (r.group) j["group"] = *r.group;
    if (r.representative) j["representative"] = *r.representative;
    out << j.dump() << '\n';
  }
}

std::vector<GenerationRecord> LoadGenerations(const std::string& path) {
  std::vector<GenerationRecord> out;
  ReadJsonl(path, "polydef-generations", true, [&](const Json& j, std::size_t) {
    GenerationRecord r;
    r.output.word = j.at("word").get<std::string>();
    if (!j.at("atom_id").is_null()) r.output.atom_id = j["atom_id"].get<std::size_t>();
    r.output.pos = ParsePos(j.at("pos").get<std::string>());
    r.output.score = j.at("score").get<double>();
    r.output.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (r.output.tokens.empty()) throw Error("generation has no tokens");
    if (j.contains("group")) r.group = j["group"].get<std::size_t>();
    if (j.contains("representative")) r.representative = j["representative"].get<bool>();
    out.push_back(std::move(r));
  });
  return out;
}

void SaveMatches(const std::string& path, std::span<const MatchRecord> records) {
  auto out = OpenOut(path, "polydef-matches");
  for (const auto& r : records) {
    Json j;
    j["word"] = r.word;
    j["definition"] = r.definition;
    j["atom_id"] = r.atom_id;
    j["scores"] = r.scores;
    out << j.dump() << '\n';
  }
}

std::vector<MatchRecord> LoadMatches(const std::string& path) {
  std::vector<MatchRecord> out;
  ReadJsonl(path, "polydef-matches", true, [&](const Json& j, std::size_t) {
    MatchRecord r;
    r.word = j.at("word").get<std::string>();
    r.definition = j.at("definition").get<std::vector<std::string>>();
    r.atom_id = j.at("atom_id").get<std::size_t>();
    if (j.contains("scores")) r.scores = j["scores"].get<std::vector<double>>();
    out.push_back(std::move(r));
  });
  return out;
}

std::map<std::string, std::vector<LabelRecord>> LoadLabels(const std::string& path) {
  std::map<std::string, std::vector<LabelRecord>> out;
  ReadJsonl(path, "polydef-labels", false, [&](const Json& j, std::size_t) {
    LabelRecord r;
    r.word = j.at("word").get<std::string>();
    r.output_id = j.at("output_id").get<std::size_t>();
    r.category = ParseCategory(j.at("category").get<std::string>());
    if (j.contains("sense_group") && !j["sense_group"].is_null()) {
      r.sense_group = j["sense_group"].get<int>();
    }
    const std::string model = j.contains("model") ? j["model"].get<std::string>() : "default";
    out[model].push_back(std::move(r));
  });
  if (out.empty()) throw ParseError(path, 0, "no label records");
  return out;
}

std::string TrainLogJsonl(std::span<const EpochLog> log) {
  std::string out;
  Json h;
  h["format"] = "polydef-train-log";
  h["version"] = kArtifactVersion;
  out += h.dump() + "\n";
  for (const auto& e : log) {
    Json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["train_ce"] = e.train_ce;
    j["valid_loss"] = e.valid_loss ? Json(*e.valid_loss) : Json(nullptr);
    j["lr"] = e.lr;
    j["tau"] = e.tau;
    j["mean_max_weight"] = e.mean_max_weight ? Json(*e.mean_max_weight) : Json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<WordRequest> LoadWordList(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open word list");
  std::vector<WordRequest> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto f = SplitWhitespace(line);
    if (f.empty() || f[0].front() == '#') continue;
    if (f.size() > 2) throw ParseError(path, n, "expected 'word [pos]'");
    WordRequest r;
    r.word = std::string(f[0]);
    if (f.size() == 2) r.pos = ParsePos(f[1]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace polydef
