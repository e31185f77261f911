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

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "polydef/postprocess.h"
#include "test_util.h"

namespace polydef {
namespace {

using testing::Words;

DefinitionOutput Output(const std::string& text, double score, std::size_t atom) {
  DefinitionOutput o;
  o.word = "w";
  o.atom_id = atom;
  o.tokens = Words(text);
  o.tokens.push_back("</s>");
  o.score = score;
  return o;
}

TEST_CASE("pos lexicon keeps the most frequent tag") {
  std::vector<DictEntry> e{testing::Entry("run", "move fast", std::nullopt, Pos::kVerb),
                           testing::Entry("run", "a race", std::nullopt, Pos::kNoun),
                           testing::Entry("run", "to operate", std::nullopt, Pos::kVerb),
                           testing::Entry("tie", "a draw", std::nullopt, Pos::kVerb),
                           testing::Entry("tie", "a knot", std::nullopt, Pos::kNoun)};
  auto lex = BuildPosLexicon(e);
  CHECK(lex.at("run") == Pos::kVerb);
  CHECK(lex.at("tie") == Pos::kNoun);  // earlier enumerator wins a tie
}

// Words along a ray from the atom: the k-th word sits at angle k * 0.01.
struct PosWorld {
  EmbeddingTable table{2};
  PosLexicon lexicon;
  std::vector<double> atom{1.0, 0.0};
};

PosWorld MakePosWorld(const std::vector<Pos>& by_rank) {
  PosWorld w;
  for (std::size_t k = 0; k < by_rank.size(); ++k) {
    const double angle = 0.01 * static_cast<double>(k + 1);
    const std::string name = "n" + std::to_string(k);
    w.table.Add(name, std::vector<double>{std::cos(angle), std::sin(angle)});
    w.lexicon[name] = by_rank[k];
  }
  return w;
}

TEST_CASE("pos majority vote") {
  std::vector<Pos> ranks(20, Pos::kNoun);
  for (std::size_t k : {0u, 3u, 7u, 11u, 19u}) ranks[k] = Pos::kVerb;
  auto w = MakePosWorld(ranks);
  auto vote = InferPos(w.atom, w.table, w.lexicon);
  CHECK(vote.pos == Pos::kNoun);
  CHECK(vote.counts[static_cast<std::size_t>(Pos::kNoun)] == 15);
  CHECK(vote.counts[static_cast<std::size_t>(Pos::kVerb)] == 5);
  CHECK(vote.voters == 20);
  CHECK(!vote.fallback);
}

TEST_CASE("pos tie goes to the nearest neighbor's class") {
  std::vector<Pos> ranks;
  for (int i = 0; i < 10; ++i) {
    ranks.push_back(Pos::kVerb);
    ranks.push_back(Pos::kNoun);
  }
  auto w = MakePosWorld(ranks);
  CHECK(InferPos(w.atom, w.table, w.lexicon).pos == Pos::kVerb);
  std::swap(ranks[0], ranks[1]);
  auto v = MakePosWorld(ranks);
  CHECK(InferPos(v.atom, v.table, v.lexicon).pos == Pos::kNoun);
}

TEST_CASE("pos vote without lexicon coverage falls back to noun") {
  auto w = MakePosWorld({Pos::kVerb, Pos::kVerb});
  w.lexicon.clear();
  auto vote = InferPos(w.atom, w.table, w.lexicon);
  CHECK(vote.fallback);
  CHECK(vote.pos == Pos::kNoun);
  CHECK(vote.voters == 0);
  CHECK_THROWS_AS(InferPos(w.atom, w.table, w.lexicon, 0), Error);
}

TEST_CASE("pos vote matches an exhaustive recount") {
  Rng rng(31);
  const Pos classes[] = {Pos::kNoun, Pos::kVerb, Pos::kAdjective, Pos::kAdverb};
  for (int trial = 0; trial < 20; ++trial) {
    EmbeddingTable table(5);
    PosLexicon lex;
    for (int i = 0; i < 60; ++i) {
      std::vector<double> v(5);
      for (auto& x : v) x = rng.Normal();
      const std::string name = "t" + std::to_string(i);
      table.Add(name, v);
      if (rng.Uniform() < 0.8) lex[name] = classes[rng.Index(4)];
    }
    std::vector<double> atom(5);
    for (auto& x : atom) x = rng.Normal();

    // every word ranked by cosine, no shortcuts
    std::vector<std::pair<double, std::string>> all;
    for (std::size_t i = 0; i < table.size(); ++i) {
      all.push_back({-Cosine(atom, table.vector(i)), table.word(i)});
    }
    std::sort(all.begin(), all.end());
    std::array<std::size_t, kNumPos> counts{};
    std::vector<Pos> seen;
    for (std::size_t i = 0; i < 20; ++i) {
      auto it = lex.find(all[i].second);
      if (it == lex.end()) continue;
      ++counts[static_cast<std::size_t>(it->second)];
      seen.push_back(it->second);
    }
    const auto top = *std::max_element(counts.begin(), counts.end());
    Pos want = Pos::kNoun;
    for (Pos p : seen) {
      if (counts[static_cast<std::size_t>(p)] == top) {
        want = p;
        break;
      }
    }
    auto vote = InferPos(atom, table, lex);
    CHECK(vote.counts == counts);
    CHECK(vote.pos == want);
    CHECK(vote.voters == seen.size());
  }
}

TEST_CASE("symmetric bleu") {
  const auto a = Words("a storage compartment for clothes");
  CHECK(SymmetricBleu(a, a) == doctest::Approx(1.0));
  Rng rng(6);
  const char* vocab[] = {"a", "b", "c", "d", "e"};
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> x, y;
    for (std::size_t n = 1 + rng.Index(8); n > 0; --n) x.push_back(vocab[rng.Index(5)]);
    for (std::size_t n = 1 + rng.Index(8); n > 0; --n) y.push_back(vocab[rng.Index(5)]);
    CHECK(SymmetricBleu(x, y) == SymmetricBleu(y, x));
  }
  const auto disjoint = Words("river bank erosion");
  CHECK(SymmetricBleu(a, disjoint) < 0.05);
  CHECK(SymmetricBleu(a, disjoint) <= SmoothingFloor(a.size()));
  CHECK_THROWS_AS(SymmetricBleu(a, {}), Error);
}

TEST_CASE("identical outputs merge into one group") {
  std::vector<DefinitionOutput> outs{Output("a piece of furniture", -1.2, 5),
                                     Output("a piece of furniture", -0.7, 9),
                                     Output("a piece of furniture", -0.7, 2)};
  auto m = MergeOutputs(outs);
  REQUIRE(m.groups.size() == 1);
  CHECK(m.groups[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(m.representatives == std::vector<std::size_t>{2});  // best score, then lowest atom id
  CHECK(m.group_of == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("disjoint outputs stay apart") {
  std::vector<DefinitionOutput> outs{Output("a piece of furniture", -1.0, 1),
                                     Output("government ministers collectively", -2.0, 2)};
  auto m = MergeOutputs(outs);
  CHECK(m.groups.size() == 2);
  CHECK(m.representatives == std::vector<std::size_t>{0, 1});
  CHECK(MergeOutputs({}).groups.empty());
}

TEST_CASE("single linkage joins a chain") {
  const std::string ta = "one two three four five six seven eight nine ten eleven";
  const std::string tb = "one two three four five six seven eight nine ten twelve";
  const std::string tc = "one two three four five zero seven eight nine ten twelve";
  const auto a = Words(ta), b = Words(tb), c = Words(tc);
  REQUIRE(SymmetricBleu(a, b) > 0.6);
  REQUIRE(SymmetricBleu(b, c) > 0.6);
  REQUIRE(SymmetricBleu(a, c) < 0.6);
  std::vector<DefinitionOutput> outs{Output(ta, -1.0, 1), Output(tc, -0.5, 2),
                                     Output(tb, -2.0, 3)};
  auto m = MergeOutputs(outs, 0.6);
  REQUIRE(m.groups.size() == 1);
  CHECK(m.representatives == std::vector<std::size_t>{1});
  // only the direct pair survives without the middle link
  auto pair = MergeOutputs(std::vector<DefinitionOutput>{outs[0], outs[1]}, 0.6);
  CHECK(pair.groups.size() == 2);
}

TEST_CASE("threshold extremes and representative recount") {
  std::vector<DefinitionOutput> outs{Output("a b c d", -1.0, 1), Output("a b c e", -3.0, 2),
                                     Output("a x c d", -0.5, 3), Output("q r s t", -0.2, 4),
                                     Output("a b c d", -0.9, 5)};
  // merging needs d strictly above the threshold, so even duplicates split here
  CHECK(MergeOutputs(outs, 1.0 + 1e-9).groups.size() == 5);
  CHECK(MergeOutputs(outs, 1.0 - 1e-9).groups.size() == 4);
  // "q r s t" shares nothing with the rest, everything else overlaps
  CHECK(MergeOutputs(outs, 0.0).groups.size() == 2);
  CHECK(MergeOutputs(std::span(outs).first(3), 0.0).groups.size() == 1);
  for (double th : {0.2, 0.4, 0.6, 0.8}) {
    auto m = MergeOutputs(outs, th);
    CHECK(m.groups.size() <= outs.size());
    std::vector<int> covered(outs.size(), 0);
    for (std::size_t g = 0; g < m.groups.size(); ++g) {
      const auto rep = m.representatives[g];
      CHECK(m.group_of[rep] == g);
      for (auto i : m.groups[g]) {
        ++covered[i];
        CHECK(m.group_of[i] == g);
        CHECK(outs[i].score <= outs[rep].score);
      }
    }
    for (int c : covered) CHECK(c == 1);
  }
}

}  // namespace
}  // namespace polydef
