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
#include <cmath>
#include <numeric>
#include <vector>

#include "polydef/match.h"
#include "polydef/neural/grad_check.h"
#include "test_util.h"

namespace polydef {
namespace {

using testing::Entry;
using testing::TempDir;

std::vector<double> RandomUnit(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) {
    x = rng.Normal();
    s += x * x;
  }
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

TEST_CASE("match modes parse and print") {
  for (MatchMode m : {MatchMode::kHeuristic, MatchMode::kGs, MatchMode::kStgs}) {
    CHECK(ParseMatchMode(MatchModeName(m)) == m);
  }
  CHECK(ParseMatchMode("heu") == MatchMode::kHeuristic);
  CHECK_THROWS_AS(ParseMatchMode("soft"), Error);
}

TEST_CASE("cabinet similarity table selects A_344") {
  // storage, compartment, cloth, valuable
  const std::vector<std::size_t> ids{344, 1284, 1520, 3092};
  const std::vector<std::vector<double>> sims{{0.376, 0.530, 0.206, 0.090},
                                              {0.087, 0.176, 0.305, 0.093},
                                              {0.028, 0.120, 0.084, -0.040},
                                              {0.042, 0.050, 0.028, -0.015}};
  auto r = MatchFromSimilarities(ids, sims);
  REQUIRE(r.scores.size() == 4);
  CHECK(std::abs(r.scores[0] - 0.906) <= 1e-3);
  CHECK(std::abs(r.scores[1] - 0.481) <= 1e-3);
  CHECK(std::abs(r.scores[2] - 0.204) <= 1e-3);
  CHECK(std::abs(r.scores[3] - 0.092) <= 1e-3);
  CHECK(r.chosen_atom == 344);
  CHECK(r.weights == std::vector<double>{1, 0, 0, 0});
  CHECK(r.mode == MatchMode::kHeuristic);
}

TEST_CASE("heuristic score sums the top two") {
  CHECK(HeuristicScore(std::vector<double>{0.1, 0.7, -0.2, 0.4}) == doctest::Approx(1.1));
  CHECK(HeuristicScore(std::vector<double>{0.3}) == 0.3);
  CHECK(HeuristicScore(std::vector<double>{}) == 0.0);
}

TEST_CASE("ties go to the lowest atom id") {
  const std::vector<std::size_t> ids{9, 4, 6};
  auto r = MatchFromSimilarities(ids, {{0.5}, {0.5}, {0.2}});
  CHECK(r.chosen_atom == 4);
  CHECK(r.weights == std::vector<double>{0, 1, 0});
  CHECK_THROWS_AS(MatchFromSimilarities({}, {}), Error);
}

TEST_CASE("one content word left degenerates to its similarity") {
  const double y = (0.1 - 0.9 * 0.1) / std::sqrt(0.99);
  EmbeddingTable table(3);
  table.Add("storage", std::vector<double>{0.9, y, std::sqrt(1.0 - 0.81 - y * y)});
  table.Add("the", std::vector<double>{0, 0, 1});
  const std::vector<AtomVector> atoms{{1, {1, 0, 0}}, {2, {0.1, std::sqrt(0.99), 0}}};
  auto r = MatchHeuristic(Entry("cabinet", "the storage the"), atoms, table, StopwordList::Default());
  CHECK(r.chosen_atom == 1);
  CHECK(r.scores[0] == doctest::Approx(0.9));
  CHECK(r.scores[1] == doctest::Approx(0.1));
}

TEST_CASE("all-stopword definitions fall back to the raw tokens") {
  EmbeddingTable table(2);
  table.Add("of", std::vector<double>{1, 0.2});
  table.Add("the", std::vector<double>{0.1, 1});
  const std::vector<AtomVector> atoms{{3, {1, 0}}, {8, {0, 1}}};
  const auto entry = Entry("x", "of the");
  auto a = MatchHeuristic(entry, atoms, table, StopwordList::Default());
  auto b = MatchHeuristic(entry, atoms, table, StopwordList::Default());
  CHECK(a.scores == b.scores);
  CHECK(a.chosen_atom == b.chosen_atom);
  const double s3 = Cosine(atoms[0].vec, table.at("of")) + Cosine(atoms[0].vec, table.at("the"));
  const double s8 = Cosine(atoms[1].vec, table.at("of")) + Cosine(atoms[1].vec, table.at("the"));
  CHECK(a.scores[0] == doctest::Approx(s3));
  CHECK(a.scores[1] == doctest::Approx(s8));
  CHECK(a.chosen_atom == (s3 >= s8 ? 3u : 8u));
}

TEST_CASE("heuristic matching errors") {
  EmbeddingTable table(2);
  table.Add("known", std::vector<double>{1, 0});
  const std::vector<AtomVector> atoms{{0, {1, 0}}};
  CHECK_THROWS_AS(MatchHeuristic(Entry("w", "known"), {}, table, StopwordList::Default()), Error);
  CHECK_THROWS_AS(MatchHeuristic(Entry("w", "unseen words"), atoms, table, StopwordList::Default()),
                  Error);
  auto r = MatchHeuristic(Entry("w", "unseen known"), atoms, table, StopwordList::Default());
  CHECK(r.scores[0] == doctest::Approx(1.0));
}

struct RandomInstance {
  EmbeddingTable table{12};
  std::vector<AtomVector> atoms;
  std::vector<std::string> content;
};

RandomInstance MakeInstance(std::uint64_t seed) {
  Rng rng(seed);
  RandomInstance x;
  for (int i = 0; i < 10; ++i) {
    x.content.push_back("c" + std::to_string(i));
    x.table.Add(x.content.back(), RandomUnit(12, rng));
  }
  for (const char* s : {"the", "of", "and", "a"}) x.table.Add(s, RandomUnit(12, rng));
  for (std::size_t k = 0; k < 5; ++k) x.atoms.push_back({k * 7 + 1, RandomUnit(12, rng)});
  return x;
}

TEST_CASE("heuristic scores agree with a brute-force oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto x = MakeInstance(seed);
    Rng rng(seed + 100);
    std::vector<std::string> def{"the"};
    const std::size_t n = 1 + rng.Index(5);
    for (std::size_t i = 0; i < n; ++i) def.push_back(x.content[rng.Index(10)]);
    def.push_back("of");
    DictEntry e{"w", Pos::kNoun, def, "synthetic", std::nullopt};
    auto r = MatchHeuristic(e, x.atoms, x.table, StopwordList::Default());

    // distinct pruned tokens, cosines in long double
    std::set<std::string> pruned;
    for (const auto& t : def) {
      if (t != "the" && t != "of") pruned.insert(t);
    }
    std::size_t best = 0;
    for (std::size_t k = 0; k < x.atoms.size(); ++k) {
      std::vector<long double> sims;
      for (const auto& t : pruned) {
        auto v = x.table.at(t);
        long double dot = 0, na = 0, nb = 0;
        for (std::size_t d = 0; d < 12; ++d) {
          dot += static_cast<long double>(x.atoms[k].vec[d]) * v[d];
          na += static_cast<long double>(x.atoms[k].vec[d]) * x.atoms[k].vec[d];
          nb += static_cast<long double>(v[d]) * v[d];
        }
        sims.push_back(dot / std::sqrt(na * nb));
      }
      std::sort(sims.rbegin(), sims.rend());
      const long double want = sims.size() == 1 ? sims[0] : sims[0] + sims[1];
      CHECK(std::abs(r.scores[k] - static_cast<double>(want)) < 1e-12);
      if (r.scores[k] > r.scores[best]) best = k;
    }
    CHECK(r.chosen_atom == x.atoms[best].id);
  }
}

TEST_CASE("heuristic ignores token order and repeated stopwords") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto x = MakeInstance(seed);
    Rng rng(seed);
    std::vector<std::string> def{"a", x.content[0], "of", x.content[3], x.content[seed % 10]};
    DictEntry e{"w", Pos::kNoun, def, "synthetic", std::nullopt};
    auto base = MatchHeuristic(e, x.atoms, x.table, StopwordList::Default());
    rng.Shuffle(e.definition);
    e.definition.push_back("the");
    e.definition.push_back("the");
    e.definition.insert(e.definition.begin(), "and");
    auto moved = MatchHeuristic(e, x.atoms, x.table, StopwordList::Default());
    CHECK(moved.scores == base.scores);
    CHECK(moved.chosen_atom == base.chosen_atom);
  }
}

TEST_CASE("word atom vectors come back in id order") {
  AtomSet set(RowMatrix::Identity(6, 6), 3);
  set.AddWord("bank", {{4, 0.5}, {1, -2.0}, {3, 1.0}}, 0.0);
  auto v = WordAtomVectors(set, "bank");
  REQUIRE(v.size() == 3);
  CHECK(v[0].id == 1);
  CHECK(v[1].id == 3);
  CHECK(v[2].id == 4);
  CHECK(v[2].vec[4] == 1.0);
  CHECK_THROWS_AS(WordAtomVectors(set, "river"), Error);
}

TEST_CASE("logits are dot products with the atoms") {
  const std::vector<AtomVector> basis{{0, {1, 0, 0}}, {1, {0, 1, 0}}, {2, {0, 0, 1}}};
  auto l = MatchLogits(basis[1].vec, basis);
  CHECK(l == std::vector<double>{0, 1, 0});
  CHECK(MatchLogits(std::vector<double>(3, 0.0), basis) == std::vector<double>(3, 0.0));
  CHECK_THROWS_AS(MatchLogits(std::vector<double>(3, 0.0), {}), Error);
  CHECK_THROWS_AS(MatchLogits(std::vector<double>(2, 0.0), basis), Error);

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<AtomVector> atoms;
    for (std::size_t k = 0; k < 4; ++k) atoms.push_back({k, RandomUnit(9, rng)});
    auto def = RandomUnit(9, rng);
    for (auto& x : def) x *= 3.0;
    auto got = MatchLogits(def, atoms);
    for (std::size_t k = 0; k < 4; ++k) {
      long double s = 0;
      for (std::size_t d = 0; d < 9; ++d) s += static_cast<long double>(def[d]) * atoms[k].vec[d];
      CHECK(std::abs(got[k] - static_cast<double>(s)) < 1e-13);
    }
  }
}

TEST_CASE("sampled matches obey their mode contracts") {
  Rng rng(8);
  const std::vector<std::size_t> one{5};
  for (bool st : {false, true}) {
    auto r = MatchSampled(one, std::vector<double>{0.3}, {0.5, st}, rng);
    CHECK(r.weights == std::vector<double>{1.0});
    CHECK(r.chosen_atom == 5);
  }
  const std::vector<std::size_t> ids{2, 5, 9};
  const std::vector<double> logits{0.2, 1.0, -0.5};
  for (int i = 0; i < 200; ++i) {
    auto gs = MatchSampled(ids, logits, {0.7, false}, rng);
    CHECK(gs.mode == MatchMode::kGs);
    CHECK(std::accumulate(gs.weights.begin(), gs.weights.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
    auto st = MatchSampled(ids, logits, {0.7, true}, rng);
    CHECK(st.mode == MatchMode::kStgs);
    CHECK(std::count(st.weights.begin(), st.weights.end(), 1.0) == 1);
    CHECK(std::count(st.weights.begin(), st.weights.end(), 0.0) == 2);
    const auto hot = static_cast<std::size_t>(
        std::find(st.weights.begin(), st.weights.end(), 1.0) - st.weights.begin());
    CHECK(st.chosen_atom == ids[hot]);
  }
  Rng a(3), b(3);
  CHECK(MatchSampled(ids, logits, {1.0, false}, a).weights ==
        MatchSampled(ids, logits, {1.0, false}, b).weights);
  CHECK_THROWS_AS(MatchSampled(ids, std::vector<double>{1.0}, {1.0, false}, a), Error);
}

TEST_CASE("soft weighted atom embedding stays inside the atoms' hull") {
  Rng rng(21);
  std::vector<AtomVector> atoms;
  for (std::size_t k = 0; k < 4; ++k) atoms.push_back({k, RandomUnit(6, rng)});
  const std::vector<std::size_t> ids{0, 1, 2, 3};
  for (int i = 0; i < 500; ++i) {
    std::vector<double> logits{rng.Normal(), rng.Normal(), rng.Normal(), rng.Normal()};
    auto r = MatchSampled(ids, logits, {rng.Uniform(0.1, 2.0), false}, rng);
    auto e = WeightedAtomEmbedding(r.weights, atoms);
    for (std::size_t d = 0; d < 6; ++d) {
      double lo = atoms[0].vec[d], hi = atoms[0].vec[d];
      for (const auto& a : atoms) {
        lo = std::min(lo, a.vec[d]);
        hi = std::max(hi, a.vec[d]);
      }
      CHECK(e[d] >= lo - 1e-12);
      CHECK(e[d] <= hi + 1e-12);
    }
  }
  CHECK_THROWS_AS(WeightedAtomEmbedding(std::vector<double>{1.0}, atoms), Error);
}

TEST_CASE("definition encoder width and zero parameters") {
  neural::ParamStore<double> store(3);
  auto& emb = store.Create("tok", {6, 5});
  neural::DefinitionEncoder<double> enc(store, "enc", emb, 300, 2);
  CHECK(enc.units() == 300);
  const std::vector<std::size_t> ids{1, 4, 2};
  Rng rng(0);
  {
    neural::Graph<double> g;
    CHECK(g.size(enc.Encode(g, ids, 0.0, rng)) == 300);
  }
  for (auto& [name, p] : store.params()) std::fill(p.value.values.begin(), p.value.values.end(), 0.0);
  neural::Graph<double> g;
  for (double v : g.value(enc.Encode(g, ids, 0.0, rng))) CHECK(v == 0.0);
  CHECK_THROWS_AS(enc.Encode(g, {}, 0.0, rng), Error);
}

TEST_CASE("encoder, adapter and frozen-noise gumbel path pass grad check") {
  neural::ParamStore<double> store(7, 0.3);
  auto& emb = store.Create("tok", {6, 4});
  neural::DefinitionEncoder<double> enc(store, "enc", emb, 5, 2);
  neural::AtomScorer<double> scorer(store, "match", 3, 5);
  CHECK(store.Contains("match.adapter"));
  neural::AtomScorer<double> same(store, "plain", 5, 5);
  CHECK(!store.Contains("plain.adapter"));

  Rng data(9);
  std::vector<AtomVector> atoms;
  for (std::size_t k = 0; k < 3; ++k) atoms.push_back({k, RandomUnit(3, data)});
  std::vector<std::vector<double>> rows;
  for (const auto& a : atoms) rows.push_back(a.vec);
  const std::vector<double> noise = neural::SampleGumbel(3, data);
  const std::vector<std::size_t> ids{0, 3, 5, 1};
  auto r = neural::GradCheck(store, [&](neural::Graph<double>& g) {
    Rng rng(0);
    auto def = enc.Encode(g, ids, 0.0, rng);
    auto logits = scorer.Logits(g, def, atoms);
    auto z = g.GumbelSoftmax(logits, noise, 0.8, false);
    return g.Sum(g.Combine(z, rows));
  });
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("stopword lists") {
  const auto def = StopwordList::Default();
  CHECK(def.Contains("the"));
  CHECK(def.Contains("and"));
  CHECK(!def.Contains("cabinet"));

  const auto shipped = StopwordList::Load(std::string(POLYDEF_TEST_DATA_DIR) + "/stopwords.txt");
  CHECK(shipped.size() == def.size());
  for (const char* w : {"the", "of", "whose", "must", "?", "\""}) CHECK(shipped.Contains(w));

  TempDir dir;
  testing::WriteText(dir.File("s.txt"), "# comment\n\nfoo\n  bar  \n");
  auto mine = StopwordList::Load(dir.File("s.txt"));
  CHECK(mine.size() == 2);
  CHECK(mine.Contains("bar"));
  testing::WriteText(dir.File("empty.txt"), "# nothing\n");
  CHECK_THROWS_AS(StopwordList::Load(dir.File("empty.txt")), ParseError);
  CHECK_THROWS_AS(StopwordList({}), Error);
}

}  // namespace
}  // namespace polydef
