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

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "polydef/common.h"
#include "polydef/parallel.h"

namespace polydef {
namespace {

TEST_CASE("pos tags normalize through the alias map") {
  CHECK(ParsePos("n") == Pos::kNoun);
  CHECK(ParsePos("NOUN") == Pos::kNoun);
  CHECK(ParsePos("v") == Pos::kVerb);
  CHECK(ParsePos("a") == Pos::kAdjective);
  CHECK(ParsePos("s") == Pos::kAdjective);
  CHECK(ParsePos("adj") == Pos::kAdjective);
  CHECK(ParsePos("r") == Pos::kAdverb);
  CHECK(ParsePos("adverb") == Pos::kAdverb);
  CHECK(ParsePos("prep") == Pos::kOther);
  CHECK(ParsePos("") == Pos::kOther);
  for (Pos p : {Pos::kNoun, Pos::kVerb, Pos::kAdjective, Pos::kAdverb, Pos::kOther}) {
    CHECK(ParsePos(PosName(p)) == p);
  }
}

TEST_CASE("reals survive a text round trip") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, -2.5e17, 0.1, 6.02214076e23}) {
    CHECK(ParseReal(FormatReal(v)) == v);
  }
  const float f = 0.1f;
  CHECK(static_cast<float>(ParseReal(FormatReal(f))) == f);
  CHECK(ParseReal("+3.5") == 3.5);
  CHECK_THROWS_AS(ParseReal(""), Error);
  CHECK_THROWS_AS(ParseReal("1.0x"), Error);
  CHECK_THROWS_AS(ParseReal("abc"), Error);
}

TEST_CASE("whitespace splitting drops empty fields") {
  auto f = SplitWhitespace("  a\tbb   c \n");
  REQUIRE(f.size() == 3);
  CHECK(f[0] == "a");
  CHECK(f[1] == "bb");
  CHECK(f[2] == "c");
  CHECK(SplitWhitespace("   ").empty());
}

TEST_CASE("parse errors carry the line number") {
  ParseError e("x.txt", 7, "bad");
  CHECK(e.line() == 7);
  CHECK(std::string(e.what()) == "x.txt:7: bad");
  CHECK(std::string(ParseError("x.txt", 0, "bad").what()) == "x.txt: bad");
}

TEST_CASE("fingerprint matches published FNV-1a vectors") {
  CHECK(Fingerprint("") == 0xcbf29ce484222325ULL);
  CHECK(Fingerprint("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(Fingerprint("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("rng streams are reproducible and derived streams differ") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.NextU64() == b.NextU64());

  Rng d1 = Rng::Derive(42, 1, 0);
  Rng d2 = Rng::Derive(42, 1, 0);
  Rng d3 = Rng::Derive(42, 2, 0);
  Rng d4 = Rng::Derive(42, 1, 1);
  const auto x1 = d1.NextU64();
  CHECK(x1 == d2.NextU64());
  CHECK(x1 != d3.NextU64());
  CHECK(x1 != d4.NextU64());
}

TEST_CASE("rng helpers stay in range with sane moments") {
  Rng r(9);
  double sum = 0.0, sq = 0.0, nsum = 0.0, nsq = 0.0;
  const int n = 200000;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < n; ++i) {
    double u = r.Uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
    double z = r.Normal();
    nsum += z;
    nsq += z * z;
    ++counts[r.Index(7)];
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
  CHECK(std::abs(nsum / n) < 0.01);
  CHECK(nsq / n == doctest::Approx(1.0).epsilon(0.02));
  for (int c : counts) CHECK(std::abs(c - n / 7.0) < 5 * std::sqrt(n / 7.0));
  CHECK(r.Index(1) == 0);
  CHECK(r.Index(0) == 0);
}

TEST_CASE("shuffle is a permutation") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  Rng r(3);
  r.Shuffle(v);
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 50);
  CHECK(*s.begin() == 0);
  CHECK(*s.rbegin() == 49);
}

TEST_CASE("parallel for visits every index once for any job count") {
  for (int jobs : {1, 2, 5, 64}) {
    std::vector<int> hits(37, 0);
    ParallelFor(hits.size(), jobs, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  CHECK_THROWS_AS(ParallelFor(10, 3,
                              [](std::size_t i) {
                                if (i == 4) throw Error("boom");
                              }),
                  Error);
}

}  // namespace
}  // namespace polydef
