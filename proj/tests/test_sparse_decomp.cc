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
#include <vector>

#include "polydef/sparse_decomp.h"
#include "test_util.h"

namespace polydef {
namespace {

using testing::TempDir;

RowMatrix RandomOrthonormal(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.Normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  return q.transpose();  // rows orthonormal
}

std::vector<double> Vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

TEST_CASE("omp on the identity basis picks the exact coordinates") {
  RowMatrix atoms = RowMatrix::Identity(6, 6);
  std::vector<double> v{0, 2, 3, 0, 0, 0};
  auto code = SparseCodeOmp(v, atoms, 5);
  REQUIRE(code.size() == 2);
  CHECK(code[0].atom == 2);
  CHECK(code[0].alpha == doctest::Approx(3.0));
  CHECK(code[1].atom == 1);
  CHECK(code[1].alpha == doctest::Approx(2.0));
  CHECK(Residual(v, atoms, code).norm() < 1e-12);
}

TEST_CASE("omp returns nothing for a vector orthogonal to every atom") {
  RowMatrix atoms = RowMatrix::Zero(2, 4);
  atoms(0, 0) = 1.0;
  atoms(1, 1) = 1.0;
  std::vector<double> v{0, 0, 1.5, -2};
  auto code = SparseCodeOmp(v, atoms, 2);
  CHECK(code.empty());
  auto r = Residual(v, atoms, code);
  for (int d = 0; d < 4; ++d) CHECK(r[d] == v[static_cast<std::size_t>(d)]);
}

TEST_CASE("omp recovers 3-sparse vectors over orthonormal atoms exactly") {
  const RowMatrix atoms = RandomOrthonormal(12, 5);
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::size_t> ids(12);
    for (std::size_t j = 0; j < 12; ++j) ids[j] = j;
    rng.Shuffle(ids);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(12);
    std::vector<double> truth(12, 0.0);
    for (int k = 0; k < 3; ++k) {
      truth[ids[k]] = rng.Uniform(0.5, 2.0) * (rng.Uniform() < 0.5 ? -1 : 1);
      v += truth[ids[k]] * atoms.row(static_cast<Eigen::Index>(ids[k])).transpose();
    }
    auto code = SparseCodeOmp(Vec(v), atoms, 5);
    REQUIRE(code.size() == 3);
    for (const auto& c : code) CHECK(c.alpha == doctest::Approx(truth[c.atom]).epsilon(1e-9));
  }
}

TEST_CASE("each extra omp selection lowers the residual") {
  Rng rng(2);
  RowMatrix atoms(20, 10);
  for (Eigen::Index j = 0; j < 20; ++j) {
    for (Eigen::Index d = 0; d < 10; ++d) atoms(j, d) = rng.Normal();
    atoms.row(j).normalize();
  }
  std::vector<double> v(10);
  for (auto& x : v) x = rng.Normal();
  double last = Eigen::Map<const Eigen::VectorXd>(v.data(), 10).norm();
  for (std::size_t k = 1; k <= 6; ++k) {
    const double r = Residual(v, atoms, SparseCodeOmp(v, atoms, k)).norm();
    CHECK(r < last);
    last = r;
  }
}

TEST_CASE("refit support solves least squares on the given atoms") {
  RowMatrix atoms(2, 3);
  atoms << 1, 0, 0, std::sqrt(0.5), std::sqrt(0.5), 0;
  std::vector<double> v{1, 1, 1};
  auto code = RefitSupport(v, atoms, {{0, 0.0}, {1, 0.0}});
  REQUIRE(code.size() == 2);
  CHECK(code[0].alpha == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(code[1].alpha == doctest::Approx(std::sqrt(2.0)));
  CHECK(Residual(v, atoms, code).norm() == doctest::Approx(1.0));
}

TEST_CASE("orthonormal vocabulary codes each word on its own atom") {
  const RowMatrix basis = RandomOrthonormal(8, 3);
  EmbeddingTable table(8);
  for (Eigen::Index j = 0; j < 8; ++j) {
    Eigen::VectorXd row = basis.row(j).transpose();
    table.Add("w" + std::to_string(j), Vec(row));
  }
  DecompConfig cfg;
  cfg.num_atoms = 8;
  cfg.sparsity = 1;
  cfg.seed = 4;
  const AtomSet set = FitAtoms(table, cfg);
  std::vector<int> owner(8, -1);
  for (std::size_t w = 0; w < 8; ++w) {
    const auto& code = set.code(w);
    REQUIRE(code.size() == 1);
    CHECK(std::abs(code[0].alpha) == doctest::Approx(1.0));
    CHECK(set.residual_norm(w) < 1e-9);
    CHECK(owner[code[0].atom] == -1);
    owner[code[0].atom] = static_cast<int>(w);
  }
}

TEST_CASE("fit keeps unit atoms, sparse codes, exact residuals and a falling objective") {
  auto world = testing::MakeSparseWorld(120, 16, 12, 3, 0.05, 8);
  DecompConfig cfg;
  cfg.num_atoms = 12;
  cfg.sparsity = 3;
  cfg.iterations = 25;
  cfg.seed = 1;
  FitTrace trace;
  const AtomSet set = FitAtoms(world.table, cfg, &trace);
  for (std::size_t j = 0; j < set.num_atoms(); ++j) {
    CHECK(set.atoms().row(static_cast<Eigen::Index>(j)).norm() == doctest::Approx(1.0).epsilon(1e-6));
  }
  REQUIRE(set.num_words() == world.table.size());
  for (std::size_t w = 0; w < set.num_words(); ++w) {
    CHECK(set.code(w).size() <= 3);
    const double r = Residual(world.table.vector(w), set.atoms(), set.code(w)).norm();
    CHECK(std::abs(r - set.residual_norm(w)) < 1e-10);
  }
  REQUIRE(!trace.objective.empty());
  for (std::size_t i = 1; i < trace.objective.size(); ++i) {
    CHECK(trace.objective[i] <= trace.objective[i - 1]);
  }
}

TEST_CASE("same seed gives identical fits and job count does not matter") {
  auto world = testing::MakeSparseWorld(80, 12, 10, 3, 0.02, 3);
  DecompConfig cfg;
  cfg.num_atoms = 10;
  cfg.sparsity = 3;
  cfg.iterations = 10;
  cfg.seed = 17;
  const AtomSet a = FitAtoms(world.table, cfg);
  const AtomSet b = FitAtoms(world.table, cfg);
  cfg.jobs = 4;
  const AtomSet c = FitAtoms(world.table, cfg);
  CHECK(a.atoms() == b.atoms());
  CHECK(a.atoms() == c.atoms());
  for (std::size_t w = 0; w < a.num_words(); ++w) {
    CHECK(a.code(w) == b.code(w));
    CHECK(a.code(w) == c.code(w));
  }
  cfg.seed = 18;
  CHECK(FitAtoms(world.table, cfg).atoms() != a.atoms());
}

TEST_CASE("invalid decomposition settings are rejected") {
  auto world = testing::MakeSparseWorld(10, 4, 3, 2, 0.0, 1);
  DecompConfig cfg;
  cfg.num_atoms = 0;
  CHECK_THROWS_AS(FitAtoms(world.table, cfg), Error);
  cfg.num_atoms = 3;
  cfg.sparsity = 4;
  CHECK_THROWS_AS(FitAtoms(world.table, cfg), Error);
  cfg.sparsity = 2;
  cfg.num_atoms = 21;
  CHECK_THROWS_AS(FitAtoms(world.table, cfg), Error);
  cfg.num_atoms = 3;
  cfg.starts = 0;
  CHECK_THROWS_AS(FitAtoms(world.table, cfg), Error);
  cfg.starts = 1;
  CHECK_THROWS_AS(FitAtoms(EmbeddingTable(4), cfg), Error);
}

TEST_CASE("word atoms sort by magnitude") {
  AtomSet set(RowMatrix::Identity(8, 8), 5);
  set.AddWord("cabinet", {{3, 0.9}, {7, -1.2}}, 0.0);
  set.AddWord("even", {{5, 0.5}, {2, -0.5}}, 0.0);
  auto a = WordAtoms(set, "cabinet");
  REQUIRE(a.size() == 2);
  CHECK(a[0] == AtomCoef{7, -1.2});
  CHECK(a[1] == AtomCoef{3, 0.9});
  auto b = WordAtoms(set, "even");
  CHECK(b[0].atom == 2);
  CHECK_THROWS_AS(WordAtoms(set, "missing"), Error);
}

TEST_CASE("word atom lists respect the sparsity") {
  auto world = testing::MakeSparseWorld(60, 10, 12, 4, 0.1, 6);
  DecompConfig cfg;
  cfg.num_atoms = 12;
  cfg.iterations = 5;
  const AtomSet five = FitAtoms(world.table, cfg);
  cfg.sparsity = 1;
  const AtomSet one = FitAtoms(world.table, cfg);
  for (const auto& w : world.table.words()) {
    CHECK(WordAtoms(five, w).size() <= 5);
    CHECK(WordAtoms(one, w).size() == 1);
  }
}

TEST_CASE("describe atom ranks vocabulary by cosine to the atom") {
  EmbeddingTable table(3);
  table.Add("closet", std::vector<double>{0, 2, 0});
  table.Add("cupboard", std::vector<double>{0.2, 1, 0});
  table.Add("river", std::vector<double>{1, 0, 0});
  AtomSet set(RowMatrix::Identity(3, 3), 1);
  auto n = DescribeAtom(set, 1, table, 2);
  REQUIRE(n.size() == 2);
  CHECK(n[0].word == "closet");
  CHECK(n[0].similarity == doctest::Approx(1.0));
  CHECK(n[1].word == "cupboard");
  CHECK(DescribeAtom(set, 0, table, 10).size() == 3);
  CHECK_THROWS_AS(DescribeAtom(set, 3, table, 1), Error);
}

TEST_CASE("atom table uses two aligned columns") {
  const std::string t = FormatAtomTable({344, 7}, {{{"closet", 0.9}, {"cupboard", 0.8}, {"drawers", 0.7}},
                                                   {{"river", 0.5}}});
  CHECK(t ==
        "atom  | nearest words\n"
        "A_344 | closet, cupboard, drawers\n"
        "A_7   | river\n");
}

TEST_CASE("atom files round trip bit for bit") {
  TempDir dir;
  auto world = testing::MakeSparseWorld(30, 6, 5, 2, 0.1, 12);
  DecompConfig cfg;
  cfg.num_atoms = 5;
  cfg.sparsity = 2;
  cfg.iterations = 5;
  const AtomSet set = FitAtoms(world.table, cfg);
  const std::string path = dir.File("atoms.txt");
  SaveAtoms(set, path);
  const AtomSet back = LoadAtoms(path);
  CHECK(back.atoms() == set.atoms());
  CHECK(back.sparsity() == 2);
  REQUIRE(back.num_words() == set.num_words());
  for (std::size_t w = 0; w < set.num_words(); ++w) {
    CHECK(back.words()[w] == set.words()[w]);
    CHECK(back.code(w) == set.code(w));
    CHECK(back.residual_norm(w) == 0.0);
  }
  const AtomSet with = LoadAtoms(path, &world.table);
  for (std::size_t w = 0; w < set.num_words(); ++w) {
    CHECK(with.residual_norm(w) == doctest::Approx(set.residual_norm(w)).epsilon(1e-12));
  }
  SaveAtoms(back, dir.File("again.txt"));
  CHECK(testing::ReadText(dir.File("again.txt")) == testing::ReadText(path));
}

TEST_CASE("malformed atom files report a line") {
  TempDir dir;
  const std::string path = dir.File("bad.txt");
  testing::WriteText(path, "polydef-atoms 99\n1 2 1\n1 0\n");
  CHECK_THROWS_AS(LoadAtoms(path), ParseError);
  testing::WriteText(path, "polydef-atoms 1\n1 2 1\n1 0 0\n");
  try {
    LoadAtoms(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(LoadAtoms(dir.File("missing.txt")), ParseError);
}

}  // namespace
}  // namespace polydef
