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

#include "polydef/sparse_decomp.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "polydef/parallel.h"

namespace polydef {

namespace {

constexpr double kResidualStop = 1e-10;
constexpr int kPowerIterations = 50;
// Atoms closer than this (|cosine|) count as duplicates.
constexpr double kMaxCoherence = 0.9;
// A word whose residual exceeds this multiple of the median triggers a restart.
constexpr double kOutlierFactor = 3.0;
// Consecutive rolled-back restarts before cleanup gives up.
constexpr std::size_t kMaxFailedRestarts = 5;

Eigen::Map<const Eigen::VectorXd> AsVector(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

// Solves the normal equations on `support`; empty optional if the selected
// atoms are numerically dependent.
std::optional<Eigen::VectorXd> SolveSupport(const Eigen::VectorXd& v, const RowMatrix& atoms,
                                            const std::vector<std::size_t>& support) {
  const auto k = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd sub(k, atoms.cols());
  for (Eigen::Index i = 0; i < k; ++i) sub.row(i) = atoms.row(static_cast<Eigen::Index>(support[i]));
  Eigen::MatrixXd gram = sub * sub.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const double diag_min = llt.matrixL().toDenseMatrix().diagonal().minCoeff();
  if (!(diag_min > 1e-7)) return std::nullopt;
  return llt.solve(sub * v);
}

}  // namespace

AtomSet::AtomSet(RowMatrix atoms, std::size_t sparsity)
    : atoms_(std::move(atoms)), sparsity_(sparsity) {}

void AtomSet::AddWord(std::string word, SparseCode code, double residual_norm) {
  if (code.size() > sparsity_) throw Error("code for '" + word + "' exceeds sparsity");
  for (const auto& c : code) {
    if (c.atom >= num_atoms()) throw Error("code for '" + word + "' names an unknown atom");
  }
  if (index_.count(word) > 0) throw Error("duplicate word '" + word + "' in atom set");
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  codes_.push_back(std::move(code));
  residual_norms_.push_back(residual_norm);
}

std::optional<std::size_t> AtomSet::Find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void AtomSet::RecomputeResiduals(const EmbeddingTable& table) {
  if (table.dim() != dim()) throw Error("embedding width does not match atoms");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    residual_norms_[i] = Residual(table.at(words_[i]), atoms_, codes_[i]).norm();
  }
}

Eigen::VectorXd Residual(std::span<const double> v, const RowMatrix& atoms,
                         const SparseCode& code) {
  Eigen::VectorXd r = AsVector(v);
  for (const auto& c : code) r -= c.alpha * atoms.row(static_cast<Eigen::Index>(c.atom)).transpose();
  return r;
}

SparseCode SparseCodeOmp(std::span<const double> v, const RowMatrix& atoms,
                         std::size_t sparsity) {
  if (static_cast<Eigen::Index>(v.size()) != atoms.cols()) {
    throw Error("vector width does not match atoms");
  }
  const Eigen::VectorXd target = AsVector(v);
  const double scale = std::max(1.0, target.norm());
  Eigen::VectorXd residual = target;
  std::vector<std::size_t> support;
  std::vector<char> used(static_cast<std::size_t>(atoms.rows()), 0);
  Eigen::VectorXd alpha;

  while (support.size() < sparsity && residual.norm() >= kResidualStop) {
    const Eigen::VectorXd corr = atoms * residual;
    Eigen::Index best = -1;
    double best_abs = 0.0;
    for (Eigen::Index j = 0; j < corr.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      if (std::abs(corr[j]) > best_abs) {
        best_abs = std::abs(corr[j]);
        best = j;
      }
    }
    if (best < 0 || best_abs <= 1e-12 * scale) break;
    support.push_back(static_cast<std::size_t>(best));
    auto solved = SolveSupport(target, atoms, support);
    if (!solved) {
      support.pop_back();
      break;
    }
    used[static_cast<std::size_t>(best)] = 1;
    alpha = std::move(*solved);
    residual = target;
    for (std::size_t i = 0; i < support.size(); ++i) {
      residual -= alpha[static_cast<Eigen::Index>(i)] *
                  atoms.row(static_cast<Eigen::Index>(support[i])).transpose();
    }
  }

  SparseCode code;
  code.reserve(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    code.push_back({support[i], alpha[static_cast<Eigen::Index>(i)]});
  }
  return code;
}

SparseCode RefitSupport(std::span<const double> v, const RowMatrix& atoms,
                        const SparseCode& support) {
  if (support.empty()) return {};
  std::vector<std::size_t> ids;
  for (const auto& c : support) ids.push_back(c.atom);
  auto solved = SolveSupport(AsVector(v), atoms, ids);
  if (!solved) return support;
  SparseCode out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.push_back({ids[i], (*solved)[static_cast<Eigen::Index>(i)]});
  }
  return out;
}

namespace {

struct Fit {
  RowMatrix atoms;
  std::vector<SparseCode> codes;
  double objective = 0.0;
};

Fit FitOnce(const EmbeddingTable& table, const DecompConfig& config, std::uint64_t seed,
            FitTrace* trace) {
  const std::size_t n = table.size();
  const std::size_t m = config.num_atoms;
  const auto dim = static_cast<Eigen::Index>(table.dim());
  Rng rng(seed);

  // Seed atoms from distinct word vectors.
  RowMatrix atoms(static_cast<Eigen::Index>(m), dim);
  {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.Shuffle(order);
    for (std::size_t j = 0; j < m; ++j) {
      Eigen::VectorXd a;
      if (j < n && table.norm(order[j]) > 0.0) {
        a = AsVector(table.vector(order[j]));
      } else {
        a.resize(dim);
        for (Eigen::Index d = 0; d < dim; ++d) a[d] = rng.Normal();
      }
      atoms.row(static_cast<Eigen::Index>(j)) = a.normalized().transpose();
    }
  }

  std::vector<SparseCode> codes(n);
  std::vector<double> errors(n, 0.0);
  double previous = std::numeric_limits<double>::infinity();
  bool have_codes = false;

  // Sparse coding. Fresh greedy codes are taken as a whole when they do not
  // raise the total error; otherwise each word keeps whichever of the fresh
  // code and its refit previous support is better. Either way the objective
  // cannot go up, and the batch rule stops supports from freezing early.
  auto code_all = [&] {
    std::vector<SparseCode> kept(n);
    std::vector<double> kept_errors(n, 0.0);
    ParallelFor(n, config.jobs, [&](std::size_t w) {
      auto v = table.vector(w);
      SparseCode fresh = SparseCodeOmp(v, atoms, config.sparsity);
      const double fresh_err = Residual(v, atoms, fresh).squaredNorm();
      kept[w] = fresh;
      kept_errors[w] = fresh_err;
      if (have_codes && !codes[w].empty()) {
        SparseCode refit = RefitSupport(v, atoms, codes[w]);
        const double refit_err = Residual(v, atoms, refit).squaredNorm();
        if (refit_err < fresh_err) {
          kept[w] = std::move(refit);
          kept_errors[w] = refit_err;
        }
      }
      codes[w] = std::move(fresh);
      errors[w] = fresh_err;
    });
    if (have_codes && std::accumulate(errors.begin(), errors.end(), 0.0) > previous) {
      codes = std::move(kept);
      errors = std::move(kept_errors);
    }
    return std::accumulate(errors.begin(), errors.end(), 0.0);
  };

  // Re-seeding atoms that words still use can make things worse; the
  // dictionary and codes from before such a step are kept so it can be
  // rolled back.
  std::optional<std::pair<RowMatrix, std::vector<SparseCode>>> rollback;
  std::size_t failed_restarts = 0;

  for (int iter = 0; iter < std::max(config.iterations, 1); ++iter) {
    double total = code_all();
    bool rolled_back = false;
    if (rollback) {
      if (total > previous) {
        atoms = std::move(rollback->first);
        codes = std::move(rollback->second);
        total = code_all();
        rolled_back = true;
        ++failed_restarts;
      } else {
        failed_restarts = 0;
      }
    }
    rollback.reset();
    have_codes = true;
    if (trace) trace->objective.push_back(total);
    const bool last = iter + 1 >= config.iterations;
    // a rolled-back step changes nothing, so it says nothing about convergence
    const bool converged =
        total == 0.0 || (!rolled_back && std::isfinite(previous) &&
                         (previous - total) < config.tol * previous);
    previous = total;
    if (last || converged) break;

    // Dictionary update, one atom at a time over the words that use it.
    RowMatrix residual(static_cast<Eigen::Index>(n), dim);
    for (std::size_t w = 0; w < n; ++w) {
      residual.row(static_cast<Eigen::Index>(w)) =
          Residual(table.vector(w), atoms, codes[w]).transpose();
    }
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> users(m);
    for (std::size_t w = 0; w < n; ++w) {
      for (std::size_t s = 0; s < codes[w].size(); ++s) users[codes[w][s].atom].push_back({w, s});
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (users[j].empty()) continue;
      const auto jr = static_cast<Eigen::Index>(j);
      // Rows of E are the users' residuals with atom j added back; the best
      // rank-one fit a * u^T of E gives the new atom u and coefficients a.
      RowMatrix e(static_cast<Eigen::Index>(users[j].size()), dim);
      Eigen::VectorXd a(e.rows());
      for (std::size_t k = 0; k < users[j].size(); ++k) {
        auto [w, s] = users[j][k];
        const auto kr = static_cast<Eigen::Index>(k);
        a[kr] = codes[w][s].alpha;
        residual.row(static_cast<Eigen::Index>(w)) += a[kr] * atoms.row(jr);
        e.row(kr) = residual.row(static_cast<Eigen::Index>(w));
      }
      Eigen::VectorXd u = atoms.row(jr).transpose();
      const double before = (e - a * u.transpose()).squaredNorm();
      for (int it = 0; it < kPowerIterations; ++it) {
        Eigen::VectorXd next = e.transpose() * (e * u);
        const double nn = next.norm();
        if (nn <= 0.0) break;
        next /= nn;
        const double change = (next - u).norm();
        u = std::move(next);
        if (change < 1e-10) break;
      }
      Eigen::VectorXd fitted = e * u;
      // keep the old atom unless the refit actually lowers the error
      if ((e - fitted * u.transpose()).squaredNorm() <= before) {
        atoms.row(jr) = u.transpose();
        for (std::size_t k = 0; k < users[j].size(); ++k) {
          auto [w, s] = users[j][k];
          codes[w][s].alpha = fitted[static_cast<Eigen::Index>(k)];
        }
      }
      for (auto [w, s] : users[j]) {
        residual.row(static_cast<Eigen::Index>(w)) -= codes[w][s].alpha * atoms.row(jr);
      }
    }

    // Unused atoms restart from the worst-reconstructed words.
    std::vector<std::size_t> worst(n);
    std::iota(worst.begin(), worst.end(), 0);
    std::vector<double> rnorm(n);
    for (std::size_t w = 0; w < n; ++w) rnorm[w] = residual.row(static_cast<Eigen::Index>(w)).norm();
    std::stable_sort(worst.begin(), worst.end(),
                     [&](std::size_t a, std::size_t b) { return rnorm[a] > rnorm[b]; });
    std::size_t next = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!users[j].empty() || next >= n) continue;
      const std::size_t w = worst[next++];
      Eigen::VectorXd seed = residual.row(static_cast<Eigen::Index>(w)).transpose();
      if (seed.norm() <= kResidualStop) seed = AsVector(table.vector(w));
      if (seed.norm() <= 0.0) continue;
      atoms.row(static_cast<Eigen::Index>(j)) = seed.normalized().transpose();
      if (trace) ++trace->reseeded_atoms;
    }

    // Near-duplicate atoms: the later one of each pair restarts from the
    // next worst-reconstructed word.
    if (failed_restarts < kMaxFailedRestarts) {
      std::vector<std::size_t> dupes;
      for (std::size_t j = 1; j < m; ++j) {
        const auto jr = static_cast<Eigen::Index>(j);
        for (std::size_t k = 0; k < j; ++k) {
          if (std::abs(atoms.row(jr).dot(atoms.row(static_cast<Eigen::Index>(k)))) >
              kMaxCoherence) {
            dupes.push_back(j);
            break;
          }
        }
      }
      if (dupes.empty() && next < n) {
        // No duplicates: if the worst word is far off the typical error,
        // give it the atom carrying the least coefficient energy.
        std::vector<double> sorted = rnorm;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2),
                         sorted.end());
        const double median = sorted[n / 2];
        // after a failed attempt, move on to the next candidates
        next = std::min(n - 1, next + failed_restarts);
        if (rnorm[worst[next]] > kOutlierFactor * median) {
          std::vector<double> energy(m, 0.0);
          for (std::size_t w = 0; w < n; ++w) {
            for (const auto& c : codes[w]) energy[c.atom] += c.alpha * c.alpha;
          }
          std::vector<std::size_t> order(m);
          std::iota(order.begin(), order.end(), 0);
          std::stable_sort(order.begin(), order.end(),
                           [&](std::size_t a, std::size_t b) { return energy[a] < energy[b]; });
          dupes.push_back(order[failed_restarts % m]);
        }
      }
      if (!dupes.empty()) rollback.emplace(atoms, codes);
      for (std::size_t d = 0; d < dupes.size(); ++d) {
        const std::size_t j = dupes[d];
        if (next >= n) break;
        const std::size_t w = worst[next++];
        Eigen::VectorXd seed = residual.row(static_cast<Eigen::Index>(w)).transpose();
        if (seed.norm() <= kResidualStop) continue;
        if (d == 0 && failed_restarts == 0) {
          // First try: the dominant direction shared by all residuals, which
          // is what a missing atom leaves behind. Start from the worst word.
          for (int it = 0; it < kPowerIterations; ++it) {
            Eigen::VectorXd nxt = residual.transpose() * (residual * seed);
            if (nxt.norm() <= 0.0) break;
            seed = nxt.normalized();
          }
        }
        atoms.row(static_cast<Eigen::Index>(j)) = seed.normalized().transpose();
        if (trace) ++trace->reseeded_atoms;
      }
    }
  }

  return {std::move(atoms), std::move(codes), previous};
}

}  // namespace

AtomSet FitAtoms(const EmbeddingTable& table, const DecompConfig& config, FitTrace* trace) {
  if (table.empty()) throw Error("cannot decompose an empty embedding table");
  if (config.num_atoms < 1) throw Error("num_atoms must be at least 1");
  if (config.sparsity < 1 || config.sparsity > config.num_atoms) {
    throw Error("sparsity must lie in [1, num_atoms]");
  }
  if (config.num_atoms > table.size() * config.sparsity) {
    throw Error("num_atoms exceeds vocabulary size times sparsity");
  }
  if (config.starts < 1) throw Error("starts must be at least 1");
  // Alternating minimization can settle with a true direction split across
  // two learned atoms. Independent starts rarely share the same bad basin,
  // so keep the run with the lowest final error.
  std::optional<Fit> best;
  FitTrace best_trace;
  for (int s = 0; s < config.starts; ++s) {
    FitTrace run_trace;
    const std::uint64_t seed =
        s == 0 ? config.seed : Rng::Derive(config.seed, 0x5eed, static_cast<std::uint64_t>(s)).NextU64();
    Fit fit = FitOnce(table, config, seed, &run_trace);
    if (!best || fit.objective < best->objective) {
      best = std::move(fit);
      best_trace = std::move(run_trace);
    }
  }
  if (trace) *trace = std::move(best_trace);

  const std::size_t n = table.size();
  auto& codes = best->codes;
  AtomSet set(std::move(best->atoms), config.sparsity);
  for (std::size_t w = 0; w < n; ++w) {
    SparseCode code = codes[w];
    std::sort(code.begin(), code.end(),
              [](const AtomCoef& a, const AtomCoef& b) { return a.atom < b.atom; });
    const double rn = Residual(table.vector(w), set.atoms(), code).norm();
    set.AddWord(table.word(w), std::move(code), rn);
  }
  return set;
}

SparseCode WordAtoms(const AtomSet& set, std::string_view word) {
  auto i = set.Find(word);
  if (!i) throw Error("word has no atoms: '" + std::string(word) + "'");
  SparseCode out = set.code(*i);
  std::sort(out.begin(), out.end(), [](const AtomCoef& a, const AtomCoef& b) {
    if (std::abs(a.alpha) != std::abs(b.alpha)) return std::abs(a.alpha) > std::abs(b.alpha);
    return a.atom < b.atom;
  });
  return out;
}

std::vector<Neighbor> DescribeAtom(const AtomSet& set, std::size_t atom_id,
                                   const EmbeddingTable& table, std::size_t k) {
  if (atom_id >= set.num_atoms()) throw Error("invalid atom id " + std::to_string(atom_id));
  return NearestWords(table, set.atom(atom_id), k);
}

std::string FormatAtomTable(const std::vector<std::size_t>& atom_ids,
                            const std::vector<std::vector<Neighbor>>& neighbors) {
  std::vector<std::string> left{"atom"};
  for (auto id : atom_ids) left.push_back("A_" + std::to_string(id));
  std::size_t width = 0;
  for (const auto& s : left) width = std::max(width, s.size());
  std::ostringstream out;
  out << left[0] << std::string(width - left[0].size(), ' ') << " | nearest words\n";
  for (std::size_t i = 0; i < atom_ids.size(); ++i) {
    out << left[i + 1] << std::string(width - left[i + 1].size(), ' ') << " | ";
    for (std::size_t k = 0; k < neighbors[i].size(); ++k) {
      if (k > 0) out << ", ";
      out << neighbors[i][k].word;
    }
    out << '\n';
  }
  return out.str();
}

void SaveAtoms(const AtomSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "polydef-atoms " << kAtomFormatVersion << '\n';
  out << set.num_atoms() << ' ' << set.dim() << ' ' << set.sparsity() << '\n';
  for (std::size_t j = 0; j < set.num_atoms(); ++j) {
    auto a = set.atom(j);
    for (std::size_t d = 0; d < a.size(); ++d) {
      if (d > 0) out << ' ';
      out << FormatReal(a[d]);
    }
    out << '\n';
  }
  for (std::size_t w = 0; w < set.num_words(); ++w) {
    out << set.words()[w];
    for (const auto& c : set.code(w)) out << ' ' << c.atom << ':' << FormatReal(c.alpha);
    out << '\n';
  }
}

AtomSet LoadAtoms(const std::string& path, const EmbeddingTable* table) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open atom file");
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!SplitWhitespace(line).empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(path, 1, "empty atom file");
  auto version = SplitWhitespace(line);
  if (version.size() != 2 || version[0] != "polydef-atoms" ||
      version[1] != std::to_string(kAtomFormatVersion)) {
    throw ParseError(path, lineno, "unsupported atom file version line");
  }
  if (!next_line()) throw ParseError(path, lineno, "missing 'm D sparsity' header");
  auto header = SplitWhitespace(line);
  std::size_t m = 0, dim = 0, sparsity = 0;
  try {
    if (header.size() != 3) throw Error("");
    m = static_cast<std::size_t>(ParseReal(header[0]));
    dim = static_cast<std::size_t>(ParseReal(header[1]));
    sparsity = static_cast<std::size_t>(ParseReal(header[2]));
    if (m == 0 || dim == 0 || sparsity == 0) throw Error("");
  } catch (const Error&) {
    throw ParseError(path, lineno, "malformed header, expected 'm D sparsity'");
  }
  RowMatrix atoms(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < m; ++j) {
    if (!next_line()) throw ParseError(path, lineno, "missing atom rows");
    auto fields = SplitWhitespace(line);
    if (fields.size() != dim) throw ParseError(path, lineno, "atom row has wrong width");
    try {
      for (std::size_t d = 0; d < dim; ++d) {
        atoms(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d)) = ParseReal(fields[d]);
      }
    } catch (const Error& e) {
      throw ParseError(path, lineno, e.what());
    }
  }
  AtomSet set(std::move(atoms), sparsity);
  while (next_line()) {
    auto fields = SplitWhitespace(line);
    SparseCode code;
    try {
      for (std::size_t i = 1; i < fields.size(); ++i) {
        auto colon = fields[i].find(':');
        if (colon == std::string_view::npos) throw Error("expected 'atom:alpha'");
        const double id = ParseReal(fields[i].substr(0, colon));
        if (id < 0 || id != std::floor(id)) throw Error("bad atom id");
        code.push_back({static_cast<std::size_t>(id), ParseReal(fields[i].substr(colon + 1))});
      }
      set.AddWord(std::string(fields[0]), std::move(code), 0.0);
    } catch (const Error& e) {
      throw ParseError(path, lineno, e.what());
    }
  }
  if (table) set.RecomputeResiduals(*table);
  return set;
}

}  // namespace polydef
