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

#ifndef POLYDEF_SPARSE_DECOMP_H_
#define POLYDEF_SPARSE_DECOMP_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "polydef/corpus.h"

namespace polydef {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AtomCoef {
  std::size_t atom = 0;
  double alpha = 0.0;
  friend bool operator==(const AtomCoef&, const AtomCoef&) = default;
};

using SparseCode = std::vector<AtomCoef>;

struct DecompConfig {
  std::size_t num_atoms = 0;
  std::size_t sparsity = 5;
  int iterations = 30;
  // Stop once the relative decrease of the reconstruction error falls below this.
  double tol = 1e-4;
  std::uint64_t seed = 0;
  // Independent initializations; the one with the lowest final error wins.
  int starts = 3;
  int jobs = 1;
};

// Shared unit-norm atoms plus each word's sparse coefficients:
//   v_w = sum_j alpha_{w,j} A_j + eta_w
class AtomSet {
 public:
  AtomSet() = default;
  AtomSet(RowMatrix atoms, std::size_t sparsity);

  std::size_t num_atoms() const { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(atoms_.cols()); }
  std::size_t sparsity() const { return sparsity_; }
  const RowMatrix& atoms() const { return atoms_; }
  std::span<const double> atom(std::size_t j) const {
    return {atoms_.data() + j * dim(), dim()};
  }

  // Words keep the order in which they were added.
  void AddWord(std::string word, SparseCode code, double residual_norm);
  std::size_t num_words() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const SparseCode& code(std::size_t i) const { return codes_[i]; }
  double residual_norm(std::size_t i) const { return residual_norms_[i]; }
  std::optional<std::size_t> Find(std::string_view word) const;

  // Recomputes ||v_w - sum alpha A|| for every word from `table`.
  void RecomputeResiduals(const EmbeddingTable& table);

 private:
  RowMatrix atoms_;
  std::size_t sparsity_ = 0;
  std::vector<std::string> words_;
  std::vector<SparseCode> codes_;
  std::vector<double> residual_norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Orthogonal matching pursuit over the rows of `atoms`. Stops after
// `sparsity` selections, when the residual norm drops below 1e-10, or when no
// atom correlates with the residual. Coefficients come back in selection
// order.
SparseCode SparseCodeOmp(std::span<const double> v, const RowMatrix& atoms,
                         std::size_t sparsity);

// Least-squares coefficients of `v` on a fixed set of atoms.
SparseCode RefitSupport(std::span<const double> v, const RowMatrix& atoms,
                        const SparseCode& support);

Eigen::VectorXd Residual(std::span<const double> v, const RowMatrix& atoms,
                         const SparseCode& code);

struct FitTrace {
  // Total squared reconstruction error right after each sparse-coding step.
  std::vector<double> objective;
  int reseeded_atoms = 0;
};

// Alternates OMP coding with a per-atom least-squares dictionary update.
AtomSet FitAtoms(const EmbeddingTable& table, const DecompConfig& config,
                 FitTrace* trace = nullptr);

// (atom id, alpha) sorted by descending |alpha|, ties by atom id.
SparseCode WordAtoms(const AtomSet& set, std::string_view word);

std::vector<Neighbor> DescribeAtom(const AtomSet& set, std::size_t atom_id,
                                   const EmbeddingTable& table, std::size_t k);

// Two-column "atom | nearest words" listing.
std::string FormatAtomTable(const std::vector<std::size_t>& atom_ids,
                            const std::vector<std::vector<Neighbor>>& neighbors);

inline constexpr int kAtomFormatVersion = 1;

void SaveAtoms(const AtomSet& set, const std::string& path);
// Residual norms are filled in when `table` is given, zero otherwise.
AtomSet LoadAtoms(const std::string& path, const EmbeddingTable* table = nullptr);

}  // namespace polydef

#endif  // POLYDEF_SPARSE_DECOMP_H_
