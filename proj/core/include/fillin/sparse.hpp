#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fillin {

using Index = std::int32_t;

/// Square compressed-sparse-row matrix. Column indices are strictly
/// increasing within each row and explicit zeros are never stored.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  /// Validating constructor. Throws std::invalid_argument when the arrays do
  /// not describe a well-formed square CSR matrix. Explicit zeros are dropped.
  CsrMatrix(Index n, std::vector<Index> row_starts, std::vector<Index> col_indices,
            std::vector<double> values);

  struct Triplet {
    Index row;
    Index col;
    double value;
  };

  /// Builds from unordered triplets; duplicates are summed, then zeros dropped.
  static CsrMatrix from_triplets(Index n, std::span<const Triplet> triplets);
  static CsrMatrix identity(Index n);

  Index n() const { return n_; }
  std::size_t nnz() const { return col_indices_.size(); }

  std::span<const Index> row_starts() const { return row_starts_; }
  std::span<const Index> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  std::span<const Index> row_cols(Index r) const;
  std::span<const double> row_values(Index r) const;

  /// Value at (r, c), 0 when not stored.
  double at(Index r, Index c) const;

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  Index n_ = 0;
  std::vector<Index> row_starts_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

/// Boolean sparsity structure of a square matrix.
class PatternMatrix {
 public:
  PatternMatrix() = default;
  explicit PatternMatrix(Index n) : rows_(static_cast<std::size_t>(n)) {}

  /// Each row is sorted and deduplicated; out-of-range indices throw.
  PatternMatrix(Index n, std::vector<std::vector<Index>> rows);

  static PatternMatrix identity(Index n);
  static PatternMatrix dense(Index n);

  Index n() const { return static_cast<Index>(rows_.size()); }
  std::size_t nnz() const;

  const std::vector<Index>& row(Index r) const { return rows_[static_cast<std::size_t>(r)]; }
  const std::vector<std::vector<Index>>& rows() const { return rows_; }

  bool contains(Index r, Index c) const;

  /// Inserts (r, c) keeping the row sorted. No-op if already present.
  void insert(Index r, Index c);

  PatternMatrix transpose() const;

  friend bool operator==(const PatternMatrix&, const PatternMatrix&) = default;

 private:
  std::vector<std::vector<Index>> rows_;
};

/// Row permutation: map[k] is the source row placed at position k.
class Permutation {
 public:
  Permutation() = default;
  /// Throws std::invalid_argument unless `map` is a bijection on [0, size).
  explicit Permutation(std::vector<Index> map);

  static Permutation identity(Index n);

  Index n() const { return static_cast<Index>(map_.size()); }
  Index operator[](Index k) const { return map_[static_cast<std::size_t>(k)]; }
  const std::vector<Index>& map() const { return map_; }

  Permutation inverse() const;
  /// Result[k] = this[other[k]], so that
  /// permute_rows(permute_rows(m, *this), other) == permute_rows(m, compose(other)).
  Permutation compose(const Permutation& other) const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<Index> map_;
};

bool is_bijection(std::span<const Index> map);

/// Occupied iff |value| > zero_tolerance.
PatternMatrix pattern_of(const CsrMatrix& m, double zero_tolerance = 0.0);

/// Output row k is input row p[k].
PatternMatrix permute_rows(const PatternMatrix& m, const Permutation& p);
CsrMatrix permute_rows(const CsrMatrix& m, const Permutation& p);

/// Output (k, l) is input (rows[k], cols[l]).
PatternMatrix permute(const PatternMatrix& m, const Permutation& rows, const Permutation& cols);

/// Symmetric relabeling P A P^T: output (k, l) is input (p[k], p[l]).
PatternMatrix permute_symmetric(const PatternMatrix& m, const Permutation& p);

/// Pattern of A + A^T.
PatternMatrix symmetrize(const PatternMatrix& m);

/// Fraction of zero positions, (n^2 - nnz) / n^2.
double sparsity(const PatternMatrix& m);

/// max |i - j| over occupied (i, j); 0 for an empty pattern.
Index bandwidth(const PatternMatrix& m);

/// Principal submatrix on `vertices` (in the given order).
PatternMatrix principal_submatrix(const PatternMatrix& m, std::span<const Index> vertices);

}  // namespace fillin
