#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fillin/sparse.hpp"

namespace fillin {

/// Structural factor counts. L's unit diagonal is not counted, U's diagonal
/// is, so `total` is the nnz of the combined in-place factor array.
struct FillReport {
  std::int64_t nnz_L = 0;
  std::int64_t nnz_U = 0;
  std::int64_t total = 0;
  std::int64_t fill_in = 0;

  friend bool operator==(const FillReport&, const FillReport&) = default;
};

/// pivots[i] is the working-row position swapped into position i before
/// column i is eliminated.
using PivotSequence = std::vector<Index>;

struct SymbolicTrace {
  FillReport report;
  PivotSequence pivots;
  /// Entries newly created by the row unions of each step.
  std::vector<std::int64_t> created_per_step;
  /// Working nnz after each step (length n).
  std::vector<std::int64_t> nnz_after_step;
  /// Final row order: position k holds original row rows[k].
  Permutation rows;
};

/// Symbolic elimination under the given pivot sequence. Throws
/// std::invalid_argument for an invalid pivot: j < i, j >= n, or column i
/// unoccupied at row j while occupied at some other row below i.
FillReport symbolic_lu(const PatternMatrix& a, std::span<const Index> pivots);
SymbolicTrace symbolic_lu_trace(const PatternMatrix& a, std::span<const Index> pivots);

/// Diagonal-greedy pivoting: the diagonal row whenever column i is occupied
/// there, else the first occupied row below, else the column is skipped.
SymbolicTrace symbolic_lu_diagonal(const PatternMatrix& a);

/// symbolic_lu_diagonal(pattern_of(permute_rows(a, p))).
FillReport apply_and_factor(const CsrMatrix& a, const Permutation& p);
FillReport apply_and_factor(const PatternMatrix& a, const Permutation& p);
/// Row and column permutation: factors A[rows, cols].
FillReport apply_and_factor(const PatternMatrix& a, const Permutation& rows,
                            const Permutation& cols);

struct DenseOracleReport {
  FillReport report;
  /// Pivots that are structurally nonzero but numerically at or below the
  /// cancellation tolerance.
  std::int64_t cancellation_events = 0;
};

/// Literal dense Gaussian elimination with the given pivots, counting entries
/// with magnitude above `cancel_tolerance`. Intended as a test oracle for
/// symbolic_lu; limited to n <= 64.
DenseOracleReport dense_lu_oracle(const CsrMatrix& a, std::span<const Index> pivots,
                                  double cancel_tolerance = 0.0);

struct OptimalFill {
  FillReport report;
  PivotSequence pivots;
};

inline constexpr Index kBruteForceMaxN = 8;

/// Exhaustive minimum-fill search over all valid pivot sequences, memoized on
/// the trailing working pattern. n <= 8.
OptimalFill optimal_fill_bruteforce(const PatternMatrix& a);

}  // namespace fillin
