#include "fillin/symbolic_lu.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace fillin {

namespace {

std::size_t as_size(Index i) { return static_cast<std::size_t>(i); }

// Row-id based symbolic eliminator. Rows keep their identity across swaps so
// the per-column occupancy lists never need to be rebuilt; `pos_` and `id_`
// translate between positions and identities.
class Eliminator {
 public:
  explicit Eliminator(const PatternMatrix& a)
      : n_(a.n()), rows_(a.rows()), col_rows_(as_size(a.n())), pos_(as_size(a.n())),
        id_(as_size(a.n())) {
    std::iota(pos_.begin(), pos_.end(), 0);
    std::iota(id_.begin(), id_.end(), 0);
    for (Index r = 0; r < n_; ++r)
      for (Index c : rows_[as_size(r)]) col_rows_[as_size(c)].push_back(r);
    nnz_ = static_cast<std::int64_t>(a.nnz());
  }

  /// Positions >= i whose working row has column i occupied, ascending.
  std::vector<Index> candidates(Index i) const {
    std::vector<Index> out;
    for (Index id : col_rows_[as_size(i)]) {
      const Index p = pos_[as_size(id)];
      if (p >= i) out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool occupied(Index pos, Index col) const {
    const auto& row = rows_[as_size(id_[as_size(pos)])];
    return std::binary_search(row.begin(), row.end(), col);
  }

  void check_pivot(Index i, Index j) const {
    if (j < i || j >= n_)
      throw std::invalid_argument("invalid pivot " + std::to_string(j) + " for column " +
                                  std::to_string(i));
    if (occupied(j, i)) return;
    if (!candidates(i).empty() || j != i)
      throw std::invalid_argument("pivot row " + std::to_string(j) +
                                  " has no entry in column " + std::to_string(i));
  }

  /// Returns the number of entries created by this step.
  std::int64_t eliminate(Index i, Index j) {
    check_pivot(i, j);
    std::swap(id_[as_size(i)], id_[as_size(j)]);
    pos_[as_size(id_[as_size(i)])] = i;
    pos_[as_size(id_[as_size(j)])] = j;

    const Index pivot_id = id_[as_size(i)];
    const auto& pivot_row = rows_[as_size(pivot_id)];
    const auto diag = std::lower_bound(pivot_row.begin(), pivot_row.end(), i);
    nnz_U_ += static_cast<std::int64_t>(pivot_row.end() - diag);
    const auto tail_begin = std::upper_bound(pivot_row.begin(), pivot_row.end(), i);
    tail_.assign(tail_begin, pivot_row.end());

    std::int64_t created = 0;
    // Copy: col_rows_ of later columns grows during the loop, not this one.
    const std::size_t count = col_rows_[as_size(i)].size();
    for (std::size_t t = 0; t < count; ++t) {
      const Index id = col_rows_[as_size(i)][t];
      if (pos_[as_size(id)] <= i) continue;
      ++nnz_L_;
      auto& row = rows_[as_size(id)];
      merged_.clear();
      auto a = row.begin();
      auto b = tail_.begin();
      while (a != row.end() || b != tail_.end()) {
        if (b == tail_.end() || (a != row.end() && *a < *b)) {
          merged_.push_back(*a++);
        } else if (a == row.end() || *b < *a) {
          merged_.push_back(*b);
          col_rows_[as_size(*b)].push_back(id);
          ++created;
          ++b;
        } else {
          merged_.push_back(*a++);
          ++b;
        }
      }
      row.swap(merged_);
    }
    nnz_ += created;
    return created;
  }

  std::int64_t nnz() const { return nnz_; }
  std::int64_t nnz_L() const { return nnz_L_; }
  std::int64_t nnz_U() const { return nnz_U_; }
  const std::vector<Index>& row_order() const { return id_; }

 private:
  Index n_;
  std::vector<std::vector<Index>> rows_;
  std::vector<std::vector<Index>> col_rows_;
  std::vector<Index> pos_;
  std::vector<Index> id_;
  std::vector<Index> tail_;
  std::vector<Index> merged_;
  std::int64_t nnz_ = 0;
  std::int64_t nnz_L_ = 0;
  std::int64_t nnz_U_ = 0;
};

FillReport make_report(std::int64_t nnz_L, std::int64_t nnz_U, std::int64_t nnz_a) {
  FillReport r;
  r.nnz_L = nnz_L;
  r.nnz_U = nnz_U;
  r.total = nnz_L + nnz_U;
  r.fill_in = r.total - nnz_a;
  return r;
}

template <class ChoosePivot>
SymbolicTrace run_elimination(const PatternMatrix& a, ChoosePivot choose) {
  Eliminator elim(a);
  SymbolicTrace trace;
  const Index n = a.n();
  trace.pivots.reserve(as_size(n));
  trace.created_per_step.reserve(as_size(n));
  trace.nnz_after_step.reserve(as_size(n));
  for (Index i = 0; i < n; ++i) {
    const Index j = choose(elim, i);
    trace.pivots.push_back(j);
    trace.created_per_step.push_back(elim.eliminate(i, j));
    trace.nnz_after_step.push_back(elim.nnz());
  }
  trace.report = make_report(elim.nnz_L(), elim.nnz_U(), static_cast<std::int64_t>(a.nnz()));
  trace.rows = Permutation(elim.row_order());
  return trace;
}

}  // namespace

SymbolicTrace symbolic_lu_trace(const PatternMatrix& a, std::span<const Index> pivots) {
  if (pivots.size() != as_size(a.n()))
    throw std::invalid_argument("pivot sequence length must equal n");
  return run_elimination(a, [&](const Eliminator&, Index i) { return pivots[as_size(i)]; });
}

FillReport symbolic_lu(const PatternMatrix& a, std::span<const Index> pivots) {
  return symbolic_lu_trace(a, pivots).report;
}

SymbolicTrace symbolic_lu_diagonal(const PatternMatrix& a) {
  return run_elimination(a, [](const Eliminator& e, Index i) {
    if (e.occupied(i, i)) return i;
    const auto cand = e.candidates(i);
    return cand.empty() ? i : cand.front();
  });
}

FillReport apply_and_factor(const PatternMatrix& a, const Permutation& p) {
  return symbolic_lu_diagonal(permute_rows(a, p)).report;
}

FillReport apply_and_factor(const CsrMatrix& a, const Permutation& p) {
  return apply_and_factor(pattern_of(a), p);
}

FillReport apply_and_factor(const PatternMatrix& a, const Permutation& rows,
                            const Permutation& cols) {
  return symbolic_lu_diagonal(permute(a, rows, cols)).report;
}

// ---------------------------------------------------------------------------

DenseOracleReport dense_lu_oracle(const CsrMatrix& a, std::span<const Index> pivots,
                                  double cancel_tolerance) {
  const Index n = a.n();
  if (n > 64) throw std::invalid_argument("dense_lu_oracle is limited to n <= 64");
  if (pivots.size() != as_size(n)) throw std::invalid_argument("pivot sequence length must equal n");
  const auto un = as_size(n);
  std::vector<double> m(un * un, 0.0);
  auto at = [&](Index r, Index c) -> double& { return m[as_size(r) * un + as_size(c)]; };
  for (Index r = 0; r < n; ++r) {
    const auto cols = a.row_cols(r);
    const auto vals = a.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) at(r, cols[k]) = vals[k];
  }
  auto nonzero = [&](double v) { return std::abs(v) > cancel_tolerance; };

  DenseOracleReport out;
  for (Index i = 0; i < n; ++i) {
    const Index j = pivots[as_size(i)];
    if (j < i || j >= n) throw std::invalid_argument("invalid pivot in dense oracle");
    bool any_below = false;
    for (Index k = i; k < n; ++k) any_below = any_below || nonzero(at(k, i));
    if (!nonzero(at(j, i)) && (any_below || j != i)) {
      // Structurally expected pivot vanished numerically.
      ++out.cancellation_events;
      if (j != i)
        for (Index c = 0; c < n; ++c) std::swap(at(i, c), at(j, c));
      continue;
    }
    if (j != i)
      for (Index c = 0; c < n; ++c) std::swap(at(i, c), at(j, c));
    if (!nonzero(at(i, i))) continue;
    const double pivot = at(i, i);
    for (Index k = i + 1; k < n; ++k) {
      if (!nonzero(at(k, i))) {
        at(k, i) = 0.0;
        continue;
      }
      const double mult = at(k, i) / pivot;
      at(k, i) = mult;
      for (Index c = i + 1; c < n; ++c) at(k, c) -= mult * at(i, c);
    }
  }

  std::int64_t nnz_L = 0, nnz_U = 0;
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      if (nonzero(at(r, c))) (c < r ? nnz_L : nnz_U) += 1;
  std::int64_t nnz_a = 0;
  for (double v : a.values()) nnz_a += nonzero(v) ? 1 : 0;
  out.report = make_report(nnz_L, nnz_U, nnz_a);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// n <= 8: row r occupies bits [8r, 8r + 8), column c is bit c of that byte.
using Board = std::uint64_t;

constexpr Board row_bits(Board b, Index r) { return (b >> (8 * r)) & 0xFFu; }

Board swap_rows(Board b, Index i, Index j) {
  if (i == j) return b;
  const Board ri = row_bits(b, i), rj = row_bits(b, j);
  b &= ~((Board{0xFF} << (8 * i)) | (Board{0xFF} << (8 * j)));
  return b | (ri << (8 * j)) | (rj << (8 * i));
}

class BruteForce {
 public:
  explicit BruteForce(Index n) : n_(n), memo_(as_size(n) + 1) {}

  std::vector<Index> legal(Board b, Index i) const {
    std::vector<Index> out;
    for (Index k = i; k < n_; ++k)
      if ((row_bits(b, k) >> i) & 1u) out.push_back(k);
    if (out.empty()) out.push_back(i);
    return out;
  }

  /// Applies pivot j at column i; returns the new board and the created count.
  std::pair<Board, int> step(Board b, Index i, Index j) const {
    b = swap_rows(b, i, j);
    const Board tail = row_bits(b, i) & ~((Board{2} << i) - 1);
    int created = 0;
    for (Index k = i + 1; k < n_; ++k) {
      const Board row = row_bits(b, k);
      if (!((row >> i) & 1u)) continue;
      const Board added = tail & ~row;
      created += std::popcount(added);
      b |= added << (8 * k);
    }
    return {b, created};
  }

  Board key(Board b, Index i) const {
    // Only rows >= i and columns >= i influence the remaining cost.
    Board mask = 0;
    const Board colmask = 0xFFu & ~((Board{1} << i) - 1);
    for (Index r = i; r < n_; ++r) mask |= colmask << (8 * r);
    return b & mask;
  }

  int best(Board b, Index i) {
    if (i == n_) return 0;
    const Board k = key(b, i);
    auto& table = memo_[as_size(i)];
    if (const auto it = table.find(k); it != table.end()) return it->second;
    int result = std::numeric_limits<int>::max();
    for (Index j : legal(b, i)) {
      const auto [next, created] = step(b, i, j);
      result = std::min(result, created + best(next, i + 1));
    }
    table.emplace(k, result);
    return result;
  }

 private:
  Index n_;
  std::vector<std::unordered_map<Board, int>> memo_;
};

}  // namespace

OptimalFill optimal_fill_bruteforce(const PatternMatrix& a) {
  const Index n = a.n();
  if (n > kBruteForceMaxN)
    throw std::invalid_argument("optimal_fill_bruteforce supports n <= 8, got " + std::to_string(n));
  Board board = 0;
  for (Index r = 0; r < n; ++r)
    for (Index c : a.row(r)) board |= Board{1} << (8 * r + c);

  BruteForce search(n);
  const int optimum = search.best(board, 0);

  OptimalFill out;
  Board b = board;
  int remaining = optimum;
  for (Index i = 0; i < n; ++i) {
    for (Index j : search.legal(b, i)) {
      const auto [next, created] = search.step(b, i, j);
      if (created + search.best(next, i + 1) == remaining) {
        out.pivots.push_back(j);
        remaining -= created;
        b = next;
        break;
      }
    }
  }
  out.report = symbolic_lu(a, out.pivots);
  return out;
}

}  // namespace fillin
