#include "fillin/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fillin {

namespace {

std::size_t as_size(Index i) { return static_cast<std::size_t>(i); }

void check_square_dim(Index n) {
  if (n < 0) throw std::invalid_argument("matrix dimension must be non-negative");
}

}  // namespace

// ---------------------------------------------------------------------------
// CsrMatrix

CsrMatrix::CsrMatrix(Index n, std::vector<Index> row_starts, std::vector<Index> col_indices,
                     std::vector<double> values) {
  check_square_dim(n);
  if (row_starts.size() != as_size(n) + 1 || row_starts.front() != 0)
    throw std::invalid_argument("row_starts must have length n+1 and start at 0");
  if (col_indices.size() != values.size() ||
      as_size(row_starts.back()) != col_indices.size())
    throw std::invalid_argument("row_starts[n] must equal the number of stored entries");
  for (Index r = 0; r < n; ++r) {
    const Index begin = row_starts[as_size(r)];
    const Index end = row_starts[as_size(r) + 1];
    if (end < begin) throw std::invalid_argument("row_starts must be non-decreasing");
    for (Index k = begin; k < end; ++k) {
      const Index c = col_indices[as_size(k)];
      if (c < 0 || c >= n) throw std::invalid_argument("column index out of range");
      if (k > begin && col_indices[as_size(k) - 1] >= c)
        throw std::invalid_argument("column indices must be strictly increasing per row");
    }
  }

  n_ = n;
  row_starts_.assign(as_size(n) + 1, 0);
  col_indices_.reserve(col_indices.size());
  values_.reserve(values.size());
  for (Index r = 0; r < n; ++r) {
    for (Index k = row_starts[as_size(r)]; k < row_starts[as_size(r) + 1]; ++k) {
      if (values[as_size(k)] == 0.0) continue;
      col_indices_.push_back(col_indices[as_size(k)]);
      values_.push_back(values[as_size(k)]);
    }
    row_starts_[as_size(r) + 1] = static_cast<Index>(col_indices_.size());
  }
}

CsrMatrix CsrMatrix::from_triplets(Index n, std::span<const Triplet> triplets) {
  check_square_dim(n);
  std::vector<Triplet> sorted(triplets.begin(), triplets.end());
  for (const auto& t : sorted) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw std::invalid_argument("triplet index out of range");
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  std::vector<Index> starts(as_size(n) + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (std::size_t k = 0; k < sorted.size();) {
    const Triplet& t = sorted[k];
    double sum = 0.0;
    std::size_t j = k;
    for (; j < sorted.size() && sorted[j].row == t.row && sorted[j].col == t.col; ++j)
      sum += sorted[j].value;
    cols.push_back(t.col);
    vals.push_back(sum);
    ++starts[as_size(t.row) + 1];
    k = j;
  }
  std::partial_sum(starts.begin(), starts.end(), starts.begin());
  return CsrMatrix(n, std::move(starts), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::identity(Index n) {
  check_square_dim(n);
  std::vector<Index> starts(as_size(n) + 1);
  std::iota(starts.begin(), starts.end(), 0);
  std::vector<Index> cols(as_size(n));
  std::iota(cols.begin(), cols.end(), 0);
  return CsrMatrix(n, std::move(starts), std::move(cols), std::vector<double>(as_size(n), 1.0));
}

std::span<const Index> CsrMatrix::row_cols(Index r) const {
  const auto b = as_size(row_starts_[as_size(r)]);
  const auto e = as_size(row_starts_[as_size(r) + 1]);
  return std::span<const Index>(col_indices_).subspan(b, e - b);
}

std::span<const double> CsrMatrix::row_values(Index r) const {
  const auto b = as_size(row_starts_[as_size(r)]);
  const auto e = as_size(row_starts_[as_size(r) + 1]);
  return std::span<const double>(values_).subspan(b, e - b);
}

double CsrMatrix::at(Index r, Index c) const {
  const auto cols = row_cols(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

// ---------------------------------------------------------------------------
// PatternMatrix

PatternMatrix::PatternMatrix(Index n, std::vector<std::vector<Index>> rows) {
  check_square_dim(n);
  if (rows.size() != as_size(n)) throw std::invalid_argument("pattern must have n rows");
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    if (!row.empty() && (row.front() < 0 || row.back() >= n))
      throw std::invalid_argument("pattern column index out of range");
  }
  rows_ = std::move(rows);
}

PatternMatrix PatternMatrix::identity(Index n) {
  PatternMatrix p(n);
  for (Index i = 0; i < n; ++i) p.rows_[as_size(i)].push_back(i);
  return p;
}

PatternMatrix PatternMatrix::dense(Index n) {
  PatternMatrix p(n);
  for (auto& row : p.rows_) {
    row.resize(as_size(n));
    std::iota(row.begin(), row.end(), 0);
  }
  return p;
}

std::size_t PatternMatrix::nnz() const {
  std::size_t total = 0;
  for (const auto& row : rows_) total += row.size();
  return total;
}

bool PatternMatrix::contains(Index r, Index c) const {
  const auto& row = rows_[as_size(r)];
  return std::binary_search(row.begin(), row.end(), c);
}

void PatternMatrix::insert(Index r, Index c) {
  if (r < 0 || r >= n() || c < 0 || c >= n()) throw std::out_of_range("pattern index out of range");
  auto& row = rows_[as_size(r)];
  const auto it = std::lower_bound(row.begin(), row.end(), c);
  if (it == row.end() || *it != c) row.insert(it, c);
}

PatternMatrix PatternMatrix::transpose() const {
  PatternMatrix t(n());
  for (Index r = 0; r < n(); ++r)
    for (Index c : rows_[as_size(r)]) t.rows_[as_size(c)].push_back(r);
  return t;
}

// ---------------------------------------------------------------------------
// Permutation

bool is_bijection(std::span<const Index> map) {
  std::vector<bool> seen(map.size(), false);
  for (Index v : map) {
    if (v < 0 || as_size(v) >= map.size() || seen[as_size(v)]) return false;
    seen[as_size(v)] = true;
  }
  return true;
}

Permutation::Permutation(std::vector<Index> map) : map_(std::move(map)) {
  if (!is_bijection(map_)) throw std::invalid_argument("permutation is not a bijection");
}

Permutation Permutation::identity(Index n) {
  std::vector<Index> map(as_size(n));
  std::iota(map.begin(), map.end(), 0);
  return Permutation(std::move(map));
}

Permutation Permutation::inverse() const {
  std::vector<Index> inv(map_.size());
  for (std::size_t k = 0; k < map_.size(); ++k) inv[as_size(map_[k])] = static_cast<Index>(k);
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  if (other.n() != n()) throw std::invalid_argument("permutation size mismatch");
  std::vector<Index> out(map_.size());
  for (std::size_t k = 0; k < map_.size(); ++k) out[k] = map_[as_size(other.map_[k])];
  return Permutation(std::move(out));
}

// ---------------------------------------------------------------------------
// Free functions

PatternMatrix pattern_of(const CsrMatrix& m, double zero_tolerance) {
  if (zero_tolerance < 0.0) throw std::invalid_argument("zero_tolerance must be >= 0");
  std::vector<std::vector<Index>> rows(as_size(m.n()));
  for (Index r = 0; r < m.n(); ++r) {
    const auto cols = m.row_cols(r);
    const auto vals = m.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (std::abs(vals[k]) > zero_tolerance) rows[as_size(r)].push_back(cols[k]);
  }
  return PatternMatrix(m.n(), std::move(rows));
}

PatternMatrix permute_rows(const PatternMatrix& m, const Permutation& p) {
  if (p.n() != m.n()) throw std::invalid_argument("permute_rows: dimension mismatch");
  std::vector<std::vector<Index>> rows(as_size(m.n()));
  for (Index k = 0; k < m.n(); ++k) rows[as_size(k)] = m.row(p[k]);
  return PatternMatrix(m.n(), std::move(rows));
}

CsrMatrix permute_rows(const CsrMatrix& m, const Permutation& p) {
  if (p.n() != m.n()) throw std::invalid_argument("permute_rows: dimension mismatch");
  std::vector<Index> starts{0};
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(m.nnz());
  vals.reserve(m.nnz());
  for (Index k = 0; k < m.n(); ++k) {
    const auto rc = m.row_cols(p[k]);
    const auto rv = m.row_values(p[k]);
    cols.insert(cols.end(), rc.begin(), rc.end());
    vals.insert(vals.end(), rv.begin(), rv.end());
    starts.push_back(static_cast<Index>(cols.size()));
  }
  return CsrMatrix(m.n(), std::move(starts), std::move(cols), std::move(vals));
}

PatternMatrix permute(const PatternMatrix& m, const Permutation& rows, const Permutation& cols) {
  if (rows.n() != m.n() || cols.n() != m.n())
    throw std::invalid_argument("permute: dimension mismatch");
  const Permutation col_inv = cols.inverse();
  std::vector<std::vector<Index>> out(as_size(m.n()));
  for (Index k = 0; k < m.n(); ++k) {
    auto& row = out[as_size(k)];
    for (Index c : m.row(rows[k])) row.push_back(col_inv[c]);
  }
  return PatternMatrix(m.n(), std::move(out));
}

PatternMatrix permute_symmetric(const PatternMatrix& m, const Permutation& p) {
  return permute(m, p, p);
}

PatternMatrix symmetrize(const PatternMatrix& m) {
  std::vector<std::vector<Index>> rows = m.rows();
  for (Index r = 0; r < m.n(); ++r)
    for (Index c : m.row(r)) rows[as_size(c)].push_back(r);
  return PatternMatrix(m.n(), std::move(rows));
}

double sparsity(const PatternMatrix& m) {
  if (m.n() < 1) throw std::invalid_argument("sparsity of an empty matrix is undefined");
  const double total = static_cast<double>(m.n()) * static_cast<double>(m.n());
  return (total - static_cast<double>(m.nnz())) / total;
}

Index bandwidth(const PatternMatrix& m) {
  Index bw = 0;
  for (Index r = 0; r < m.n(); ++r)
    for (Index c : m.row(r)) bw = std::max(bw, r > c ? r - c : c - r);
  return bw;
}

PatternMatrix principal_submatrix(const PatternMatrix& m, std::span<const Index> vertices) {
  std::vector<Index> local(as_size(m.n()), -1);
  for (std::size_t k = 0; k < vertices.size(); ++k) local[as_size(vertices[k])] = static_cast<Index>(k);
  std::vector<std::vector<Index>> rows(vertices.size());
  for (std::size_t k = 0; k < vertices.size(); ++k)
    for (Index c : m.row(vertices[k]))
      if (local[as_size(c)] >= 0) rows[k].push_back(local[as_size(c)]);
  return PatternMatrix(static_cast<Index>(vertices.size()), std::move(rows));
}

}  // namespace fillin
