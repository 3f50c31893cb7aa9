#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's elimination code.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "fillin/sparse.hpp"

namespace testsupport {

using fillin::Index;
using Dense = std::vector<std::vector<char>>;

inline Dense to_dense(const fillin::PatternMatrix& p) {
  Dense d(static_cast<std::size_t>(p.n()), std::vector<char>(static_cast<std::size_t>(p.n()), 0));
  for (Index i = 0; i < p.n(); ++i)
    for (Index j : p.row(i)) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
  return d;
}

inline fillin::PatternMatrix from_dense(const Dense& d) {
  std::vector<std::vector<Index>> rows(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j)
      if (d[i][j]) rows[i].push_back(static_cast<Index>(j));
  return fillin::PatternMatrix(static_cast<Index>(d.size()), std::move(rows));
}

struct Counts {
  std::int64_t l = 0, u = 0, total = 0, fill = 0;
  std::vector<std::int64_t> created;
};

// Boolean Gaussian elimination on a dense copy.
inline Counts dense_symbolic(const fillin::PatternMatrix& a, const std::vector<Index>& pivots) {
  Dense m = to_dense(a);
  const std::size_t n = m.size();
  Counts c;
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(m[i], m[static_cast<std::size_t>(pivots[i])]);
    std::int64_t made = 0;
    for (std::size_t k = i + 1; k < n; ++k) {
      if (!m[k][i]) continue;
      for (std::size_t j = i + 1; j < n; ++j)
        if (m[i][j] && !m[k][j]) {
          m[k][j] = 1;
          ++made;
        }
    }
    c.created.push_back(made);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (m[i][j]) (j < i ? c.l : c.u) += 1;
  c.total = c.l + c.u;
  c.fill = c.total - static_cast<std::int64_t>(a.nnz());
  return c;
}

// Valid pivots at column i of a dense working matrix.
inline std::vector<Index> dense_legal(const Dense& m, std::size_t i) {
  std::vector<Index> out;
  for (std::size_t k = i; k < m.size(); ++k)
    if (m[k][i]) out.push_back(static_cast<Index>(k));
  if (out.empty()) out.push_back(static_cast<Index>(i));
  return out;
}

// Plain exhaustive search, no memoization. Keep n <= 6.
inline std::int64_t exhaustive_min_total(const fillin::PatternMatrix& a) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<Index> pivots;
  auto rec = [&](auto&& self, Dense m, std::size_t i) -> void {
    if (i == m.size()) {
      best = std::min(best, dense_symbolic(a, pivots).total);
      return;
    }
    for (Index j : dense_legal(m, i)) {
      Dense w = m;
      std::swap(w[i], w[static_cast<std::size_t>(j)]);
      for (std::size_t k = i + 1; k < w.size(); ++k)
        if (w[k][i])
          for (std::size_t c = i + 1; c < w.size(); ++c)
            if (w[i][c]) w[k][c] = 1;
      pivots.push_back(j);
      self(self, std::move(w), i + 1);
      pivots.pop_back();
    }
  };
  rec(rec, to_dense(a), 0);
  return best;
}

// A valid pivot sequence chosen uniformly among legal moves at every step.
inline std::vector<Index> random_pivots(const fillin::PatternMatrix& a, std::mt19937_64& rng) {
  Dense m = to_dense(a);
  std::vector<Index> pivots;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto legal = dense_legal(m, i);
    std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
    const Index j = legal[pick(rng)];
    pivots.push_back(j);
    std::swap(m[i], m[static_cast<std::size_t>(j)]);
    for (std::size_t k = i + 1; k < m.size(); ++k)
      if (m[k][i])
        for (std::size_t c = i + 1; c < m.size(); ++c)
          if (m[i][c]) m[k][c] = 1;
  }
  return pivots;
}

// Each position occupied with probability `density`, plus the diagonal.
inline fillin::PatternMatrix random_pattern(Index n, double density, std::mt19937_64& rng,
                                            bool diagonal = true) {
  std::bernoulli_distribution occ(density);
  Dense d(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (auto& row : d)
    for (auto& x : row) x = occ(rng) ? 1 : 0;
  if (diagonal)
    for (std::size_t i = 0; i < d.size(); ++i) d[i][i] = 1;
  return from_dense(d);
}

inline fillin::CsrMatrix with_values(const fillin::PatternMatrix& p, std::mt19937_64& rng,
                                     double lo = 0.5, double hi = 1.5) {
  std::uniform_real_distribution<double> val(lo, hi);
  std::vector<fillin::CsrMatrix::Triplet> t;
  for (Index i = 0; i < p.n(); ++i)
    for (Index j : p.row(i)) t.push_back({i, j, val(rng)});
  return fillin::CsrMatrix::from_triplets(p.n(), t);
}

inline std::vector<Index> shuffled(Index n, std::mt19937_64& rng) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

inline fillin::PatternMatrix tridiagonal(Index n) {
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (Index j = std::max<Index>(0, i - 1); j <= std::min<Index>(n - 1, i + 1); ++j)
      rows[static_cast<std::size_t>(i)].push_back(j);
  return fillin::PatternMatrix(n, std::move(rows));
}

// Dense first row and column plus the diagonal.
inline fillin::PatternMatrix arrow(Index n) {
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) rows[0].push_back(j);
  for (Index i = 1; i < n; ++i) rows[static_cast<std::size_t>(i)] = {0, i};
  return fillin::PatternMatrix(n, std::move(rows));
}

}  // namespace testsupport
