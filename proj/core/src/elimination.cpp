#include "fillin/elimination.hpp"

#include <bit>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fillin {

namespace {

std::size_t as_size(Index i) { return static_cast<std::size_t>(i); }

std::uint64_t mask_above(Index col, std::size_t word) {
  // Bits for columns strictly greater than `col` within `word`.
  const auto lo = static_cast<std::int64_t>(word) * 64;
  const std::int64_t first = static_cast<std::int64_t>(col) + 1 - lo;
  if (first <= 0) return ~std::uint64_t{0};
  if (first >= 64) return 0;
  return ~std::uint64_t{0} << first;
}

}  // namespace

EliminationState EliminationState::new_episode(const PatternMatrix& a, RewardMode mode) {
  if (a.n() == 0) throw std::invalid_argument("cannot start an episode on an empty matrix");
  EliminationState s;
  s.n_ = a.n();
  s.mode_ = mode;
  s.words_ = (as_size(a.n()) + 63) / 64;
  s.bits_.assign(as_size(a.n()) * s.words_, 0);
  for (Index r = 0; r < a.n(); ++r)
    for (Index c : a.row(r))
      s.bits_[as_size(r) * s.words_ + as_size(c) / 64] |= std::uint64_t{1} << (c % 64);
  s.row_order_.resize(as_size(a.n()));
  std::iota(s.row_order_.begin(), s.row_order_.end(), 0);
  s.initial_nnz_ = static_cast<std::int64_t>(a.nnz());
  s.initial_zeros_ = static_cast<std::int64_t>(a.n()) * a.n() - s.initial_nnz_;
  return s;
}

EliminationState EliminationState::new_episode(const CsrMatrix& a, RewardMode mode,
                                               bool track_values) {
  EliminationState s = new_episode(pattern_of(a), mode);
  if (track_values) {
    s.values_.assign(as_size(a.n()) * as_size(a.n()), 0.0);
    for (Index r = 0; r < a.n(); ++r) {
      const auto cols = a.row_cols(r);
      const auto vals = a.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k)
        s.values_[as_size(r) * as_size(a.n()) + as_size(cols[k])] = vals[k];
    }
  }
  return s;
}

Index EliminationState::count_after(Index r, Index after) const {
  Index count = 0;
  const std::uint64_t* row = &bits_[as_size(r) * words_];
  for (std::size_t w = 0; w < words_; ++w) count += std::popcount(row[w] & mask_above(after, w));
  return count;
}

PatternMatrix EliminationState::working_pattern() const {
  std::vector<std::vector<Index>> rows(as_size(n_));
  for (Index r = 0; r < n_; ++r)
    for (Index c = 0; c < n_; ++c)
      if (occupied(r, c)) rows[as_size(r)].push_back(c);
  return PatternMatrix(n_, std::move(rows));
}

std::vector<ActionId> legal_actions(const EliminationState& s) {
  if (s.terminal()) throw std::logic_error("legal_actions called on a terminal state");
  std::vector<ActionId> out;
  for (Index j = s.col(); j < s.n(); ++j)
    if (s.occupied(j, s.col())) out.push_back({j});
  if (out.empty()) out.push_back({s.col()});
  return out;
}

bool is_legal(const EliminationState& s, ActionId a) {
  if (s.terminal() || a.row < s.col() || a.row >= s.n()) return false;
  if (s.occupied(a.row, s.col())) return true;
  if (a.row != s.col()) return false;
  for (Index j = s.col(); j < s.n(); ++j)
    if (s.occupied(j, s.col())) return false;
  return true;
}

StepResult step(const EliminationState& s, ActionId a) {
  if (s.terminal()) throw std::logic_error("step called on a terminal state");
  if (!is_legal(s, a))
    throw std::invalid_argument("illegal action: row " + std::to_string(a.row) + " at column " +
                                std::to_string(s.col()));
  StepResult out{s, 0.0, 0};
  EliminationState& t = out.next;
  const Index i = s.col_;
  const Index n = s.n_;
  const std::size_t W = t.words_;

  if (a.row != i) {
    std::swap_ranges(t.bits_.begin() + static_cast<std::ptrdiff_t>(as_size(i) * W),
                     t.bits_.begin() + static_cast<std::ptrdiff_t>(as_size(i) * W + W),
                     t.bits_.begin() + static_cast<std::ptrdiff_t>(as_size(a.row) * W));
    std::swap(t.row_order_[as_size(i)], t.row_order_[as_size(a.row)]);
    if (t.tracks_values())
      std::swap_ranges(t.values_.begin() + static_cast<std::ptrdiff_t>(as_size(i) * as_size(n)),
                       t.values_.begin() + static_cast<std::ptrdiff_t>(as_size(i + 1) * as_size(n)),
                       t.values_.begin() + static_cast<std::ptrdiff_t>(as_size(a.row) * as_size(n)));
  }

  const std::uint64_t* pivot = &t.bits_[as_size(i) * W];
  t.u_count_ += t.count_after(i, i - 1);

  std::int64_t created = 0;
  const std::size_t col_word = as_size(i) / 64;
  const std::uint64_t col_bit = std::uint64_t{1} << (i % 64);
  for (Index k = i + 1; k < n; ++k) {
    std::uint64_t* row = &t.bits_[as_size(k) * W];
    if (!(row[col_word] & col_bit)) continue;
    ++t.l_count_;
    for (std::size_t w = col_word; w < W; ++w) {
      const std::uint64_t tail = pivot[w] & mask_above(i, w);
      created += std::popcount(tail & ~row[w]);
      row[w] |= tail;
    }
    if (t.tracks_values()) {
      double* vals = t.values_.data();
      const double p = vals[as_size(i) * as_size(n) + as_size(i)];
      if (p != 0.0) {
        const double mult = vals[as_size(k) * as_size(n) + as_size(i)] / p;
        vals[as_size(k) * as_size(n) + as_size(i)] = mult;
        for (Index c = i + 1; c < n; ++c)
          vals[as_size(k) * as_size(n) + as_size(c)] -= mult * vals[as_size(i) * as_size(n) + as_size(c)];
      }
    }
  }

  t.created_ += created;
  t.col_ += 1;
  out.created = created;
  if (s.mode_ == RewardMode::PerStep) {
    out.reward = -static_cast<double>(created);
  } else if (t.terminal() && t.initial_zeros_ > 0) {
    out.reward = -static_cast<double>(t.created_) / static_cast<double>(t.initial_zeros_);
  }
  return out;
}

Tensor3 encode_input(const EliminationState& s, Index N, InputEncoding encoding) {
  const Index n = s.n();
  if (n > N)
    throw std::invalid_argument("state dimension " + std::to_string(n) +
                                " exceeds network size " + std::to_string(N));
  if (encoding == InputEncoding::RawValues && !s.tracks_values())
    throw std::invalid_argument("raw-value encoding requires a value-tracking state");
  const Index offset = N - n;
  const Index col = s.col() + offset;
  Tensor3 t(3, N, N);
  for (Index d = 0; d < offset; ++d) t.at(0, d, d) = 1.0;
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      if (s.occupied(r, c))
        t.at(0, r + offset, c + offset) = encoding == InputEncoding::Masked ? 1.0 : s.value(r, c);
  if (!s.terminal())
    for (Index r = 0; r < N; ++r) t.at(1, r, col) = 1.0;
  for (Index r = 0; r < N; ++r)
    for (Index c = 0; c < N; ++c)
      if (r < col || c < col) t.at(2, r, c) = 1.0;
  return t;
}

PatternMatrix pad_to_training_size(const PatternMatrix& a, Index N) {
  if (a.n() > N) throw std::invalid_argument("matrix larger than the training size");
  const Index offset = N - a.n();
  std::vector<std::vector<Index>> rows(as_size(N));
  for (Index d = 0; d < offset; ++d) rows[as_size(d)].push_back(d);
  for (Index r = 0; r < a.n(); ++r)
    for (Index c : a.row(r)) rows[as_size(r + offset)].push_back(c + offset);
  return PatternMatrix(N, std::move(rows));
}

CsrMatrix pad_to_training_size(const CsrMatrix& a, Index N) {
  if (a.n() > N) throw std::invalid_argument("matrix larger than the training size");
  const Index offset = N - a.n();
  std::vector<CsrMatrix::Triplet> trip;
  trip.reserve(a.nnz() + as_size(offset));
  for (Index d = 0; d < offset; ++d) trip.push_back({d, d, 1.0});
  for (Index r = 0; r < a.n(); ++r) {
    const auto cols = a.row_cols(r);
    const auto vals = a.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) trip.push_back({r + offset, cols[k] + offset, vals[k]});
  }
  return CsrMatrix::from_triplets(N, trip);
}

}  // namespace fillin
