#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "fillin/sparse.hpp"
#include "fillin/tensor.hpp"

namespace fillin {

/// How the elimination game hands out rewards. PerStep pays -(entries created)
/// after every move; TerminalFraction pays nothing until the last move, then
/// -(total fill) / (zeros in the input).
enum class RewardMode { PerStep, TerminalFraction };

/// A move: the working row swapped into the pivot position.
struct ActionId {
  Index row = 0;
  friend auto operator<=>(const ActionId&, const ActionId&) = default;
};

/// Input channel 0 content: the 0/1 occupancy mask, or the tracked numeric
/// values of the working matrix (only for the masking ablation).
enum class InputEncoding { Masked, RawValues };

struct StepResult;

/// State of the elimination game: the partially eliminated pattern plus the
/// column about to be eliminated. A value type; step() returns a new state.
///
/// The pattern is stored as one bit row per matrix row. Rows < col() are
/// frozen U rows; their entries below the diagonal are L entries.
class EliminationState {
 public:
  EliminationState() = default;

  /// Throws std::invalid_argument for n = 0.
  static EliminationState new_episode(const PatternMatrix& a, RewardMode mode);
  /// Same game, additionally tracking numeric values so the state can be
  /// encoded with InputEncoding::RawValues.
  static EliminationState new_episode(const CsrMatrix& a, RewardMode mode, bool track_values);

  Index n() const { return n_; }
  Index col() const { return col_; }
  bool terminal() const { return col_ == n_; }
  RewardMode mode() const { return mode_; }

  std::int64_t l_count() const { return l_count_; }
  std::int64_t u_count() const { return u_count_; }
  std::int64_t initial_nnz() const { return initial_nnz_; }
  std::int64_t initial_zeros() const { return initial_zeros_; }
  /// Entries created so far (running fill-in).
  std::int64_t created() const { return created_; }
  std::int64_t working_nnz() const { return initial_nnz_ + created_; }

  bool occupied(Index r, Index c) const {
    return (bits_[static_cast<std::size_t>(r) * words_ + static_cast<std::size_t>(c) / 64] >>
            (c % 64)) & 1u;
  }
  /// Occupied columns > after in working row r.
  Index count_after(Index r, Index after) const;

  PatternMatrix working_pattern() const;
  /// Position k currently holds original row row_order()[k].
  const std::vector<Index>& row_order() const { return row_order_; }

  bool tracks_values() const { return !values_.empty(); }
  double value(Index r, Index c) const {
    return values_[static_cast<std::size_t>(r) * static_cast<std::size_t>(n_) +
                   static_cast<std::size_t>(c)];
  }

 private:
  friend StepResult step(const EliminationState&, ActionId);

  Index n_ = 0;
  Index col_ = 0;
  RewardMode mode_ = RewardMode::PerStep;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
  std::vector<Index> row_order_;
  std::vector<double> values_;
  std::int64_t l_count_ = 0;
  std::int64_t u_count_ = 0;
  std::int64_t initial_nnz_ = 0;
  std::int64_t initial_zeros_ = 0;
  std::int64_t created_ = 0;
};

struct StepResult {
  EliminationState next;
  double reward = 0.0;
  /// Entries created by this move's row unions.
  std::int64_t created = 0;
};

/// Rows j >= col with column col occupied, ascending; {col} when none.
/// Throws std::logic_error on a terminal state.
std::vector<ActionId> legal_actions(const EliminationState& s);
bool is_legal(const EliminationState& s, ActionId a);

/// Swap, record U row and L column, union the pivot row into every row below
/// with column col occupied, advance col. Throws std::invalid_argument for an
/// illegal action and std::logic_error on a terminal state.
StepResult step(const EliminationState& s, ActionId a);

/// 3 x N x N network input. Channel 0: occupancy (or values); channel 1: ones
/// in the current column; channel 2: ones in rows/columns already eliminated.
/// A state with n < N is encoded as if padded by pad_to_training_size and
/// advanced through the identity block. Throws std::invalid_argument if n > N.
Tensor3 encode_input(const EliminationState& s, Index N,
                     InputEncoding encoding = InputEncoding::Masked);

/// [[I_{N-n}, 0], [0, A]]. Throws std::invalid_argument if n > N.
PatternMatrix pad_to_training_size(const PatternMatrix& a, Index N);
CsrMatrix pad_to_training_size(const CsrMatrix& a, Index N);

}  // namespace fillin
