#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fillin/sparse.hpp"
#include "fillin/symbolic_lu.hpp"

namespace fillin {

class CnnEvaluator;

enum class OrderingMethod { Naive, Random, MinimumDegree, ReverseCuthillMcKee, Learned };

std::string_view to_string(OrderingMethod m);
/// Accepts the CLI spellings: naive, random, mindeg, rcm, learned.
std::optional<OrderingMethod> parse_ordering_method(std::string_view name);

/// Exact minimum-degree elimination order on the graph of A + A^T, using a
/// quotient graph so degrees are exact after every elimination. Ties go to the
/// lowest vertex. Entry k is the k-th eliminated vertex.
Permutation min_degree_order(const PatternMatrix& a);

/// Cuthill-McKee order of the graph of A + A^T: each component (in order of
/// its smallest vertex) is traversed breadth-first from a pseudo-peripheral
/// vertex, visiting neighbors by increasing degree.
Permutation cuthill_mckee_order(const PatternMatrix& a);
/// Reverse of cuthill_mckee_order.
Permutation rcm_order(const PatternMatrix& a);

/// George-Liu pseudo-peripheral vertex search starting at `start`, restricted
/// to vertices with in_subset[v] (all when empty). At most 5 rounds.
Index pseudo_peripheral_vertex(const PatternMatrix& symmetric, Index start,
                               const std::vector<char>& in_subset = {});

Permutation random_order(Index n, std::uint64_t seed);

/// Rows and columns of the reordered matrix A[rows, cols]. Row-only methods
/// leave `cols` as the identity; symmetric heuristics set cols = rows.
struct OrderingPlan {
  Permutation rows;
  Permutation cols;
  bool symmetric = false;
};

struct OrderingOptions {
  std::uint64_t seed = 0;
  /// Required for Learned.
  const CnnEvaluator* learned = nullptr;
  /// Block bound for the partitioned learned path; the network size when 0.
  Index max_block = 0;
  /// Tree-search simulations per move for Learned; 0 plays the greedy policy.
  int simulations = 0;
  /// Exploration constant for those searches (no root noise).
  double c = 1.0;
};

/// Computes the permutation for `method`. Learned plays the network policy
/// (greedy, or searched with opts.simulations) on the padded matrix; matrices larger than the network (or than
/// max_block) are partitioned first and ordered block by block.
/// Throws std::invalid_argument for Learned without an evaluator.
OrderingPlan compute_ordering(const PatternMatrix& a, OrderingMethod method,
                              const OrderingOptions& opts = {});

struct OrderingResult {
  OrderingPlan plan;
  FillReport fill;
};

/// compute_ordering followed by apply_and_factor on A[rows, cols].
OrderingResult apply_ordering(const PatternMatrix& a, OrderingMethod method,
                              const OrderingOptions& opts = {});
OrderingResult apply_ordering(const CsrMatrix& a, OrderingMethod method,
                              const OrderingOptions& opts = {});

/// Row permutation chosen by the learned policy for a matrix no larger than
/// the network: greedy when `simulations` is 0, otherwise a network-guided
/// search per move seeded by `seed`.
Permutation learned_row_order(const PatternMatrix& a, const CnnEvaluator& evaluator,
                              int simulations = 0, double c = 1.0, std::uint64_t seed = 0);

}  // namespace fillin
