#pragma once

#include <functional>
#include <vector>

#include "fillin/orderings.hpp"
#include "fillin/sparse.hpp"
#include "fillin/symbolic_lu.hpp"

namespace fillin {

inline constexpr Index kDefaultMaxBlockSize = 500;

struct PartitionResult {
  /// block_of[v] is the block id of vertex v.
  std::vector<Index> block_of;
  /// blocks[b] lists the vertices of block b, ascending. Blocks appear in
  /// layout order.
  std::vector<std::vector<Index>> blocks;
  Index max_block_size = 0;
};

/// Recursive BFS bisection of the graph of A + A^T: connected components are
/// separated first, then any part larger than `max_block_size` is cut in half
/// along a breadth-first order from a pseudo-peripheral vertex. Deterministic.
/// Throws std::invalid_argument when max_block_size < 1.
PartitionResult partition(const PatternMatrix& a, Index max_block_size = kDefaultMaxBlockSize);

/// Throws std::logic_error unless `p` is a disjoint cover of [0, n) that
/// respects its size bound.
void validate_partition(const PartitionResult& p, Index n);

/// Ordering for one diagonal block (its principal submatrix, local indices).
using BlockOrdering = std::function<OrderingPlan(const PatternMatrix&)>;

/// Lays the blocks out along the diagonal and orders each one with
/// `per_block`; inter-block entries stay in the matrix and are counted.
OrderingResult blockwise_order(const PatternMatrix& a, const PartitionResult& parts,
                               const BlockOrdering& per_block);

/// Per-block ordering by a fixed method.
BlockOrdering block_method(OrderingMethod method, const OrderingOptions& opts = {});

}  // namespace fillin
