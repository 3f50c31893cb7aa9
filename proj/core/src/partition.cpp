#include "fillin/partition.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace fillin {

namespace {

std::size_t as_size(Index i) { return static_cast<std::size_t>(i); }

// Connected components of the subgraph induced by `vertices` (ascending),
// each returned ascending and ordered by smallest vertex.
std::vector<std::vector<Index>> components(const PatternMatrix& s,
                                           const std::vector<Index>& vertices,
                                           std::vector<char>& in_subset) {
  for (Index v : vertices) in_subset[as_size(v)] = 1;
  std::vector<char> seen(as_size(s.n()), 0);
  std::vector<std::vector<Index>> out;
  for (Index root : vertices) {
    if (seen[as_size(root)]) continue;
    std::vector<Index> comp{root};
    seen[as_size(root)] = 1;
    for (std::size_t head = 0; head < comp.size(); ++head)
      for (Index u : s.row(comp[head]))
        if (in_subset[as_size(u)] && !seen[as_size(u)]) {
          seen[as_size(u)] = 1;
          comp.push_back(u);
        }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  for (Index v : vertices) in_subset[as_size(v)] = 0;
  return out;
}

// Breadth-first order of a connected vertex set from a pseudo-peripheral vertex.
std::vector<Index> bfs_order(const PatternMatrix& s, const std::vector<Index>& comp,
                             std::vector<char>& in_subset) {
  for (Index v : comp) in_subset[as_size(v)] = 1;
  const Index start = pseudo_peripheral_vertex(s, comp.front(), in_subset);
  std::vector<char> seen(as_size(s.n()), 0);
  std::vector<Index> order{start};
  seen[as_size(start)] = 1;
  for (std::size_t head = 0; head < order.size(); ++head)
    for (Index u : s.row(order[head]))
      if (in_subset[as_size(u)] && !seen[as_size(u)]) {
        seen[as_size(u)] = 1;
        order.push_back(u);
      }
  for (Index v : comp) in_subset[as_size(v)] = 0;
  return order;
}

void split(const PatternMatrix& s, std::vector<Index> vertices, Index max_block,
           std::vector<char>& in_subset, std::vector<std::vector<Index>>& blocks) {
  for (auto& comp : components(s, vertices, in_subset)) {
    if (static_cast<Index>(comp.size()) <= max_block) {
      blocks.push_back(std::move(comp));
      continue;
    }
    const std::vector<Index> order = bfs_order(s, comp, in_subset);
    const std::size_t half = (order.size() + 1) / 2;
    std::vector<Index> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<Index> second(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    split(s, std::move(first), max_block, in_subset, blocks);
    split(s, std::move(second), max_block, in_subset, blocks);
  }
}

}  // namespace

PartitionResult partition(const PatternMatrix& a, Index max_block_size) {
  if (max_block_size < 1) throw std::invalid_argument("max_block_size must be >= 1");
  const PatternMatrix s = symmetrize(a);
  std::vector<Index> all(as_size(a.n()));
  for (Index v = 0; v < a.n(); ++v) all[as_size(v)] = v;

  PartitionResult result;
  result.max_block_size = max_block_size;
  std::vector<char> in_subset(as_size(a.n()), 0);
  if (a.n() <= max_block_size) {
    if (a.n() > 0) result.blocks.push_back(all);
  } else {
    split(s, all, max_block_size, in_subset, result.blocks);
  }
  result.block_of.assign(as_size(a.n()), -1);
  for (std::size_t b = 0; b < result.blocks.size(); ++b)
    for (Index v : result.blocks[b]) result.block_of[as_size(v)] = static_cast<Index>(b);
  validate_partition(result, a.n());
  return result;
}

void validate_partition(const PartitionResult& p, Index n) {
  if (p.block_of.size() != as_size(n)) throw std::logic_error("partition does not cover every vertex");
  std::vector<char> seen(as_size(n), 0);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    if (p.blocks[b].empty() || static_cast<Index>(p.blocks[b].size()) > p.max_block_size)
      throw std::logic_error("partition block " + std::to_string(b) + " violates the size bound");
    for (Index v : p.blocks[b]) {
      if (v < 0 || v >= n || seen[as_size(v)]) throw std::logic_error("partition blocks overlap");
      if (p.block_of[as_size(v)] != static_cast<Index>(b))
        throw std::logic_error("partition block_of is inconsistent");
      seen[as_size(v)] = 1;
    }
  }
  for (char c : seen)
    if (!c) throw std::logic_error("partition does not cover every vertex");
}

OrderingResult blockwise_order(const PatternMatrix& a, const PartitionResult& parts,
                               const BlockOrdering& per_block) {
  validate_partition(parts, a.n());
  std::vector<Index> rows, cols;
  rows.reserve(as_size(a.n()));
  cols.reserve(as_size(a.n()));
  bool symmetric = true;
  for (const auto& block : parts.blocks) {
    const PatternMatrix sub = principal_submatrix(a, block);
    const OrderingPlan local = per_block(sub);
    if (local.rows.n() != sub.n() || local.cols.n() != sub.n())
      throw std::logic_error("block ordering returned a permutation of the wrong size");
    symmetric = symmetric && local.symmetric;
    for (Index k = 0; k < sub.n(); ++k) {
      rows.push_back(block[as_size(local.rows[k])]);
      cols.push_back(block[as_size(local.cols[k])]);
    }
  }
  OrderingResult r{{Permutation(std::move(rows)), Permutation(std::move(cols)), symmetric}, {}};
  r.fill = apply_and_factor(a, r.plan.rows, r.plan.cols);
  return r;
}

BlockOrdering block_method(OrderingMethod method, const OrderingOptions& opts) {
  return [method, opts](const PatternMatrix& sub) {
    OrderingOptions local = opts;
    // A block never needs further partitioning.
    local.max_block = 0;
    return compute_ordering(sub, method, local);
  };
}

}  // namespace fillin
