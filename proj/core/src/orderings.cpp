#include "fillin/orderings.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "fillin/elimination.hpp"
#include "fillin/mcts.hpp"
#include "fillin/network.hpp"
#include "fillin/partition.hpp"

namespace fillin {

namespace {

std::size_t as_size(Index i) { return static_cast<std::size_t>(i); }

// Adjacency lists of A + A^T without self loops.
std::vector<std::vector<Index>> adjacency(const PatternMatrix& a) {
  const PatternMatrix s = symmetrize(a);
  std::vector<std::vector<Index>> adj(as_size(a.n()));
  for (Index v = 0; v < a.n(); ++v)
    for (Index u : s.row(v))
      if (u != v) adj[as_size(v)].push_back(u);
  return adj;
}

// BFS levels from `start` over vertices allowed by `in_subset`.
std::vector<std::vector<Index>> bfs_levels(const PatternMatrix& s, Index start,
                                           const std::vector<char>& in_subset) {
  std::vector<char> seen(as_size(s.n()), 0);
  std::vector<std::vector<Index>> levels{{start}};
  seen[as_size(start)] = 1;
  while (true) {
    std::vector<Index> next;
    for (Index v : levels.back())
      for (Index u : s.row(v)) {
        if (seen[as_size(u)] || (!in_subset.empty() && !in_subset[as_size(u)])) continue;
        seen[as_size(u)] = 1;
        next.push_back(u);
      }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    levels.push_back(std::move(next));
  }
  return levels;
}

Index degree_in(const PatternMatrix& s, Index v, const std::vector<char>& in_subset) {
  Index d = 0;
  for (Index u : s.row(v))
    if (u != v && (in_subset.empty() || in_subset[as_size(u)])) ++d;
  return d;
}

}  // namespace

std::string_view to_string(OrderingMethod m) {
  switch (m) {
    case OrderingMethod::Naive: return "naive";
    case OrderingMethod::Random: return "random";
    case OrderingMethod::MinimumDegree: return "mindeg";
    case OrderingMethod::ReverseCuthillMcKee: return "rcm";
    case OrderingMethod::Learned: return "learned";
  }
  return "unknown";
}

std::optional<OrderingMethod> parse_ordering_method(std::string_view name) {
  for (auto m : {OrderingMethod::Naive, OrderingMethod::Random, OrderingMethod::MinimumDegree,
                 OrderingMethod::ReverseCuthillMcKee, OrderingMethod::Learned})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Minimum degree on a quotient graph. Each eliminated vertex becomes an
// element whose boundary is its reach set; elements adjacent to the pivot are
// absorbed into the new one. The degree of a variable is the size of the
// union of its variable neighbors and the boundaries of its elements.

Permutation min_degree_order(const PatternMatrix& a) {
  const Index n = a.n();
  std::vector<std::vector<Index>> var_adj = adjacency(a);
  std::vector<std::vector<Index>> elem_adj(as_size(n));  // element ids per variable
  std::vector<std::vector<Index>> boundary(as_size(n));  // element id == eliminated vertex id
  std::vector<char> eliminated(as_size(n), 0), absorbed(as_size(n), 0);
  std::vector<Index> mark(as_size(n), -1);
  std::vector<Index> degree(as_size(n));
  Index stamp = 0;

  std::set<std::pair<Index, Index>> queue;
  for (Index v = 0; v < n; ++v) {
    degree[as_size(v)] = static_cast<Index>(var_adj[as_size(v)].size());
    queue.insert({degree[as_size(v)], v});
  }

  auto exact_degree = [&](Index u) {
    ++stamp;
    mark[as_size(u)] = stamp;
    Index d = 0;
    auto& vars = var_adj[as_size(u)];
    std::erase_if(vars, [&](Index w) { return eliminated[as_size(w)] != 0; });
    for (Index w : vars)
      if (mark[as_size(w)] != stamp) {
        mark[as_size(w)] = stamp;
        ++d;
      }
    auto& elems = elem_adj[as_size(u)];
    std::erase_if(elems, [&](Index e) { return absorbed[as_size(e)] != 0; });
    for (Index e : elems)
      for (Index w : boundary[as_size(e)])
        if (!eliminated[as_size(w)] && mark[as_size(w)] != stamp) {
          mark[as_size(w)] = stamp;
          ++d;
        }
    return d;
  };

  std::vector<Index> order;
  order.reserve(as_size(n));
  while (!queue.empty()) {
    const Index v = queue.begin()->second;
    queue.erase(queue.begin());
    order.push_back(v);

    // Reach set of v.
    ++stamp;
    mark[as_size(v)] = stamp;
    std::vector<Index> reach;
    for (Index w : var_adj[as_size(v)])
      if (!eliminated[as_size(w)] && mark[as_size(w)] != stamp) {
        mark[as_size(w)] = stamp;
        reach.push_back(w);
      }
    for (Index e : elem_adj[as_size(v)]) {
      if (absorbed[as_size(e)]) continue;
      for (Index w : boundary[as_size(e)])
        if (!eliminated[as_size(w)] && mark[as_size(w)] != stamp) {
          mark[as_size(w)] = stamp;
          reach.push_back(w);
        }
      absorbed[as_size(e)] = 1;
      boundary[as_size(e)].clear();
    }
    eliminated[as_size(v)] = 1;
    var_adj[as_size(v)].clear();
    elem_adj[as_size(v)].clear();
    std::sort(reach.begin(), reach.end());
    boundary[as_size(v)] = reach;

    for (Index u : reach) {
      elem_adj[as_size(u)].push_back(v);
      // Variables inside the new element are reachable through it.
      auto& vars = var_adj[as_size(u)];
      std::erase_if(vars, [&](Index w) {
        return std::binary_search(reach.begin(), reach.end(), w);
      });
      queue.erase({degree[as_size(u)], u});
      degree[as_size(u)] = exact_degree(u);
      queue.insert({degree[as_size(u)], u});
    }
  }
  return Permutation(std::move(order));
}

// ---------------------------------------------------------------------------

Index pseudo_peripheral_vertex(const PatternMatrix& s, Index start,
                               const std::vector<char>& in_subset) {
  Index root = start;
  auto levels = bfs_levels(s, root, in_subset);
  for (int round = 0; round < 5; ++round) {
    const auto& last = levels.back();
    Index candidate = last.front();
    Index best_degree = degree_in(s, candidate, in_subset);
    for (Index v : last) {
      const Index d = degree_in(s, v, in_subset);
      if (d < best_degree) {
        best_degree = d;
        candidate = v;
      }
    }
    auto cand_levels = bfs_levels(s, candidate, in_subset);
    if (cand_levels.size() <= levels.size()) break;
    root = candidate;
    levels = std::move(cand_levels);
  }
  return root;
}

Permutation cuthill_mckee_order(const PatternMatrix& a) {
  const Index n = a.n();
  const PatternMatrix s = symmetrize(a);
  std::vector<Index> deg(as_size(n));
  for (Index v = 0; v < n; ++v) deg[as_size(v)] = degree_in(s, v, {});

  std::vector<char> visited(as_size(n), 0);
  std::vector<Index> order;
  order.reserve(as_size(n));
  for (Index seed = 0; seed < n; ++seed) {
    if (visited[as_size(seed)]) continue;
    const Index start = pseudo_peripheral_vertex(s, seed);
    visited[as_size(start)] = 1;
    std::size_t head = order.size();
    order.push_back(start);
    while (head < order.size()) {
      const Index v = order[head++];
      std::vector<Index> next;
      for (Index u : s.row(v))
        if (!visited[as_size(u)]) {
          visited[as_size(u)] = 1;
          next.push_back(u);
        }
      std::sort(next.begin(), next.end(), [&](Index x, Index y) {
        return deg[as_size(x)] != deg[as_size(y)] ? deg[as_size(x)] < deg[as_size(y)] : x < y;
      });
      order.insert(order.end(), next.begin(), next.end());
    }
  }
  return Permutation(std::move(order));
}

Permutation rcm_order(const PatternMatrix& a) {
  std::vector<Index> order = cuthill_mckee_order(a).map();
  std::reverse(order.begin(), order.end());
  return Permutation(std::move(order));
}

Permutation random_order(Index n, std::uint64_t seed) {
  std::vector<Index> map(as_size(n));
  std::iota(map.begin(), map.end(), 0);
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates: std::shuffle's algorithm is implementation-defined.
  for (std::size_t k = map.size(); k > 1; --k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::swap(map[k - 1], map[pick(rng)]);
  }
  return Permutation(std::move(map));
}

// ---------------------------------------------------------------------------

Permutation learned_row_order(const PatternMatrix& a, const CnnEvaluator& evaluator,
                              int simulations, double c, std::uint64_t seed) {
  if (a.n() > evaluator.params().arch().N)
    throw std::invalid_argument("matrix is larger than the network; partition it first");
  if (simulations <= 0) return greedy_policy_rollout(a, evaluator).rows;
  SearchConfig cfg;
  cfg.num_simulations = simulations;
  cfg.c = c;
  cfg.dirichlet_epsilon = 0.0;
  std::mt19937_64 rng(seed);
  return search_rollout(a, evaluator, cfg, RewardMode::PerStep, rng).rows;
}

OrderingPlan compute_ordering(const PatternMatrix& a, OrderingMethod method,
                              const OrderingOptions& opts) {
  const Index n = a.n();
  switch (method) {
    case OrderingMethod::Naive:
      return {Permutation::identity(n), Permutation::identity(n), false};
    case OrderingMethod::Random:
      return {random_order(n, opts.seed), Permutation::identity(n), false};
    case OrderingMethod::MinimumDegree: {
      Permutation p = min_degree_order(a);
      return {p, p, true};
    }
    case OrderingMethod::ReverseCuthillMcKee: {
      Permutation p = rcm_order(a);
      return {p, p, true};
    }
    case OrderingMethod::Learned: {
      if (!opts.learned) throw std::invalid_argument("learned ordering requires a checkpoint");
      const Index N = opts.learned->params().arch().N;
      const Index bound = opts.max_block > 0 ? std::min(opts.max_block, N) : N;
      if (n <= bound)
        return {learned_row_order(a, *opts.learned, opts.simulations, opts.c, opts.seed),
                Permutation::identity(n), false};
      const PartitionResult parts = partition(a, bound);
      return blockwise_order(a, parts, block_method(OrderingMethod::Learned, opts)).plan;
    }
  }
  throw std::invalid_argument("unknown ordering method");
}

OrderingResult apply_ordering(const PatternMatrix& a, OrderingMethod method,
                              const OrderingOptions& opts) {
  OrderingResult r{compute_ordering(a, method, opts), {}};
  r.fill = apply_and_factor(a, r.plan.rows, r.plan.cols);
  return r;
}

OrderingResult apply_ordering(const CsrMatrix& a, OrderingMethod method,
                              const OrderingOptions& opts) {
  return apply_ordering(pattern_of(a), method, opts);
}

}  // namespace fillin
