#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fillin/elimination.hpp"
#include "fillin/evaluator.hpp"
#include "fillin/symbolic_lu.hpp"

namespace fillin {

enum class UctFormula {
  /// Q + c * P * sqrt(N_parent) / (1 + N)
  ParentVisit,
  /// Q + c * P * sqrt(N) / N, infinite for N = 0
  PaperLiteral,
};

struct SearchConfig {
  int num_simulations = 200;
  double c = 1.0;
  double gamma = 1.0;
  double dirichlet_alpha = 0.03;
  double dirichlet_epsilon = 0.25;
  UctFormula uct_formula = UctFormula::ParentVisit;
  double temperature = 0.0;
};

/// Statistics of one (state, action) edge.
struct Edge {
  ActionId action;
  std::int64_t visits = 0;     // N(S,a)
  double total = 0.0;          // W(S,a)
  double mean = 0.0;           // Q(S,a)
  double prior = 0.0;          // P(a|S) after root noise
  double raw_prior = 0.0;      // evaluator prior, before noise
  double reward = 0.0;         // r(S,a), cached on expansion
  std::int32_t child = -1;
};

struct SearchNode {
  EliminationState state;
  std::vector<Edge> edges;  // ascending by action row
  double value = 0.0;       // evaluator value at expansion

  std::int64_t visit_sum() const;
};

double uct_score(const SearchNode& node, const Edge& edge, const SearchConfig& cfg);

/// (1 - eps) * priors + eps * Dirichlet(alpha, ..., alpha) over the k entries.
std::vector<double> add_dirichlet_noise(std::span<const double> priors, const SearchConfig& cfg,
                                        std::mt19937_64& rng);

/// One step along a simulation path: the node and the index of the edge taken.
struct PathStep {
  SearchNode* node;
  std::size_t edge;
};

/// Leaf to root: G <- r + gamma * G; N += 1, W += G, Q = W / N on each edge.
void backup(std::span<const PathStep> path, double leaf_value, const SearchConfig& cfg);

struct SearchResult {
  /// pi(a | root) proportional to N(root, a); indexed by row, zero off the legal set.
  std::vector<double> visit_policy;
  /// sum_a W(root, a) / sum_a N(root, a)
  double root_value = 0.0;
};

/// Search tree that keeps its statistics when advanced to a child.
class SearchTree {
 public:
  SearchTree(const EliminationState& root, const Evaluator& evaluator, SearchConfig cfg);

  /// Runs cfg.num_simulations select/expand/evaluate/backup passes from the
  /// current root. Root priors are re-noised on every call. Throws
  /// std::invalid_argument for zero simulations or a terminal root.
  SearchResult search(std::mt19937_64& rng);

  /// Re-roots the tree at the child reached by `a` (expanding it if needed).
  void advance(ActionId a);

  const SearchNode& root() const { return nodes_[static_cast<std::size_t>(root_)]; }
  std::size_t node_count() const { return nodes_.size(); }
  const SearchConfig& config() const { return cfg_; }

 private:
  std::int32_t make_node(const EliminationState& state);
  std::size_t select_edge(const SearchNode& node) const;

  const Evaluator& evaluator_;
  SearchConfig cfg_;
  std::vector<SearchNode> nodes_;
  std::int32_t root_ = 0;
};

/// Fresh tree search from `root_state`.
SearchResult run_search(const EliminationState& root_state, const Evaluator& evaluator,
                        const SearchConfig& cfg, std::mt19937_64& rng);

/// Temperature 0: argmax (lowest row on ties). Otherwise sample
/// proportionally to pi^(1/temperature).
ActionId select_action(std::span<const double> visit_policy, double temperature,
                       std::mt19937_64& rng);

struct RolloutResult {
  Permutation rows;
  PivotSequence pivots;
  FillReport fill;
};

/// Plays one episode choosing the evaluator's highest legal prior at each
/// step (no search). Ties go to the lowest row.
RolloutResult greedy_policy_rollout(const PatternMatrix& a, const Evaluator& evaluator);
/// As above on a valued matrix; `track_values` lets value-encoded evaluators see
/// the numeric working matrix.
RolloutResult greedy_policy_rollout(const CsrMatrix& a, const Evaluator& evaluator,
                                    bool track_values);

/// Plays one episode with a fresh search per move (tree reused across moves)
/// and greedy-by-visit move choice.
RolloutResult search_rollout(const PatternMatrix& a, const Evaluator& evaluator,
                             const SearchConfig& cfg, RewardMode mode, std::mt19937_64& rng);

}  // namespace fillin
