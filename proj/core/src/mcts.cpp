#include "fillin/mcts.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fillin {

std::int64_t SearchNode::visit_sum() const {
  std::int64_t total = 0;
  for (const Edge& e : edges) total += e.visits;
  return total;
}

double uct_score(const SearchNode& node, const Edge& edge, const SearchConfig& cfg) {
  const double q = edge.visits > 0 ? edge.mean : 0.0;
  if (cfg.c == 0.0) return q;
  if (cfg.uct_formula == UctFormula::PaperLiteral) {
    if (edge.visits == 0) return std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(edge.visits);
    return q + cfg.c * (std::sqrt(n) / n) * edge.prior;
  }
  const double parent = static_cast<double>(node.visit_sum());
  return q + cfg.c * edge.prior * std::sqrt(parent) / (1.0 + static_cast<double>(edge.visits));
}

std::vector<double> add_dirichlet_noise(std::span<const double> priors, const SearchConfig& cfg,
                                        std::mt19937_64& rng) {
  std::vector<double> out(priors.begin(), priors.end());
  if (out.size() <= 1) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  const double eps = cfg.dirichlet_epsilon;
  if (eps == 0.0) return out;
  std::gamma_distribution<double> gamma(cfg.dirichlet_alpha, 1.0);
  std::vector<double> eta(out.size());
  double total = 0.0;
  for (double& x : eta) total += (x = gamma(rng));
  if (!(total > 0.0)) {
    // Every gamma draw underflowed: the sample sits on a vertex of the simplex.
    std::uniform_int_distribution<std::size_t> pick(0, eta.size() - 1);
    std::fill(eta.begin(), eta.end(), 0.0);
    eta[pick(rng)] = 1.0;
    total = 1.0;
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - eps) * out[k] + eps * eta[k] / total;
  return out;
}

void backup(std::span<const PathStep> path, double leaf_value, const SearchConfig& cfg) {
  double g = leaf_value;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    Edge& e = it->node->edges[it->edge];
    g = e.reward + cfg.gamma * g;
    e.visits += 1;
    e.total += g;
    e.mean = e.total / static_cast<double>(e.visits);
  }
}

// ---------------------------------------------------------------------------

SearchTree::SearchTree(const EliminationState& root, const Evaluator& evaluator, SearchConfig cfg)
    : evaluator_(evaluator), cfg_(cfg) {
  root_ = make_node(root);
}

std::int32_t SearchTree::make_node(const EliminationState& state) {
  SearchNode node;
  node.state = state;
  if (!state.terminal()) {
    const Evaluation eval = evaluator_.evaluate(state);
    const auto legal = legal_actions(state);
    const auto priors = masked_priors(eval.priors, legal);
    node.value = eval.value;
    node.edges.reserve(legal.size());
    for (std::size_t k = 0; k < legal.size(); ++k) {
      Edge e;
      e.action = legal[k];
      e.prior = e.raw_prior = priors[k];
      node.edges.push_back(e);
    }
  }
  nodes_.push_back(std::move(node));
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

std::size_t SearchTree::select_edge(const SearchNode& node) const {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < node.edges.size(); ++k) {
    const double s = uct_score(node, node.edges[k], cfg_);
    if (s > best_score) {
      best_score = s;
      best = k;
    }
  }
  return best;
}

SearchResult SearchTree::search(std::mt19937_64& rng) {
  if (cfg_.num_simulations <= 0) throw std::invalid_argument("search needs at least one simulation");
  if (root().state.terminal()) throw std::invalid_argument("cannot search from a terminal state");

  {
    SearchNode& r = nodes_[static_cast<std::size_t>(root_)];
    std::vector<double> raw(r.edges.size());
    for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = r.edges[k].raw_prior;
    const auto noisy = add_dirichlet_noise(raw, cfg_, rng);
    for (std::size_t k = 0; k < raw.size(); ++k) r.edges[k].prior = noisy[k];
  }

  std::vector<std::pair<std::int32_t, std::size_t>> trail;
  std::vector<PathStep> path;
  for (int sim = 0; sim < cfg_.num_simulations; ++sim) {
    trail.clear();
    std::int32_t current = root_;
    double leaf_value = 0.0;
    while (true) {
      SearchNode& node = nodes_[static_cast<std::size_t>(current)];
      if (node.state.terminal()) {
        leaf_value = 0.0;
        break;
      }
      const std::size_t k = select_edge(node);
      trail.emplace_back(current, k);
      if (node.edges[k].child >= 0) {
        current = node.edges[k].child;
        continue;
      }
      // Expand and evaluate.
      StepResult next = step(node.state, node.edges[k].action);
      const double reward = next.reward;
      const std::int32_t child = make_node(next.next);  // may reallocate nodes_
      Edge& e = nodes_[static_cast<std::size_t>(current)].edges[k];
      e.child = child;
      e.reward = reward;
      leaf_value = nodes_[static_cast<std::size_t>(child)].value;
      break;
    }
    path.clear();
    for (const auto& [idx, k] : trail) path.push_back({&nodes_[static_cast<std::size_t>(idx)], k});
    backup(path, leaf_value, cfg_);
  }

  const SearchNode& r = root();
  SearchResult out;
  out.visit_policy.assign(static_cast<std::size_t>(r.state.n()), 0.0);
  double n_total = 0.0, w_total = 0.0;
  for (const Edge& e : r.edges) {
    n_total += static_cast<double>(e.visits);
    w_total += e.total;
  }
  for (const Edge& e : r.edges)
    out.visit_policy[static_cast<std::size_t>(e.action.row)] = static_cast<double>(e.visits) / n_total;
  out.root_value = w_total / n_total;
  return out;
}

void SearchTree::advance(ActionId a) {
  SearchNode& r = nodes_[static_cast<std::size_t>(root_)];
  for (std::size_t k = 0; k < r.edges.size(); ++k) {
    if (r.edges[k].action != a) continue;
    if (r.edges[k].child < 0) {
      StepResult next = step(r.state, a);
      const double reward = next.reward;
      const std::int32_t child = make_node(next.next);
      Edge& e = nodes_[static_cast<std::size_t>(root_)].edges[k];
      e.child = child;
      e.reward = reward;
    }
    root_ = nodes_[static_cast<std::size_t>(root_)].edges[k].child;
    return;
  }
  throw std::invalid_argument("advance: action is not legal at the root");
}

SearchResult run_search(const EliminationState& root_state, const Evaluator& evaluator,
                        const SearchConfig& cfg, std::mt19937_64& rng) {
  SearchTree tree(root_state, evaluator, cfg);
  return tree.search(rng);
}

ActionId select_action(std::span<const double> visit_policy, double temperature,
                       std::mt19937_64& rng) {
  if (visit_policy.empty()) throw std::invalid_argument("empty visit policy");
  if (temperature <= 0.0) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < visit_policy.size(); ++k)
      if (visit_policy[k] > visit_policy[best]) best = k;
    return {static_cast<Index>(best)};
  }
  std::vector<double> w(visit_policy.size());
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = visit_policy[k] > 0.0 ? std::pow(visit_policy[k], 1.0 / temperature) : 0.0;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng) * total;
  double run = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] <= 0.0) continue;
    last = k;
    run += w[k];
    if (u < run) return {static_cast<Index>(k)};
  }
  return {static_cast<Index>(last)};
}

namespace {

RolloutResult greedy_rollout_from(EliminationState s, const PatternMatrix& a,
                                  const Evaluator& evaluator) {
  RolloutResult out;
  while (!s.terminal()) {
    const auto legal = legal_actions(s);
    ActionId choice = legal.front();
    if (legal.size() > 1) {
      const Evaluation eval = evaluator.evaluate(s);
      const auto priors = masked_priors(eval.priors, legal);
      std::size_t best = 0;
      for (std::size_t k = 1; k < legal.size(); ++k)
        if (priors[k] > priors[best]) best = k;
      choice = legal[best];
    }
    out.pivots.push_back(choice.row);
    s = step(s, choice).next;
  }
  out.rows = Permutation(s.row_order());
  out.fill = symbolic_lu(a, out.pivots);
  return out;
}

}  // namespace

RolloutResult greedy_policy_rollout(const PatternMatrix& a, const Evaluator& evaluator) {
  return greedy_rollout_from(EliminationState::new_episode(a, RewardMode::PerStep), a, evaluator);
}

RolloutResult greedy_policy_rollout(const CsrMatrix& a, const Evaluator& evaluator,
                                    bool track_values) {
  return greedy_rollout_from(EliminationState::new_episode(a, RewardMode::PerStep, track_values),
                             pattern_of(a), evaluator);
}

RolloutResult search_rollout(const PatternMatrix& a, const Evaluator& evaluator,
                             const SearchConfig& cfg, RewardMode mode, std::mt19937_64& rng) {
  SearchTree tree(EliminationState::new_episode(a, mode), evaluator, cfg);
  RolloutResult out;
  while (!tree.root().state.terminal()) {
    const auto legal = legal_actions(tree.root().state);
    ActionId choice = legal.front();
    if (legal.size() > 1) choice = select_action(tree.search(rng).visit_policy, 0.0, rng);
    out.pivots.push_back(choice.row);
    tree.advance(choice);
  }
  out.rows = Permutation(tree.root().state.row_order());
  out.fill = symbolic_lu(a, out.pivots);
  return out;
}

}  // namespace fillin
