#include "fillin/evaluator.hpp"

#include <cmath>

namespace fillin {

Evaluation UniformEvaluator::evaluate(const EliminationState& s) const {
  Evaluation e;
  e.priors.assign(static_cast<std::size_t>(s.n()), 0.0);
  if (s.terminal()) return e;
  const auto legal = legal_actions(s);
  for (ActionId a : legal) e.priors[static_cast<std::size_t>(a.row)] = 1.0 / static_cast<double>(legal.size());
  return e;
}

Evaluation DegreeHeuristicEvaluator::evaluate(const EliminationState& s) const {
  Evaluation e;
  e.priors.assign(static_cast<std::size_t>(s.n()), 0.0);
  const double n2 = static_cast<double>(s.n()) * static_cast<double>(s.n());
  e.value = -static_cast<double>(s.working_nnz()) / n2;
  if (s.terminal()) return e;
  double total = 0.0;
  for (ActionId a : legal_actions(s)) {
    const double w = 1.0 / (1.0 + static_cast<double>(s.count_after(a.row, s.col())));
    e.priors[static_cast<std::size_t>(a.row)] = w;
    total += w;
  }
  for (double& p : e.priors) p /= total;
  return e;
}

std::vector<double> masked_priors(std::span<const double> priors,
                                  std::span<const ActionId> legal) {
  std::vector<double> out(legal.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < legal.size(); ++k) {
    const auto r = static_cast<std::size_t>(legal[k].row);
    const double p = r < priors.size() ? priors[r] : 0.0;
    out[k] = p > 0.0 ? p : 0.0;
    total += out[k];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    for (double& p : out) p = 1.0 / static_cast<double>(legal.size());
    return out;
  }
  for (double& p : out) p /= total;
  return out;
}

}  // namespace fillin
