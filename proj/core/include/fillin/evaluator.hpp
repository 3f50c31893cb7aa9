#pragma once

#include <span>
#include <vector>

#include "fillin/elimination.hpp"

namespace fillin {

/// Evaluator output for one state: a prior over the state's rows and a
/// scalar estimate of the discounted return-to-go.
struct Evaluation {
  std::vector<double> priors;
  double value = 0.0;
};

/// Maps a game state to (priors, value). Implementations must be safe to
/// call concurrently (read-only inference).
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual Evaluation evaluate(const EliminationState& s) const = 0;
};

/// Uniform prior over legal actions, value 0.
class UniformEvaluator final : public Evaluator {
 public:
  Evaluation evaluate(const EliminationState& s) const override;
};

/// Prior proportional to 1 / (1 + occupied columns right of the pivot column)
/// in each candidate row, i.e. a Markowitz-style row count preference.
/// Value is minus the current density of the working pattern.
class DegreeHeuristicEvaluator final : public Evaluator {
 public:
  Evaluation evaluate(const EliminationState& s) const override;
};

/// Restricts `priors` to the legal actions and renormalizes. Falls back to a
/// uniform distribution when the legal mass is zero or not finite.
std::vector<double> masked_priors(std::span<const double> priors,
                                  std::span<const ActionId> legal);

}  // namespace fillin
