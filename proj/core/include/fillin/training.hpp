#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fillin/elimination.hpp"
#include "fillin/mcts.hpp"
#include "fillin/network.hpp"
#include "fillin/symbolic_lu.hpp"

namespace fillin {

/// Which scalar the value head is trained on.
enum class ValueTarget {
  /// sum_a W(root, a) / sum_a N(root, a) from the move's search.
  SearchRoot,
  /// Discounted sum of the rewards actually collected from this step on.
  ReturnToGo,
};

struct TrainConfig {
  int N = 16;
  double sparsity_low = 0.85;
  double sparsity_high = 0.95;
  int episodes_per_iteration = 16;
  int simulations_per_move = 64;
  int iterations_max = 100;
  RewardMode reward_mode = RewardMode::TerminalFraction;
  SearchConfig search{};
  ValueTarget value_target = ValueTarget::SearchRoot;
  /// Fraction of each episode's moves sampled at temperature 1; the rest are greedy.
  double exploration_fraction = 0.3;

  std::size_t buffer_capacity = 20000;
  double per_alpha = 0.6;
  double per_beta_start = 0.4;
  int batch_size = 64;
  int train_steps_per_iteration = 50;
  double learning_rate = 1e-3;
  double l2 = 1e-4;

  int c1 = 8;
  int c2 = 16;
  InputEncoding encoding = InputEncoding::Masked;

  int heldout_size = 50;
  double heldout_sparsity = 0.9;
  int patience = 20;
  int checkpoint_every = 0;  ///< 0 disables periodic checkpoints
  std::filesystem::path checkpoint_dir;
  std::uint64_t seed = 1;
  /// Stop after this many seconds (0 = unlimited); checked between iterations.
  double time_budget_seconds = 0.0;
  bool verbose = false;
};

/// Reads a flat key=value file ('#' comments). Unknown keys and malformed
/// values throw std::invalid_argument naming the offending key.
TrainConfig read_train_config(std::istream& in, TrainConfig base = {});
TrainConfig read_train_config(const std::filesystem::path& path, TrainConfig base = {});
void write_train_config(const TrainConfig& cfg, std::ostream& out);
/// Applies a single key=value assignment.
void set_train_option(TrainConfig& cfg, const std::string& key, const std::string& value);

/// ceil((1 - sparsity) n^2) distinct positions drawn uniformly, then the
/// diagonal forced occupied.
PatternMatrix generate_random_matrix(Index n, double sparsity, std::mt19937_64& rng);

/// Pattern with log-uniform magnitudes in [1e-2, 1e2] and random signs.
CsrMatrix random_values(const PatternMatrix& p, std::mt19937_64& rng);

struct EpisodeStep {
  Tensor3 input;
  std::vector<double> policy;  ///< visit distribution over the N rows
  double search_value = 0.0;
  double reward = 0.0;
  double return_to_go = 0.0;
  Index action = 0;
};

struct EpisodeRecord {
  std::vector<EpisodeStep> steps;
  PivotSequence pivots;
  FillReport fill;
  double total_reward = 0.0;

  double value_target(std::size_t step, ValueTarget kind) const {
    return kind == ValueTarget::SearchRoot ? steps[step].search_value : steps[step].return_to_go;
  }
};

/// One self-play game on `matrix` (n == cfg.N). Every move runs a search,
/// records (input, pi, root value), and samples the move at temperature 1
/// during the first exploration_fraction of moves, greedily afterwards.
/// Throws std::logic_error if the replayed fill disagrees with symbolic_lu.
EpisodeRecord selfplay_episode(const CsrMatrix& matrix, const Evaluator& evaluator,
                               const TrainConfig& cfg, std::mt19937_64& rng);

struct IterationMetrics {
  int iteration = 0;
  double mean_episode_fill = 0.0;  ///< held-out greedy-rollout mean fill-in
  double mean_loss_policy = 0.0;
  double mean_loss_value = 0.0;
  double wall_seconds = 0.0;
  double selfplay_mean_fill = 0.0;
  double selfplay_mean_reward = 0.0;
};

struct TrainResult {
  CnnParameters final_params;
  CnnParameters best_params;  ///< lowest held-out fill
  std::vector<IterationMetrics> metrics;
  int best_iteration = 0;
  bool stopped_on_plateau = false;
};

/// Writes the metrics CSV header and rows:
/// iteration,mean_episode_fill,mean_loss_policy,mean_loss_value,wall_seconds
void write_metrics_csv(const std::vector<IterationMetrics>& metrics, std::ostream& out);

/// Optional hooks for tests and tools.
struct TrainHooks {
  /// Called after each iteration's metrics are computed.
  std::function<void(const IterationMetrics&)> on_iteration;
  /// When set, parameters are never updated (plateau testing).
  bool freeze_parameters = false;
  /// Starting parameters; fresh initialization when empty.
  std::optional<CnnParameters> initial;
};

/// generate episodes -> push to buffer -> gradient steps -> held-out
/// evaluation -> checkpoint; stops at iterations_max, after `patience`
/// iterations without held-out improvement, or at the time budget.
TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Fixed held-out set of the config (depends only on N, heldout size,
/// heldout sparsity and seed).
std::vector<CsrMatrix> heldout_set(const TrainConfig& cfg);

struct MaskAblation {
  TrainResult masked;
  TrainResult unmasked;
};

/// Trains twice with identical seeds, once on the occupancy mask and once on
/// raw values in channel 0.
MaskAblation ablation_mask(const TrainConfig& cfg);

struct ExplorationRun {
  double c = 0.0;
  TrainResult result;
};

std::vector<ExplorationRun> ablation_exploration(const TrainConfig& cfg,
                                                 const std::vector<double>& c_values);

/// Average total loss over the last `window` iterations.
double smoothed_final_loss(const std::vector<IterationMetrics>& metrics, std::size_t window = 5);

/// Worker count: FILLIN_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

/// Derives an independent stream seed from a base seed and indices.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace fillin
