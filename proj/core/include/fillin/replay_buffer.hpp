#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fillin/network.hpp"
#include "fillin/tensor.hpp"

namespace fillin {

struct ReplaySample {
  Tensor3 input;
  std::vector<double> policy_target;
  double value_target = 0.0;
};

/// Fixed-capacity FIFO store with proportional prioritized sampling:
/// P(i) = p_i^alpha / sum_k p_k^alpha, importance weight (size * P(i))^-beta
/// normalized by the largest weight in the buffer.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity, double alpha = 0.6, double beta = 0.4);

  /// New samples enter at the current maximum priority; the oldest sample is
  /// evicted when full.
  void push(ReplaySample sample);

  /// Draws `batch_size` samples with replacement. Throws std::logic_error
  /// when the buffer is empty.
  TrainBatch sample(std::size_t batch_size, std::mt19937_64& rng) const;

  /// Sets slot priorities to the given per-sample losses (clamped to > 0).
  void update_priorities(std::span<const std::size_t> slots, std::span<const double> losses);

  std::vector<double> sampling_probabilities() const;

  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return samples_.empty(); }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  void set_beta(double beta) { beta_ = beta; }

  double priority(std::size_t slot) const { return priorities_[slot]; }
  const ReplaySample& at(std::size_t slot) const { return samples_[slot]; }
  /// Monotone insertion sequence number of the sample held in `slot`.
  std::uint64_t sequence(std::size_t slot) const { return sequence_[slot]; }

 private:
  std::size_t capacity_;
  double alpha_;
  double beta_;
  double max_priority_ = 1.0;
  std::size_t next_ = 0;
  std::uint64_t pushed_ = 0;
  std::vector<ReplaySample> samples_;
  std::vector<double> priorities_;
  std::vector<std::uint64_t> sequence_;
};

}  // namespace fillin
