#include "fillin/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fillin {

namespace {
constexpr double kMinPriority = 1e-6;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, double alpha, double beta)
    : capacity_(capacity), alpha_(alpha), beta_(beta) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  samples_.reserve(capacity);
}

void ReplayBuffer::push(ReplaySample sample) {
  if (samples_.size() < capacity_) {
    samples_.push_back(std::move(sample));
    priorities_.push_back(max_priority_);
    sequence_.push_back(pushed_++);
    return;
  }
  samples_[next_] = std::move(sample);
  priorities_[next_] = max_priority_;
  sequence_[next_] = pushed_++;
  next_ = (next_ + 1) % capacity_;
}

std::vector<double> ReplayBuffer::sampling_probabilities() const {
  std::vector<double> p(priorities_.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += (p[k] = std::pow(priorities_[k], alpha_));
  for (double& x : p) x /= total;
  return p;
}

TrainBatch ReplayBuffer::sample(std::size_t batch_size, std::mt19937_64& rng) const {
  if (samples_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  const std::vector<double> probs = sampling_probabilities();
  std::vector<double> cumulative(probs.size());
  double run = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) cumulative[k] = (run += probs[k]);
  const double min_p = *std::min_element(probs.begin(), probs.end());
  const double size = static_cast<double>(samples_.size());
  const double max_w = std::pow(size * min_p, -beta_);

  TrainBatch batch;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const double u = unit(rng) * run;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    const auto slot = static_cast<std::size_t>(it - cumulative.begin());
    const ReplaySample& s = samples_[slot];
    batch.inputs.push_back(s.input);
    batch.policy_targets.push_back(s.policy_target);
    batch.value_targets.push_back(s.value_target);
    batch.sample_weights.push_back(std::pow(size * probs[slot], -beta_) / max_w);
    batch.slots.push_back(slot);
  }
  return batch;
}

void ReplayBuffer::update_priorities(std::span<const std::size_t> slots,
                                     std::span<const double> losses) {
  if (slots.size() != losses.size()) throw std::invalid_argument("slots and losses must align");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const double p = std::isfinite(losses[k]) ? std::max(losses[k], kMinPriority) : max_priority_;
    priorities_.at(slots[k]) = p;
    max_priority_ = std::max(max_priority_, p);
  }
}

}  // namespace fillin
