#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fillin/evaluator.hpp"
#include "fillin/tensor.hpp"

namespace fillin {

/// Shape of the two-headed policy/value network.
///
///   input 3 x N x N
///   conv 3x3, pad 2 -> c1 x (N+2) x (N+2), ReLU, maxpool 2 (ceil)
///   conv 5x5, pad 2 -> c2 x s x s (size preserved), ReLU, maxpool 2 (ceil)
///   flatten -> linear N, ReLU -> { policy: linear N, softmax ; value: linear 1 }
struct CnnArchitecture {
  int N = 16;
  int c1 = 8;
  int c2 = 16;

  int conv1_size() const { return N + 2 * 2 - 3 + 1; }
  int pool1_size() const { return (conv1_size() + 1) / 2; }
  int conv2_size() const { return pool1_size() + 2 * 2 - 5 + 1; }
  int pool2_size() const { return (conv2_size() + 1) / 2; }
  int flat_size() const { return c2 * pool2_size() * pool2_size(); }

  friend bool operator==(const CnnArchitecture&, const CnnArchitecture&) = default;
};

/// All network weights in one flat array; the layer views below index into it.
class CnnParameters {
 public:
  struct Layout {
    std::size_t conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b, pol_w, pol_b, val_w, val_b, total;
    friend bool operator==(const Layout&, const Layout&) = default;
  };

  CnnParameters() = default;
  explicit CnnParameters(CnnArchitecture arch);

  /// He-uniform weights, small uniform biases.
  static CnnParameters initialize(CnnArchitecture arch, std::uint64_t seed);

  const CnnArchitecture& arch() const { return arch_; }
  const Layout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const CnnParameters&, const CnnParameters&) = default;

 private:
  CnnArchitecture arch_;
  Layout layout_{};
  std::vector<double> values_;
};

/// Network output before legality masking: softmax over N rows, raw value.
struct NetworkOutput {
  std::vector<double> priors;
  double value = 0.0;
};

NetworkOutput forward(const CnnParameters& params, const Tensor3& input);

/// ReLU on/off flags followed by max-pool winner indices. The loss is smooth
/// in the parameters wherever this stays constant.
std::vector<std::size_t> activation_pattern(const CnnParameters& params, const Tensor3& input);

struct SampleLoss {
  double policy = 0.0;  ///< cross-entropy against the target distribution
  double value = 0.0;   ///< squared error
};

/// Per-sample loss; when `grad` is non-null, accumulates weight * d(loss)/d(params)
/// into it (L2 excluded).
SampleLoss sample_loss(const CnnParameters& params, const Tensor3& input,
                       std::span<const double> policy_target, double value_target,
                       double weight = 1.0, std::vector<double>* grad = nullptr);

struct TrainBatch {
  std::vector<Tensor3> inputs;
  std::vector<std::vector<double>> policy_targets;
  std::vector<double> value_targets;
  std::vector<double> sample_weights;
  /// Buffer slots the samples came from (for priority updates).
  std::vector<std::size_t> slots;

  std::size_t size() const { return inputs.size(); }
};

struct BatchLoss {
  double policy = 0.0;  ///< weighted mean
  double value = 0.0;   ///< weighted mean
  double l2 = 0.0;
  double total = 0.0;
  std::vector<double> per_sample;  ///< unweighted policy + value per sample
};

/// total = mean_i w_i (policy_i + value_i) + l2_coefficient * |params|^2.
BatchLoss batch_loss(const CnnParameters& params, const TrainBatch& batch,
                     double l2_coefficient, std::vector<double>* grad = nullptr);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainStepResult {
  BatchLoss loss;
  /// False when the loss or gradient was not finite; parameters untouched.
  bool applied = false;
};

/// One Adam update on the importance-weighted batch loss.
TrainStepResult train_step(CnnParameters& params, const TrainBatch& batch, AdamState& adam,
                           double learning_rate, double l2_coefficient);

/// Checkpoint layout (little-endian):
///   8 bytes  magic "FILLCNN\0"
///   u32      format version (1)
///   u32 N, u32 c1, u32 c2
///   u64      parameter count
///   f64[count] parameters
void save_checkpoint(const CnnParameters& params, std::ostream& out);
void save_checkpoint(const CnnParameters& params, const std::filesystem::path& path);
/// Throws std::runtime_error on bad magic, version, or shape metadata.
CnnParameters load_checkpoint(std::istream& in);
CnnParameters load_checkpoint(const std::filesystem::path& path);

/// Evaluator backed by the network. States smaller than N are encoded as
/// padded; priors for the padding rows are dropped and the rest renormalized.
class CnnEvaluator final : public Evaluator {
 public:
  explicit CnnEvaluator(CnnParameters params, InputEncoding encoding = InputEncoding::Masked)
      : params_(std::move(params)), encoding_(encoding) {}

  Evaluation evaluate(const EliminationState& s) const override;

  const CnnParameters& params() const { return params_; }
  InputEncoding encoding() const { return encoding_; }

 private:
  CnnParameters params_;
  InputEncoding encoding_;
};

}  // namespace fillin
