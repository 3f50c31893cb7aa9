#include "fillin/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fillin {

namespace {

constexpr int kConv1Kernel = 3;
constexpr int kConv2Kernel = 5;
constexpr int kPadding = 2;
constexpr int kInputChannels = 3;

// ---------------------------------------------------------------------------
// Layer kernels on channel-major buffers.

// out[o] = b[o] + sum_c w[o][c] (*) in[c], zero padding P.
void conv_forward(const Tensor3& in, const double* w, const double* b, int out_channels, int K,
                  int P, Tensor3& out) {
  const int H = in.height, W = in.width;
  const int Ho = H + 2 * P - K + 1, Wo = W + 2 * P - K + 1;
  out = Tensor3(out_channels, Ho, Wo);
  for (int o = 0; o < out_channels; ++o) {
    double* op = &out.data[out.index(o, 0, 0)];
    std::fill(op, op + static_cast<std::ptrdiff_t>(Ho) * Wo, b[o]);
    for (int c = 0; c < in.channels; ++c) {
      const double* ip = &in.data[in.index(c, 0, 0)];
      for (int ky = 0; ky < K; ++ky) {
        for (int kx = 0; kx < K; ++kx) {
          const double wv = w[((o * in.channels + c) * K + ky) * K + kx];
          if (wv == 0.0) continue;
          const int x_lo = std::max(0, P - kx), x_hi = std::min(Wo, W + P - kx);
          for (int y = 0; y < Ho; ++y) {
            const int iy = y + ky - P;
            if (iy < 0 || iy >= H) continue;
            const double* irow = ip + static_cast<std::ptrdiff_t>(iy) * W + (kx - P);
            double* orow = op + static_cast<std::ptrdiff_t>(y) * Wo;
            for (int x = x_lo; x < x_hi; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

// Accumulates dw, db and (optionally) din from dout.
void conv_backward(const Tensor3& in, const double* w, const Tensor3& dout, int K, int P,
                   double* dw, double* db, Tensor3* din) {
  const int H = in.height, W = in.width;
  const int Ho = dout.height, Wo = dout.width;
  if (din) *din = Tensor3(in.channels, H, W);
  for (int o = 0; o < dout.channels; ++o) {
    const double* gp = &dout.data[dout.index(o, 0, 0)];
    double sum = 0.0;
    for (int k = 0; k < Ho * Wo; ++k) sum += gp[k];
    db[o] += sum;
    for (int c = 0; c < in.channels; ++c) {
      const double* ip = &in.data[in.index(c, 0, 0)];
      double* dip = din ? &din->data[din->index(c, 0, 0)] : nullptr;
      for (int ky = 0; ky < K; ++ky) {
        for (int kx = 0; kx < K; ++kx) {
          const std::size_t wi = static_cast<std::size_t>(((o * in.channels + c) * K + ky) * K + kx);
          const double wv = w[wi];
          const int x_lo = std::max(0, P - kx), x_hi = std::min(Wo, W + P - kx);
          double acc = 0.0;
          for (int y = 0; y < Ho; ++y) {
            const int iy = y + ky - P;
            if (iy < 0 || iy >= H) continue;
            const double* irow = ip + static_cast<std::ptrdiff_t>(iy) * W + (kx - P);
            const double* grow = gp + static_cast<std::ptrdiff_t>(y) * Wo;
            for (int x = x_lo; x < x_hi; ++x) acc += grow[x] * irow[x];
            if (dip) {
              double* drow = dip + static_cast<std::ptrdiff_t>(iy) * W + (kx - P);
              for (int x = x_lo; x < x_hi; ++x) drow[x] += wv * grow[x];
            }
          }
          dw[wi] += acc;
        }
      }
    }
  }
}

void relu_inplace(Tensor3& t) {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

// 2x2 stride-2 max pool with ceiling output size; `argmax` holds the input
// flat index of each output (first maximum wins).
void maxpool_forward(const Tensor3& in, Tensor3& out, std::vector<std::size_t>& argmax) {
  const int Ho = (in.height + 1) / 2, Wo = (in.width + 1) / 2;
  out = Tensor3(in.channels, Ho, Wo);
  argmax.assign(out.size(), 0);
  for (int c = 0; c < in.channels; ++c)
    for (int y = 0; y < Ho; ++y)
      for (int x = 0; x < Wo; ++x) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int iy = 2 * y + dy, ix = 2 * x + dx;
            if (iy >= in.height || ix >= in.width) continue;
            const std::size_t i = in.index(c, iy, ix);
            if (in.data[i] > best) {
              best = in.data[i];
              best_i = i;
            }
          }
        const std::size_t o = out.index(c, y, x);
        out.data[o] = best;
        argmax[o] = best_i;
      }
}

struct Activations {
  Tensor3 z1, p1, z2, p2;  // z* hold post-ReLU values (ReLU mask = z > 0)
  std::vector<std::size_t> idx1, idx2;
  std::vector<double> hidden;  // post-ReLU
  std::vector<double> logits;
  std::vector<double> probs;
  double value = 0.0;
};

void run_forward(const CnnParameters& params, const Tensor3& input, Activations& act) {
  const auto& a = params.arch();
  const auto& L = params.layout();
  const double* v = params.values().data();
  if (input.channels != kInputChannels || input.height != a.N || input.width != a.N)
    throw std::invalid_argument("network input must be 3 x N x N");

  conv_forward(input, v + L.conv1_w, v + L.conv1_b, a.c1, kConv1Kernel, kPadding, act.z1);
  relu_inplace(act.z1);
  maxpool_forward(act.z1, act.p1, act.idx1);
  conv_forward(act.p1, v + L.conv2_w, v + L.conv2_b, a.c2, kConv2Kernel, kPadding, act.z2);
  relu_inplace(act.z2);
  maxpool_forward(act.z2, act.p2, act.idx2);

  const auto F = static_cast<std::size_t>(a.flat_size());
  const auto N = static_cast<std::size_t>(a.N);
  act.hidden.assign(N, 0.0);
  for (std::size_t h = 0; h < N; ++h) {
    double s = v[L.fc_b + h];
    const double* row = v + L.fc_w + h * F;
    for (std::size_t f = 0; f < F; ++f) s += row[f] * act.p2.data[f];
    act.hidden[h] = s > 0.0 ? s : 0.0;
  }
  act.logits.assign(N, 0.0);
  for (std::size_t o = 0; o < N; ++o) {
    double s = v[L.pol_b + o];
    const double* row = v + L.pol_w + o * N;
    for (std::size_t h = 0; h < N; ++h) s += row[h] * act.hidden[h];
    act.logits[o] = s;
  }
  double val = v[L.val_b];
  for (std::size_t h = 0; h < N; ++h) val += v[L.val_w + h] * act.hidden[h];
  act.value = val;

  const double mx = *std::max_element(act.logits.begin(), act.logits.end());
  act.probs.resize(N);
  double z = 0.0;
  for (std::size_t o = 0; o < N; ++o) z += (act.probs[o] = std::exp(act.logits[o] - mx));
  for (double& p : act.probs) p /= z;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int k = 0; k < 4; ++k) b[static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xFFu);
  out.write(b.data(), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int k = 0; k < 8; ++k) b[static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xFFu);
  out.write(b.data(), 8);
}

std::uint64_t read_uint(std::istream& in, int bytes) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), bytes);
  if (!in) throw std::runtime_error("truncated checkpoint");
  std::uint64_t v = 0;
  for (int k = bytes - 1; k >= 0; --k) v = (v << 8) | b[static_cast<std::size_t>(k)];
  return v;
}

constexpr std::array<char, 8> kMagic{'F', 'I', 'L', 'L', 'C', 'N', 'N', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

// ---------------------------------------------------------------------------

CnnParameters::CnnParameters(CnnArchitecture arch) : arch_(arch) {
  if (arch.N < 1 || arch.c1 < 1 || arch.c2 < 1) throw std::invalid_argument("invalid network shape");
  const auto N = static_cast<std::size_t>(arch.N);
  const auto c1 = static_cast<std::size_t>(arch.c1);
  const auto c2 = static_cast<std::size_t>(arch.c2);
  std::size_t off = 0;
  auto take = [&off](std::size_t count) {
    const std::size_t at = off;
    off += count;
    return at;
  };
  layout_.conv1_w = take(c1 * kInputChannels * kConv1Kernel * kConv1Kernel);
  layout_.conv1_b = take(c1);
  layout_.conv2_w = take(c2 * c1 * kConv2Kernel * kConv2Kernel);
  layout_.conv2_b = take(c2);
  layout_.fc_w = take(N * static_cast<std::size_t>(arch.flat_size()));
  layout_.fc_b = take(N);
  layout_.pol_w = take(N * N);
  layout_.pol_b = take(N);
  layout_.val_w = take(N);
  layout_.val_b = take(1);
  layout_.total = off;
  values_.assign(off, 0.0);
}

CnnParameters CnnParameters::initialize(CnnArchitecture arch, std::uint64_t seed) {
  CnnParameters p(arch);
  std::mt19937_64 rng(seed);
  const auto& L = p.layout_;
  auto fill = [&](std::size_t begin, std::size_t end, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = begin; k < end; ++k) p.values_[k] = dist(rng);
  };
  const double N = arch.N;
  fill(L.conv1_w, L.conv1_b, std::sqrt(6.0 / (kInputChannels * 9.0)));
  fill(L.conv1_b, L.conv2_w, 0.05);
  fill(L.conv2_w, L.conv2_b, std::sqrt(6.0 / (arch.c1 * 25.0)));
  fill(L.conv2_b, L.fc_w, 0.05);
  fill(L.fc_w, L.fc_b, std::sqrt(6.0 / arch.flat_size()));
  fill(L.fc_b, L.pol_w, 0.05);
  fill(L.pol_w, L.pol_b, std::sqrt(6.0 / N));
  fill(L.pol_b, L.val_w, 0.05);
  fill(L.val_w, L.val_b, std::sqrt(6.0 / N));
  fill(L.val_b, L.total, 0.05);
  return p;
}

NetworkOutput forward(const CnnParameters& params, const Tensor3& input) {
  Activations act;
  run_forward(params, input, act);
  return {std::move(act.probs), act.value};
}

std::vector<std::size_t> activation_pattern(const CnnParameters& params, const Tensor3& input) {
  Activations act;
  run_forward(params, input, act);
  std::vector<std::size_t> out;
  for (const Tensor3* t : {&act.z1, &act.z2})
    for (double v : t->data) out.push_back(v > 0.0);
  for (double v : act.hidden) out.push_back(v > 0.0);
  out.insert(out.end(), act.idx1.begin(), act.idx1.end());
  out.insert(out.end(), act.idx2.begin(), act.idx2.end());
  return out;
}

SampleLoss sample_loss(const CnnParameters& params, const Tensor3& input,
                       std::span<const double> policy_target, double value_target, double weight,
                       std::vector<double>* grad) {
  const auto& a = params.arch();
  const auto N = static_cast<std::size_t>(a.N);
  if (policy_target.size() != N) throw std::invalid_argument("policy target must have N entries");
  Activations act;
  run_forward(params, input, act);

  SampleLoss loss;
  const double mx = *std::max_element(act.logits.begin(), act.logits.end());
  double z = 0.0;
  for (double l : act.logits) z += std::exp(l - mx);
  const double log_z = mx + std::log(z);
  for (std::size_t o = 0; o < N; ++o)
    if (policy_target[o] != 0.0) loss.policy -= policy_target[o] * (act.logits[o] - log_z);
  const double verr = act.value - value_target;
  loss.value = verr * verr;
  if (!grad) return loss;

  if (grad->size() != params.size()) grad->assign(params.size(), 0.0);
  const auto& L = params.layout();
  const double* v = params.values().data();
  double* g = grad->data();

  // Heads.
  std::vector<double> dlogits(N);
  double target_mass = 0.0;
  for (double t : policy_target) target_mass += t;
  for (std::size_t o = 0; o < N; ++o) dlogits[o] = weight * (target_mass * act.probs[o] - policy_target[o]);
  const double dvalue = weight * 2.0 * verr;

  std::vector<double> dhidden(N, 0.0);
  for (std::size_t o = 0; o < N; ++o) {
    g[L.pol_b + o] += dlogits[o];
    for (std::size_t h = 0; h < N; ++h) {
      g[L.pol_w + o * N + h] += dlogits[o] * act.hidden[h];
      dhidden[h] += v[L.pol_w + o * N + h] * dlogits[o];
    }
  }
  g[L.val_b] += dvalue;
  for (std::size_t h = 0; h < N; ++h) {
    g[L.val_w + h] += dvalue * act.hidden[h];
    dhidden[h] += v[L.val_w + h] * dvalue;
  }

  // Shared fully-connected layer.
  const auto F = static_cast<std::size_t>(a.flat_size());
  Tensor3 dp2(act.p2.channels, act.p2.height, act.p2.width);
  for (std::size_t h = 0; h < N; ++h) {
    if (act.hidden[h] <= 0.0) continue;
    const double d = dhidden[h];
    g[L.fc_b + h] += d;
    const double* row = v + L.fc_w + h * F;
    double* grow = g + L.fc_w + h * F;
    for (std::size_t f = 0; f < F; ++f) {
      grow[f] += d * act.p2.data[f];
      dp2.data[f] += row[f] * d;
    }
  }

  // Pool 2 -> ReLU 2 -> conv 2.
  Tensor3 dz2(act.z2.channels, act.z2.height, act.z2.width);
  for (std::size_t k = 0; k < dp2.size(); ++k) dz2.data[act.idx2[k]] += dp2.data[k];
  for (std::size_t k = 0; k < dz2.size(); ++k)
    if (act.z2.data[k] <= 0.0) dz2.data[k] = 0.0;
  Tensor3 dp1;
  conv_backward(act.p1, v + L.conv2_w, dz2, kConv2Kernel, kPadding, g + L.conv2_w, g + L.conv2_b,
                &dp1);

  // Pool 1 -> ReLU 1 -> conv 1.
  Tensor3 dz1(act.z1.channels, act.z1.height, act.z1.width);
  for (std::size_t k = 0; k < dp1.size(); ++k) dz1.data[act.idx1[k]] += dp1.data[k];
  for (std::size_t k = 0; k < dz1.size(); ++k)
    if (act.z1.data[k] <= 0.0) dz1.data[k] = 0.0;
  conv_backward(input, v + L.conv1_w, dz1, kConv1Kernel, kPadding, g + L.conv1_w, g + L.conv1_b,
                nullptr);
  return loss;
}

BatchLoss batch_loss(const CnnParameters& params, const TrainBatch& batch, double l2_coefficient,
                     std::vector<double>* grad) {
  const std::size_t B = batch.size();
  if (B == 0) throw std::invalid_argument("empty training batch");
  if (batch.policy_targets.size() != B || batch.value_targets.size() != B ||
      (!batch.sample_weights.empty() && batch.sample_weights.size() != B))
    throw std::invalid_argument("training batch fields are not aligned");
  if (grad) grad->assign(params.size(), 0.0);

  BatchLoss out;
  out.per_sample.resize(B);
  const double inv_b = 1.0 / static_cast<double>(B);
  for (std::size_t i = 0; i < B; ++i) {
    const double w = batch.sample_weights.empty() ? 1.0 : batch.sample_weights[i];
    const SampleLoss s = sample_loss(params, batch.inputs[i], batch.policy_targets[i],
                                     batch.value_targets[i], w * inv_b, grad);
    out.policy += w * s.policy * inv_b;
    out.value += w * s.value * inv_b;
    out.per_sample[i] = s.policy + s.value;
  }
  const auto vals = params.values();
  double sq = 0.0;
  for (double x : vals) sq += x * x;
  out.l2 = l2_coefficient * sq;
  out.total = out.policy + out.value + out.l2;
  if (grad && l2_coefficient != 0.0)
    for (std::size_t k = 0; k < vals.size(); ++k) (*grad)[k] += 2.0 * l2_coefficient * vals[k];
  return out;
}

TrainStepResult train_step(CnnParameters& params, const TrainBatch& batch, AdamState& adam,
                           double learning_rate, double l2_coefficient) {
  TrainStepResult result;
  std::vector<double> grad;
  result.loss = batch_loss(params, batch, l2_coefficient, &grad);
  if (!std::isfinite(result.loss.total)) return result;
  for (double gk : grad)
    if (!std::isfinite(gk)) return result;
  if (adam.m.size() != params.size()) {
    adam.m.assign(params.size(), 0.0);
    adam.v.assign(params.size(), 0.0);
    adam.t = 0;
  }
  adam.t += 1;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.t));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.t));
  auto vals = params.values();
  for (std::size_t k = 0; k < vals.size(); ++k) {
    adam.m[k] = adam.beta1 * adam.m[k] + (1.0 - adam.beta1) * grad[k];
    adam.v[k] = adam.beta2 * adam.v[k] + (1.0 - adam.beta2) * grad[k] * grad[k];
    const double mhat = adam.m[k] / bc1;
    const double vhat = adam.v[k] / bc2;
    vals[k] -= learning_rate * mhat / (std::sqrt(vhat) + adam.epsilon);
  }
  result.applied = true;
  return result;
}

// ---------------------------------------------------------------------------

void save_checkpoint(const CnnParameters& params, std::ostream& out) {
  out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(params.arch().N));
  write_u32(out, static_cast<std::uint32_t>(params.arch().c1));
  write_u32(out, static_cast<std::uint32_t>(params.arch().c2));
  write_u64(out, params.size());
  for (double x : params.values()) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x, sizeof bits);
    write_u64(out, bits);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

void save_checkpoint(const CnnParameters& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_checkpoint(params, out);
}

CnnParameters load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kMagic) throw std::runtime_error("not a network checkpoint (bad magic)");
  const auto version = read_uint(in, 4);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  CnnArchitecture arch;
  arch.N = static_cast<int>(read_uint(in, 4));
  arch.c1 = static_cast<int>(read_uint(in, 4));
  arch.c2 = static_cast<int>(read_uint(in, 4));
  if (arch.N < 1 || arch.N > 4096 || arch.c1 < 1 || arch.c1 > 1024 || arch.c2 < 1 || arch.c2 > 1024)
    throw std::runtime_error("checkpoint has an implausible architecture");
  CnnParameters params(arch);
  const auto count = read_uint(in, 8);
  if (count != params.size())
    throw std::runtime_error("checkpoint parameter count " + std::to_string(count) +
                             " does not match architecture (" + std::to_string(params.size()) + ")");
  for (double& x : params.values()) {
    const std::uint64_t bits = read_uint(in, 8);
    std::memcpy(&x, &bits, sizeof x);
  }
  return params;
}

CnnParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

Evaluation CnnEvaluator::evaluate(const EliminationState& s) const {
  const int N = params_.arch().N;
  const NetworkOutput out = forward(params_, encode_input(s, N, encoding_));
  Evaluation e;
  e.value = out.value;
  const auto offset = static_cast<std::size_t>(N - s.n());
  e.priors.assign(out.priors.begin() + static_cast<std::ptrdiff_t>(offset), out.priors.end());
  if (offset > 0) {
    double total = 0.0;
    for (double p : e.priors) total += p;
    if (total > 0.0)
      for (double& p : e.priors) p /= total;
  }
  return e;
}

}  // namespace fillin
