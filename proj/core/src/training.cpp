#include "fillin/training.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <mutex>
#include <thread>
#include <tuple>

#include "fillin/replay_buffer.hpp"

namespace fillin {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("bad value for '" + key + "': " + value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw std::invalid_argument("bad value for '" + key + "': " + value);
}

// Runs body(i) for i in [0, count) on up to worker_count() threads.
template <class Body>
void parallel_for(std::size_t count, Body body) {
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double mean_heldout_fill(const std::vector<CsrMatrix>& heldout, const CnnEvaluator& eval) {
  if (heldout.empty()) return 0.0;
  std::vector<double> fills(heldout.size());
  const bool values = eval.encoding() == InputEncoding::RawValues;
  parallel_for(heldout.size(), [&](std::size_t i) {
    fills[i] = static_cast<double>(greedy_policy_rollout(heldout[i], eval, values).fill.fill_in);
  });
  double total = 0.0;
  for (double f : fills) total += f;
  return total / static_cast<double>(fills.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void set_train_option(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "N") cfg.N = parse_number<int>(key, value);
  else if (key == "sparsity_low") cfg.sparsity_low = parse_number<double>(key, value);
  else if (key == "sparsity_high") cfg.sparsity_high = parse_number<double>(key, value);
  else if (key == "episodes_per_iteration") cfg.episodes_per_iteration = parse_number<int>(key, value);
  else if (key == "simulations_per_move") cfg.simulations_per_move = parse_number<int>(key, value);
  else if (key == "iterations_max") cfg.iterations_max = parse_number<int>(key, value);
  else if (key == "reward_mode") {
    if (value == "perstep") cfg.reward_mode = RewardMode::PerStep;
    else if (value == "terminal") cfg.reward_mode = RewardMode::TerminalFraction;
    else throw std::invalid_argument("bad value for 'reward_mode': " + value);
  } else if (key == "c") cfg.search.c = parse_number<double>(key, value);
  else if (key == "gamma") cfg.search.gamma = parse_number<double>(key, value);
  else if (key == "dirichlet_alpha") cfg.search.dirichlet_alpha = parse_number<double>(key, value);
  else if (key == "dirichlet_epsilon") cfg.search.dirichlet_epsilon = parse_number<double>(key, value);
  else if (key == "uct") {
    if (value == "parent") cfg.search.uct_formula = UctFormula::ParentVisit;
    else if (value == "paper") cfg.search.uct_formula = UctFormula::PaperLiteral;
    else throw std::invalid_argument("bad value for 'uct': " + value);
  } else if (key == "value_target") {
    if (value == "search") cfg.value_target = ValueTarget::SearchRoot;
    else if (value == "return") cfg.value_target = ValueTarget::ReturnToGo;
    else throw std::invalid_argument("bad value for 'value_target': " + value);
  } else if (key == "exploration_fraction") cfg.exploration_fraction = parse_number<double>(key, value);
  else if (key == "buffer_capacity") cfg.buffer_capacity = parse_number<std::size_t>(key, value);
  else if (key == "per_alpha") cfg.per_alpha = parse_number<double>(key, value);
  else if (key == "per_beta") cfg.per_beta_start = parse_number<double>(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_number<int>(key, value);
  else if (key == "train_steps_per_iteration")
    cfg.train_steps_per_iteration = parse_number<int>(key, value);
  else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
  else if (key == "l2") cfg.l2 = parse_number<double>(key, value);
  else if (key == "c1") cfg.c1 = parse_number<int>(key, value);
  else if (key == "c2") cfg.c2 = parse_number<int>(key, value);
  else if (key == "encoding") {
    if (value == "masked") cfg.encoding = InputEncoding::Masked;
    else if (value == "raw") cfg.encoding = InputEncoding::RawValues;
    else throw std::invalid_argument("bad value for 'encoding': " + value);
  } else if (key == "heldout_size") cfg.heldout_size = parse_number<int>(key, value);
  else if (key == "heldout_sparsity") cfg.heldout_sparsity = parse_number<double>(key, value);
  else if (key == "patience") cfg.patience = parse_number<int>(key, value);
  else if (key == "checkpoint_every") cfg.checkpoint_every = parse_number<int>(key, value);
  else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "time_budget_seconds") cfg.time_budget_seconds = parse_number<double>(key, value);
  else if (key == "verbose") cfg.verbose = parse_bool(key, value);
  else throw std::invalid_argument("unknown training option '" + key + "'");
}

TrainConfig read_train_config(std::istream& in, TrainConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key=value");
    set_train_option(base, trim(std::string_view(body).substr(0, eq)),
                     trim(std::string_view(body).substr(eq + 1)));
  }
  return base;
}

TrainConfig read_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return read_train_config(in, std::move(base));
}

void write_train_config(const TrainConfig& cfg, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "N=" << cfg.N << '\n'
      << "sparsity_low=" << cfg.sparsity_low << '\n'
      << "sparsity_high=" << cfg.sparsity_high << '\n'
      << "episodes_per_iteration=" << cfg.episodes_per_iteration << '\n'
      << "simulations_per_move=" << cfg.simulations_per_move << '\n'
      << "iterations_max=" << cfg.iterations_max << '\n'
      << "reward_mode=" << (cfg.reward_mode == RewardMode::PerStep ? "perstep" : "terminal") << '\n'
      << "c=" << cfg.search.c << '\n'
      << "gamma=" << cfg.search.gamma << '\n'
      << "dirichlet_alpha=" << cfg.search.dirichlet_alpha << '\n'
      << "dirichlet_epsilon=" << cfg.search.dirichlet_epsilon << '\n'
      << "uct=" << (cfg.search.uct_formula == UctFormula::ParentVisit ? "parent" : "paper") << '\n'
      << "value_target=" << (cfg.value_target == ValueTarget::SearchRoot ? "search" : "return") << '\n'
      << "exploration_fraction=" << cfg.exploration_fraction << '\n'
      << "buffer_capacity=" << cfg.buffer_capacity << '\n'
      << "per_alpha=" << cfg.per_alpha << '\n'
      << "per_beta=" << cfg.per_beta_start << '\n'
      << "batch_size=" << cfg.batch_size << '\n'
      << "train_steps_per_iteration=" << cfg.train_steps_per_iteration << '\n'
      << "learning_rate=" << cfg.learning_rate << '\n'
      << "l2=" << cfg.l2 << '\n'
      << "c1=" << cfg.c1 << '\n'
      << "c2=" << cfg.c2 << '\n'
      << "encoding=" << (cfg.encoding == InputEncoding::Masked ? "masked" : "raw") << '\n'
      << "heldout_size=" << cfg.heldout_size << '\n'
      << "heldout_sparsity=" << cfg.heldout_sparsity << '\n'
      << "patience=" << cfg.patience << '\n'
      << "checkpoint_every=" << cfg.checkpoint_every << '\n';
  if (!cfg.checkpoint_dir.empty()) out << "checkpoint_dir=" << cfg.checkpoint_dir.string() << '\n';
  out << "seed=" << cfg.seed << '\n'
      << "time_budget_seconds=" << cfg.time_budget_seconds << '\n'
      << "verbose=" << (cfg.verbose ? "true" : "false") << '\n';
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Data

PatternMatrix generate_random_matrix(Index n, double sparsity, std::mt19937_64& rng) {
  if (n < 1) throw std::invalid_argument("matrix size must be positive");
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw std::invalid_argument("sparsity must be in [0, 1]");
  const std::size_t cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  const auto target = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(cells), std::ceil((1.0 - sparsity) * static_cast<double>(cells) - 1e-9)));
  std::vector<std::size_t> cell(cells);
  for (std::size_t k = 0; k < cells; ++k) cell[k] = k;
  for (std::size_t k = 0; k < target; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, cells - 1);
    std::swap(cell[k], cell[pick(rng)]);
  }
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < target; ++k)
    rows[cell[k] / static_cast<std::size_t>(n)].push_back(static_cast<Index>(cell[k] % static_cast<std::size_t>(n)));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)].push_back(i);
  return PatternMatrix(n, std::move(rows));
}

CsrMatrix random_values(const PatternMatrix& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> exponent(-2.0, 2.0);
  std::bernoulli_distribution negative(0.5);
  std::vector<CsrMatrix::Triplet> triplets;
  triplets.reserve(p.nnz());
  for (Index i = 0; i < p.n(); ++i)
    for (Index j : p.row(i)) {
      const double magnitude = std::pow(10.0, exponent(rng));
      triplets.push_back({i, j, negative(rng) ? -magnitude : magnitude});
    }
  return CsrMatrix::from_triplets(p.n(), triplets);
}

// ---------------------------------------------------------------------------
// Self-play

EpisodeRecord selfplay_episode(const CsrMatrix& matrix, const Evaluator& evaluator,
                               const TrainConfig& cfg, std::mt19937_64& rng) {
  if (matrix.n() != cfg.N) throw std::invalid_argument("self-play matrix must be N x N");
  const bool values = cfg.encoding == InputEncoding::RawValues;
  EliminationState state = EliminationState::new_episode(matrix, cfg.reward_mode, values);
  SearchConfig scfg = cfg.search;
  scfg.num_simulations = cfg.simulations_per_move;
  SearchTree tree(state, evaluator, scfg);

  const auto explore_moves =
      static_cast<int>(std::ceil(cfg.exploration_fraction * static_cast<double>(cfg.N)));
  EpisodeRecord record;
  for (int t = 0; !state.terminal(); ++t) {
    EpisodeStep s;
    s.input = encode_input(state, cfg.N, cfg.encoding);
    const SearchResult result = tree.search(rng);
    s.policy = result.visit_policy;
    s.search_value = result.root_value;
    const ActionId a = select_action(result.visit_policy, t < explore_moves ? 1.0 : 0.0, rng);
    StepResult next = step(state, a);
    s.reward = next.reward;
    s.action = a.row;
    record.pivots.push_back(a.row);
    record.total_reward += next.reward;
    record.steps.push_back(std::move(s));
    tree.advance(a);
    state = std::move(next.next);
  }
  double g = 0.0;
  for (auto it = record.steps.rbegin(); it != record.steps.rend(); ++it) {
    g = it->reward + cfg.search.gamma * g;
    it->return_to_go = g;
  }
  record.fill = symbolic_lu(pattern_of(matrix), record.pivots);
  if (record.fill.fill_in != state.created())
    throw std::logic_error("self-play fill disagrees with symbolic factorization");
  return record;
}

// ---------------------------------------------------------------------------
// Training loop

std::vector<CsrMatrix> heldout_set(const TrainConfig& cfg) {
  std::vector<CsrMatrix> out;
  out.reserve(static_cast<std::size_t>(std::max(cfg.heldout_size, 0)));
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x4845'4c44ULL));
  for (int k = 0; k < cfg.heldout_size; ++k)
    out.push_back(random_values(generate_random_matrix(cfg.N, cfg.heldout_sparsity, rng), rng));
  return out;
}

void write_metrics_csv(const std::vector<IterationMetrics>& metrics, std::ostream& out) {
  out << "iteration,mean_episode_fill,mean_loss_policy,mean_loss_value,wall_seconds\n";
  const auto old_precision = out.precision(10);
  for (const auto& m : metrics)
    out << m.iteration << ',' << m.mean_episode_fill << ',' << m.mean_loss_policy << ','
        << m.mean_loss_value << ',' << m.wall_seconds << '\n';
  out.precision(old_precision);
}

TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks) {
  if (cfg.N < 1 || cfg.episodes_per_iteration < 1 || cfg.batch_size < 1 || cfg.iterations_max < 0)
    throw std::invalid_argument("invalid training configuration");
  if (cfg.sparsity_low > cfg.sparsity_high) throw std::invalid_argument("sparsity_low > sparsity_high");

  const CnnArchitecture arch{cfg.N, cfg.c1, cfg.c2};
  CnnParameters params = hooks.initial ? *hooks.initial
                                       : CnnParameters::initialize(arch, derive_seed(cfg.seed, 0x494e4954ULL));
  if (!(params.arch() == arch)) throw std::invalid_argument("initial parameters do not match N, c1, c2");

  ReplayBuffer buffer(cfg.buffer_capacity, cfg.per_alpha, cfg.per_beta_start);
  AdamState adam;
  std::mt19937_64 batch_rng(derive_seed(cfg.seed, 0x42415443ULL));
  const std::vector<CsrMatrix> heldout = heldout_set(cfg);
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  TrainResult result;
  result.best_params = params;
  double best_fill = std::numeric_limits<double>::infinity();
  const auto start = std::chrono::steady_clock::now();

  for (int it = 1; it <= cfg.iterations_max; ++it) {
    const auto iter_start = std::chrono::steady_clock::now();
    const CnnEvaluator evaluator(params, cfg.encoding);

    std::vector<EpisodeRecord> episodes(static_cast<std::size_t>(cfg.episodes_per_iteration));
    parallel_for(episodes.size(), [&](std::size_t e) {
      std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(it), e));
      std::uniform_real_distribution<double> sp(cfg.sparsity_low, cfg.sparsity_high);
      const double sparsity = cfg.sparsity_low == cfg.sparsity_high ? cfg.sparsity_low : sp(rng);
      const CsrMatrix m = random_values(generate_random_matrix(cfg.N, sparsity, rng), rng);
      episodes[e] = selfplay_episode(m, evaluator, cfg, rng);
    });

    IterationMetrics metrics;
    metrics.iteration = it;
    for (const auto& ep : episodes) {
      metrics.selfplay_mean_fill += static_cast<double>(ep.fill.fill_in);
      metrics.selfplay_mean_reward += ep.total_reward;
      for (std::size_t k = 0; k < ep.steps.size(); ++k)
        buffer.push({ep.steps[k].input, ep.steps[k].policy, ep.value_target(k, cfg.value_target)});
    }
    metrics.selfplay_mean_fill /= static_cast<double>(episodes.size());
    metrics.selfplay_mean_reward /= static_cast<double>(episodes.size());

    // Importance-sampling exponent anneals linearly to 1.
    const double progress = cfg.iterations_max > 0 ? static_cast<double>(it) / cfg.iterations_max : 1.0;
    buffer.set_beta(cfg.per_beta_start + (1.0 - cfg.per_beta_start) * progress);

    const int steps = std::max(cfg.train_steps_per_iteration, 1);
    for (int s = 0; s < steps; ++s) {
      const TrainBatch batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), batch_rng);
      BatchLoss loss;
      if (hooks.freeze_parameters || cfg.train_steps_per_iteration == 0) {
        loss = batch_loss(params, batch, cfg.l2);
      } else {
        TrainStepResult r = train_step(params, batch, adam, cfg.learning_rate, cfg.l2);
        if (!r.applied) throw std::runtime_error("non-finite loss at iteration " + std::to_string(it));
        loss = std::move(r.loss);
      }
      buffer.update_priorities(batch.slots, loss.per_sample);
      metrics.mean_loss_policy += loss.policy;
      metrics.mean_loss_value += loss.value;
    }
    metrics.mean_loss_policy /= steps;
    metrics.mean_loss_value /= steps;

    metrics.mean_episode_fill = mean_heldout_fill(heldout, CnnEvaluator(params, cfg.encoding));
    metrics.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - iter_start).count();
    result.metrics.push_back(metrics);
    if (hooks.on_iteration) hooks.on_iteration(metrics);

    if (metrics.mean_episode_fill < best_fill) {
      best_fill = metrics.mean_episode_fill;
      result.best_iteration = it;
      result.best_params = params;
      if (!cfg.checkpoint_dir.empty()) save_checkpoint(params, cfg.checkpoint_dir / "best.ckpt");
    }
    if (!cfg.checkpoint_dir.empty()) {
      save_checkpoint(params, cfg.checkpoint_dir / "latest.ckpt");
      if (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0) {
        std::ostringstream name;
        name << "iter_" << std::setw(5) << std::setfill('0') << it << ".ckpt";
        save_checkpoint(params, cfg.checkpoint_dir / name.str());
      }
    }
    if (cfg.verbose)
      std::fprintf(stderr, "iter %d heldout_fill %.3f selfplay_fill %.3f loss_p %.4f loss_v %.4f (%.1fs)\n",
                   it, metrics.mean_episode_fill, metrics.selfplay_mean_fill, metrics.mean_loss_policy,
                   metrics.mean_loss_value, metrics.wall_seconds);

    if (cfg.patience > 0 && it - result.best_iteration >= cfg.patience) {
      result.stopped_on_plateau = true;
      break;
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cfg.time_budget_seconds > 0.0 && elapsed >= cfg.time_budget_seconds) break;
  }
  result.final_params = std::move(params);
  return result;
}

// ---------------------------------------------------------------------------
// Ablations

MaskAblation ablation_mask(const TrainConfig& cfg) {
  TrainConfig masked = cfg, raw = cfg;
  masked.encoding = InputEncoding::Masked;
  raw.encoding = InputEncoding::RawValues;
  if (!cfg.checkpoint_dir.empty()) {
    masked.checkpoint_dir = cfg.checkpoint_dir / "masked";
    raw.checkpoint_dir = cfg.checkpoint_dir / "unmasked";
  }
  return {train(masked), train(raw)};
}

std::vector<ExplorationRun> ablation_exploration(const TrainConfig& cfg,
                                                 const std::vector<double>& c_values) {
  std::vector<ExplorationRun> out;
  for (double c : c_values) {
    TrainConfig run = cfg;
    run.search.c = c;
    if (!cfg.checkpoint_dir.empty()) {
      std::ostringstream name;
      name << "c_" << c;
      run.checkpoint_dir = cfg.checkpoint_dir / name.str();
    }
    out.push_back({c, train(run)});
  }
  return out;
}

double smoothed_final_loss(const std::vector<IterationMetrics>& metrics, std::size_t window) {
  if (metrics.empty() || window == 0) throw std::invalid_argument("no metrics to smooth");
  const std::size_t k = std::min(window, metrics.size());
  double total = 0.0;
  for (std::size_t i = metrics.size() - k; i < metrics.size(); ++i)
    total += metrics[i].mean_loss_policy + metrics[i].mean_loss_value;
  return total / static_cast<double>(k);
}

unsigned worker_count() {
  if (const char* env = std::getenv("FILLIN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a simple combination.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

}  // namespace fillin
