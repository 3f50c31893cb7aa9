#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "fillin/training.hpp"
#include "support.hpp"

using namespace fillin;
namespace ts = testsupport;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.N = 6;
  cfg.c1 = 2;
  cfg.c2 = 3;
  cfg.episodes_per_iteration = 2;
  cfg.simulations_per_move = 8;
  cfg.iterations_max = 3;
  cfg.batch_size = 8;
  cfg.train_steps_per_iteration = 2;
  cfg.heldout_size = 4;
  cfg.buffer_capacity = 100;
  cfg.seed = 42;
  return cfg;
}

bool same_metrics(const std::vector<IterationMetrics>& a, const std::vector<IterationMetrics>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].iteration != b[k].iteration || a[k].mean_episode_fill != b[k].mean_episode_fill ||
        a[k].mean_loss_policy != b[k].mean_loss_policy || a[k].mean_loss_value != b[k].mean_loss_value ||
        a[k].selfplay_mean_fill != b[k].selfplay_mean_fill)
      return false;
  return true;
}

}  // namespace

TEST_CASE("random matrix generator") {
  std::mt19937_64 rng(179);
  for (int trial = 0; trial < 50; ++trial) {
    const PatternMatrix m = generate_random_matrix(20, 0.85, rng);
    CHECK(m.nnz() >= 60);
    CHECK(m.nnz() <= 80);
    CHECK(sparsity(m) >= 0.80);
    CHECK(sparsity(m) <= 0.85);
    for (Index i = 0; i < 20; ++i) CHECK(m.contains(i, i));
  }
  CHECK(generate_random_matrix(5, 0.0, rng) == PatternMatrix::dense(5));
  CHECK(generate_random_matrix(1, 0.9, rng) == PatternMatrix::identity(1));
  std::mt19937_64 a(1), b(1);
  CHECK(generate_random_matrix(12, 0.9, a) == generate_random_matrix(12, 0.9, b));
}

TEST_CASE("random values keep the pattern") {
  std::mt19937_64 rng(181);
  const PatternMatrix p = generate_random_matrix(10, 0.8, rng);
  const CsrMatrix v = random_values(p, rng);
  CHECK(pattern_of(v) == p);
  for (double x : v.values()) {
    CHECK(std::abs(x) >= 1e-2);
    CHECK(std::abs(x) <= 1e2);
  }
}

TEST_CASE("self-play on the identity") {
  TrainConfig cfg = tiny_config();
  std::mt19937_64 rng(191);
  UniformEvaluator u;
  for (RewardMode mode : {RewardMode::PerStep, RewardMode::TerminalFraction}) {
    cfg.reward_mode = mode;
    const EpisodeRecord r = selfplay_episode(CsrMatrix::identity(6), u, cfg, rng);
    CHECK(r.steps.size() == 6);
    for (std::size_t k = 0; k < r.steps.size(); ++k) {
      CHECK(r.steps[k].reward == 0.0);
      CHECK(r.value_target(k, ValueTarget::SearchRoot) == 0.0);
      CHECK(r.value_target(k, ValueTarget::ReturnToGo) == 0.0);
    }
    CHECK(r.fill.fill_in == 0);
  }
}

TEST_CASE("self-play records are internally consistent") {
  TrainConfig cfg = tiny_config();
  cfg.reward_mode = RewardMode::PerStep;
  std::mt19937_64 rng(193);
  DegreeHeuristicEvaluator h;
  for (int trial = 0; trial < 20; ++trial) {
    const CsrMatrix m = random_values(generate_random_matrix(6, 0.7, rng), rng);
    const EpisodeRecord r = selfplay_episode(m, h, cfg, rng);
    REQUIRE(r.steps.size() == 6);
    CHECK(symbolic_lu(pattern_of(m), r.pivots) == r.fill);
    double rtg = 0.0;
    for (std::size_t k = r.steps.size(); k-- > 0;) {
      rtg += r.steps[k].reward;
      CHECK(r.steps[k].return_to_go == doctest::Approx(rtg));
      const auto& pi = r.steps[k].policy;
      CHECK(pi.size() == 6);
      CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0));
      CHECK(std::isfinite(r.steps[k].search_value));
    }
    CHECK(rtg == -static_cast<double>(r.fill.fill_in));
    CHECK(r.total_reward == rtg);
  }
  CHECK_THROWS_AS(selfplay_episode(CsrMatrix::identity(5), h, cfg, rng), std::invalid_argument);
}

TEST_CASE("config file parsing") {
  std::istringstream in("# comment\nN = 8\nreward_mode=perstep\nuct=paper\nc=0.5  # trailing\n\nseed=9\n");
  const TrainConfig cfg = read_train_config(in);
  CHECK(cfg.N == 8);
  CHECK(cfg.reward_mode == RewardMode::PerStep);
  CHECK(cfg.search.uct_formula == UctFormula::PaperLiteral);
  CHECK(cfg.search.c == 0.5);
  CHECK(cfg.seed == 9);

  std::istringstream bad("N=8\nbogus=1\n");
  try {
    read_train_config(bad);
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  std::istringstream bad_value("N=eight\n");
  CHECK_THROWS_AS(read_train_config(bad_value), std::invalid_argument);

  TrainConfig custom = tiny_config();
  custom.learning_rate = 3.25e-4;
  custom.encoding = InputEncoding::RawValues;
  custom.value_target = ValueTarget::ReturnToGo;
  custom.checkpoint_dir = "ck";
  std::stringstream buf;
  write_train_config(custom, buf);
  const TrainConfig back = read_train_config(buf);
  std::stringstream again;
  write_train_config(back, again);
  CHECK(again.str() == buf.str());
  CHECK(back.learning_rate == custom.learning_rate);
}

TEST_CASE("metrics csv layout") {
  std::ostringstream out;
  write_metrics_csv({{1, 2.5, 0.75, 0.125, 0.5, 0, 0}}, out);
  CHECK(out.str() == "iteration,mean_episode_fill,mean_loss_policy,mean_loss_value,wall_seconds\n1,2.5,0.75,0.125,0.5\n");
}

TEST_CASE("training is deterministic under a fixed seed") {
  const TrainConfig cfg = tiny_config();
  const TrainResult a = train(cfg);
  const TrainResult b = train(cfg);
  CHECK(a.metrics.size() == 3);
  CHECK(same_metrics(a.metrics, b.metrics));
  CHECK(a.final_params == b.final_params);
  for (const auto& m : a.metrics) {
    CHECK(std::isfinite(m.mean_loss_policy));
    CHECK(m.wall_seconds >= 0.0);
  }
}

TEST_CASE("worker count does not change results") {
  TrainConfig cfg = tiny_config();
  cfg.episodes_per_iteration = 3;
  setenv("FILLIN_THREADS", "1", 1);
  const TrainResult a = train(cfg);
  setenv("FILLIN_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  const TrainResult b = train(cfg);
  unsetenv("FILLIN_THREADS");
  CHECK(same_metrics(a.metrics, b.metrics));
}

TEST_CASE("plateau stops within the patience window") {
  TrainConfig cfg = tiny_config();
  cfg.iterations_max = 50;
  cfg.patience = 3;
  TrainHooks hooks;
  hooks.freeze_parameters = true;
  int seen = 0;
  hooks.on_iteration = [&](const IterationMetrics&) { ++seen; };
  const TrainResult r = train(cfg, hooks);
  CHECK(r.stopped_on_plateau);
  CHECK(r.best_iteration == 1);
  CHECK(r.metrics.size() == 4);
  CHECK(seen == 4);
  CHECK(r.final_params == r.best_params);
}

TEST_CASE("checkpoints are written and loadable") {
  TrainConfig cfg = tiny_config();
  cfg.checkpoint_every = 2;
  cfg.checkpoint_dir = std::filesystem::temp_directory_path() / "fillin_test_ckpt";
  std::filesystem::remove_all(cfg.checkpoint_dir);
  const TrainResult r = train(cfg);
  CHECK(load_checkpoint(cfg.checkpoint_dir / "latest.ckpt") == r.final_params);
  CHECK(load_checkpoint(cfg.checkpoint_dir / "best.ckpt") == r.best_params);
  CHECK(std::filesystem::exists(cfg.checkpoint_dir / "iter_00002.ckpt"));
  std::filesystem::remove_all(cfg.checkpoint_dir);
}

TEST_CASE("ablations produce aligned logs") {
  TrainConfig cfg = tiny_config();
  cfg.iterations_max = 2;
  const MaskAblation m = ablation_mask(cfg);
  CHECK(m.masked.metrics.size() == 2);
  CHECK(m.unmasked.metrics.size() == 2);

  const auto runs = ablation_exploration(cfg, {0.1, 1.0, 10.0});
  CHECK(runs.size() == 3);
  CHECK(runs[2].c == 10.0);
  for (const auto& r : runs) CHECK(r.result.metrics.size() == 2);
  CHECK(smoothed_final_loss(runs[0].result.metrics, 5) ==
        doctest::Approx((runs[0].result.metrics[0].mean_loss_policy + runs[0].result.metrics[0].mean_loss_value +
                         runs[0].result.metrics[1].mean_loss_policy + runs[0].result.metrics[1].mean_loss_value) /
                        2.0));
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}
