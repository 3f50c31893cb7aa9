#include <doctest.h>

#include "fillin/training.hpp"

using namespace fillin;

// End-to-end: a short N=8 run must not leave the held-out greedy fill worse
// than after its first iteration.
TEST_CASE("held-out fill after 30 iterations is no worse than after the first") {
  TrainConfig cfg;
  cfg.N = 8;
  cfg.iterations_max = 30;
  cfg.patience = 0;
  cfg.seed = 8;
  const TrainResult r = train(cfg);
  REQUIRE(r.metrics.size() == 30);
  MESSAGE("iteration 1 fill " << r.metrics.front().mean_episode_fill << ", iteration 30 fill "
                              << r.metrics.back().mean_episode_fill);
  CHECK(r.metrics.back().mean_episode_fill <= r.metrics.front().mean_episode_fill);
}
