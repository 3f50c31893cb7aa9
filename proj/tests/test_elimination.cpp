#include <doctest.h>

#include <cmath>
#include <random>

#include "fillin/elimination.hpp"
#include "fillin/symbolic_lu.hpp"
#include "support.hpp"

using namespace fillin;
namespace ts = testsupport;

namespace {

std::vector<Index> rows_of(const std::vector<ActionId>& a) {
  std::vector<Index> r;
  for (auto x : a) r.push_back(x.row);
  return r;
}

}  // namespace

TEST_CASE("new episode bookkeeping") {
  const EliminationState s = EliminationState::new_episode(PatternMatrix::identity(4), RewardMode::PerStep);
  CHECK(s.col() == 0);
  CHECK(s.initial_nnz() == 4);
  CHECK(s.initial_zeros() == 12);
  CHECK(s.l_count() == 0);
  CHECK(s.u_count() == 0);
  CHECK_FALSE(s.terminal());
  CHECK(EliminationState::new_episode(PatternMatrix::dense(3), RewardMode::TerminalFraction).initial_zeros() == 0);
  CHECK_THROWS_AS(EliminationState::new_episode(PatternMatrix(0), RewardMode::PerStep), std::invalid_argument);
}

TEST_CASE("legal actions") {
  const PatternMatrix a(3, {{0}, {1}, {0, 2}});
  const EliminationState s = EliminationState::new_episode(a, RewardMode::PerStep);
  CHECK(rows_of(legal_actions(s)) == std::vector<Index>{0, 2});

  const PatternMatrix b(3, {{0, 2}, {0, 2}, {2}});
  EliminationState t = EliminationState::new_episode(b, RewardMode::PerStep);
  t = step(t, {0}).next;
  CHECK(t.col() == 1);
  CHECK(rows_of(legal_actions(t)) == std::vector<Index>{1});
  CHECK_THROWS_AS(step(t, {2}), std::invalid_argument);

  EliminationState d = EliminationState::new_episode(PatternMatrix::dense(4), RewardMode::PerStep);
  d = step(d, {3}).next;
  CHECK(rows_of(legal_actions(d)) == std::vector<Index>{1, 2, 3});
}

TEST_CASE("identity steps give zero reward") {
  EliminationState s = EliminationState::new_episode(PatternMatrix::identity(5), RewardMode::PerStep);
  while (!s.terminal()) {
    const auto legal = legal_actions(s);
    REQUIRE(legal.size() == 1);
    const StepResult r = step(s, legal[0]);
    CHECK(r.reward == 0.0);
    s = r.next;
  }
  CHECK_THROWS_AS(legal_actions(s), std::logic_error);
  CHECK_THROWS_AS(step(s, {0}), std::logic_error);
}

TEST_CASE("arrow first step reward matches the oracle's created count") {
  const PatternMatrix a = ts::arrow(4);
  const EliminationState s = EliminationState::new_episode(a, RewardMode::PerStep);
  const StepResult r = step(s, {0});
  const ts::Counts c = ts::dense_symbolic(a, {0, 1, 2, 3});
  CHECK(r.reward == -static_cast<double>(c.created[0]));
  CHECK(r.reward == -6.0);
  CHECK(r.created == 6);
}

TEST_CASE("episode rewards and counters agree with symbolic_lu") {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<Index> size(1, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const PatternMatrix a = ts::random_pattern(size(rng), 0.25, rng, trial % 2 == 0);
    EliminationState per = EliminationState::new_episode(a, RewardMode::PerStep);
    EliminationState term = EliminationState::new_episode(a, RewardMode::TerminalFraction);
    std::vector<Index> pivots;
    double sum_per = 0.0, sum_term = 0.0;
    std::int64_t previous = static_cast<std::int64_t>(a.nnz());
    int steps = 0;
    while (!per.terminal()) {
      const auto legal = legal_actions(per);
      CHECK(rows_of(legal) == rows_of(legal_actions(term)));
      std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
      const ActionId act = legal[pick(rng)];
      pivots.push_back(act.row);
      const StepResult rp = step(per, act);
      const StepResult rt = step(term, act);
      CHECK(rp.next.col() == per.col() + 1);
      if (!rt.next.terminal()) CHECK(rt.reward == 0.0);
      sum_per += rp.reward;
      sum_term += rt.reward;
      per = rp.next;
      term = rt.next;
      // Recorded factors plus the untouched trailing block never shrink.
      std::int64_t trailing = 0;
      for (Index r = per.col(); r < per.n(); ++r)
        for (Index c = per.col(); c < per.n(); ++c) trailing += per.occupied(r, c);
      const std::int64_t now = per.l_count() + per.u_count() + trailing;
      CHECK(now >= previous);
      previous = now;
      ++steps;
    }
    CHECK(steps == a.n());
    const FillReport f = symbolic_lu(a, pivots);
    CHECK(sum_per == -static_cast<double>(f.fill_in));
    CHECK(per.l_count() == f.nnz_L);
    CHECK(per.u_count() == f.nnz_U);
    CHECK(per.created() == f.fill_in);
    CHECK(Permutation(per.row_order()) == symbolic_lu_trace(a, pivots).rows);
    const double zeros = static_cast<double>(per.initial_zeros());
    if (zeros > 0) CHECK(std::abs(sum_term - sum_per / zeros) <= 1e-12);
    else CHECK(sum_term == 0.0);
  }
}

TEST_CASE("encode_input channels") {
  const EliminationState fresh = EliminationState::new_episode(PatternMatrix::dense(3), RewardMode::PerStep);
  const Tensor3 t = encode_input(fresh, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) {
      CHECK(t.at(0, y, x) == 1.0);
      CHECK(t.at(1, y, x) == (x == 0 ? 1.0 : 0.0));
      CHECK(t.at(2, y, x) == 0.0);
    }

  EliminationState s = EliminationState::new_episode(ts::arrow(4), RewardMode::PerStep);
  s = step(s, {0}).next;
  const Tensor3 mid = encode_input(s, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      CHECK(mid.at(0, y, x) == (s.occupied(y, x) ? 1.0 : 0.0));
      CHECK(mid.at(1, y, x) == (x == 1 ? 1.0 : 0.0));
      CHECK(mid.at(2, y, x) == ((y < 1 || x < 1) ? 1.0 : 0.0));
    }
  while (!s.terminal()) s = step(s, legal_actions(s)[0]).next;
  const Tensor3 end = encode_input(s, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(end.at(1, y, x) == 0.0);
  for (double v : end.data) CHECK((v == 0.0 || v == 1.0));

  CHECK_THROWS_AS(encode_input(s, 3), std::invalid_argument);
}

TEST_CASE("encode_input is invariant under value rescaling") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const PatternMatrix p = ts::random_pattern(6, 0.3, rng);
    const CsrMatrix a = ts::with_values(p, rng);
    const CsrMatrix b = ts::with_values(p, rng, 10.0, 1000.0);
    EliminationState sa = EliminationState::new_episode(a, RewardMode::PerStep, true);
    EliminationState sb = EliminationState::new_episode(b, RewardMode::PerStep, true);
    while (!sa.terminal()) {
      CHECK(encode_input(sa, 8) == encode_input(sb, 8));
      const auto legal = legal_actions(sa);
      sa = step(sa, legal.back()).next;
      sb = step(sb, legal.back()).next;
    }
  }
}

TEST_CASE("raw value encoding tracks numeric elimination") {
  const std::vector<CsrMatrix::Triplet> t{{0, 0, 2.0}, {0, 1, 4.0}, {1, 0, 1.0}, {1, 1, 3.0}};
  EliminationState s = EliminationState::new_episode(CsrMatrix::from_triplets(2, t), RewardMode::PerStep, true);
  const Tensor3 before = encode_input(s, 2, InputEncoding::RawValues);
  CHECK(before.at(0, 0, 1) == 4.0);
  s = step(s, {0}).next;
  // Row 1 becomes [1, 3 - 0.5 * 4] with the multiplier stored in L.
  CHECK(s.value(1, 1) == doctest::Approx(1.0));
  CHECK_THROWS(encode_input(EliminationState::new_episode(PatternMatrix::identity(2), RewardMode::PerStep), 2,
                            InputEncoding::RawValues));
}

TEST_CASE("pad_to_training_size") {
  const PatternMatrix a = ts::arrow(4);
  CHECK(pad_to_training_size(a, 4) == a);
  CHECK_THROWS_AS(pad_to_training_size(a, 3), std::invalid_argument);

  const PatternMatrix d2 = pad_to_training_size(PatternMatrix::dense(2), 4);
  CHECK(d2.nnz() == 6);
  CHECK(d2.contains(0, 0));
  CHECK(d2.contains(1, 1));
  CHECK(d2.contains(2, 3));
  CHECK(ts::dense_symbolic(d2, {0, 1, 2, 3}).total ==
        ts::dense_symbolic(PatternMatrix::dense(2), {0, 1}).total + 2);

  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 30; ++trial) {
    const PatternMatrix p = ts::random_pattern(4, 0.4, rng);
    const PatternMatrix padded = pad_to_training_size(p, 7);
    EliminationState s = EliminationState::new_episode(padded, RewardMode::PerStep);
    for (int k = 0; k < 3; ++k) {
      const auto legal = legal_actions(s);
      CHECK(legal.size() == 1);
      const StepResult r = step(s, legal[0]);
      CHECK(r.reward == 0.0);
      s = r.next;
    }
  }
}

TEST_CASE("encoding a small state equals encoding its padded twin") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    const PatternMatrix p = ts::random_pattern(5, 0.3, rng);
    const Index N = 8;
    EliminationState small = EliminationState::new_episode(p, RewardMode::PerStep);
    EliminationState big = EliminationState::new_episode(pad_to_training_size(p, N), RewardMode::PerStep);
    for (Index k = 0; k < N - p.n(); ++k) big = step(big, legal_actions(big)[0]).next;
    while (!small.terminal()) {
      CHECK(encode_input(small, N) == encode_input(big, N));
      const auto legal = legal_actions(small);
      const ActionId a = legal.back();
      small = step(small, a).next;
      big = step(big, {a.row + (N - p.n())}).next;
    }
  }
}
