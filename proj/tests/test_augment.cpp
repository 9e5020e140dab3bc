#include "damarl/augment.hpp"

#include <gtest/gtest.h>

using namespace damarl;

namespace {

// Single-agent deterministic chain: 2 states, 2 actions.  Action 0 stays,
// action 1 flips the state.  r(s, a) = 10 s + a, identity observation,
// starts in state 0.
TabularMarkovGame flip_mdp() {
  TabularMarkovGame g;
  g.num_agents = 1;
  g.num_states = 2;
  g.num_actions = {2};
  g.num_observations = {2};
  g.initial_dist = {1.0, 0.0};
  g.transition.assign(2 * 2 * 2, 0.0);
  for (int s = 0; s < 2; ++s) {
    g.prob(s, 0, s) = 1.0;
    g.prob(s, 1, 1 - s) = 1.0;
  }
  g.rewards = {{0, 1, 10, 11}};
  g.observation = {{0, 1}};
  return g;
}

}  // namespace

TEST(AugmentedIndexer, EncodeDecodeRoundTripsEveryIndex) {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    TabularMarkovGame g = make_random_game(rng);
    DelaySpec d = make_random_delays(rng, g, 2);
    AugmentedIndexer ix(g, d);
    int s = 0;
    std::vector<std::vector<int>> pend;
    for (std::int64_t x = 0; x < ix.state_count(); ++x) {
      ix.decode(x, s, pend);
      EXPECT_EQ(ix.encode(s, pend), x);
    }
  }
}

TEST(AugmentedIndexer, StateCountIsProductOfPendingSpaces) {
  TabularMarkovGame g = flip_mdp();
  DelaySpec d = DelaySpec::uniform(1, 3);
  AugmentedIndexer ix(g, d);
  EXPECT_EQ(ix.state_count(), 2 * 8);
  EXPECT_EQ(ix.pending_count(0), 8);
}

// Hand-derived expectation for the flip chain with delay 1, buffer
// pre-filled with action 0.  Augmented states indexed x = 2 s + q where q is
// the single pending action.  The head q executes (next base state s XOR q)
// and the fresh action u becomes the new pending entry:
//
//   x = (s, q) --u--> (s XOR q, u)  with probability 1
//
// and the reward for any fresh u is r(s, q) = 10 s + q.
TEST(AugmentGame, MatchesHandDerivedSingleAgentChain) {
  TabularMarkovGame g = flip_mdp();
  DelaySpec d;
  d.steps = {1};
  d.initial_actions = {{0}};
  TabularMarkovGame a = augment_game(g, d);

  EXPECT_EQ(a.num_states, 4);
  EXPECT_EQ(a.num_actions, g.num_actions);
  EXPECT_EQ(a.num_observations[0], 4);

  const std::vector<double> expected_initial = {1, 0, 0, 0};
  EXPECT_EQ(a.initial_dist, expected_initial);

  // transition[x][u][x']: from (s,q) action u lands in (s XOR q, u).
  std::vector<double> expected_p(4 * 2 * 4, 0.0);
  for (int s = 0; s < 2; ++s)
    for (int q = 0; q < 2; ++q)
      for (int u = 0; u < 2; ++u) {
        int x = 2 * s + q;
        int x2 = 2 * (s ^ q) + u;
        expected_p[(x * 2 + u) * 4 + x2] = 1.0;
      }
  EXPECT_EQ(a.transition, expected_p);

  // reward[x][u] = 10 s + q, independent of the fresh action u.
  const std::vector<double> expected_r = {0, 0, 1, 1, 10, 10, 11, 11};
  EXPECT_EQ(a.rewards[0], expected_r);

  // identity base observation with the pending action appended
  const std::vector<int> expected_obs = {0, 1, 2, 3};
  EXPECT_EQ(a.observation[0], expected_obs);
}

TEST(AugmentGame, ZeroDelayReturnsTheGameUnchanged) {
  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    TabularMarkovGame g = make_random_game(rng);
    TabularMarkovGame a = augment_game(g, DelaySpec::zeros(g.num_agents));
    EXPECT_EQ(a.num_states, g.num_states);
    EXPECT_EQ(a.num_observations, g.num_observations);
    EXPECT_EQ(a.initial_dist, g.initial_dist);
    EXPECT_EQ(a.transition, g.transition);
    EXPECT_EQ(a.rewards, g.rewards);
    EXPECT_EQ(a.observation, g.observation);
  }
}

TEST(AugmentGame, AugmentedTransitionRowsAreDistributions) {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    TabularMarkovGame g = make_random_game(rng);
    DelaySpec d = make_random_delays(rng, g, 2);
    AugmentedIndexer ix(g, d);
    if (ix.state_count() > 400) continue;  // keep the tensor small
    EXPECT_NO_THROW(augment_game(g, d).validate());
  }
}

TEST(AugmentGame, RejectsMismatchedDelaySpec) {
  TabularMarkovGame g = flip_mdp();
  DelaySpec d;
  d.steps = {1, 1};  // two agents' worth of delays for a one-agent game
  d.initial_actions = {{0}, {0}};
  EXPECT_THROW(augment_game(g, d), ConfigError);
  d.steps = {-1};
  d.initial_actions = {{}};
  EXPECT_THROW(augment_game(g, d), ConfigError);
}

TEST(AugmentGame, RefusesOversizedStateSpaces) {
  TabularMarkovGame g = flip_mdp();
  DelaySpec d = DelaySpec::uniform(1, 3);  // 16 augmented states
  EXPECT_THROW(augment_game(g, d, /*max_elements=*/100), SizeError);
}
