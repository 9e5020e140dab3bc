#include "damarl/env.hpp"

#include <gtest/gtest.h>

#include "damarl/scenarios.hpp"

using namespace damarl;

namespace {

ScenarioConfig cfg(const std::string& id) {
  ScenarioConfig c;
  c.scenario = id;
  return c;
}

std::vector<Eigen::VectorXd> random_actions(const DelayedEnv& env, Rng& rng) {
  std::vector<Eigen::VectorXd> acts;
  for (int i = 0; i < env.num_agents(); ++i) {
    Eigen::VectorXd u(env.action_spec(i).dim());
    for (int j = 0; j < u.size(); ++j) u(j) = rng.uniform(-1.0, 1.0);
    acts.push_back(u);
  }
  return acts;
}

}  // namespace

TEST(DelayedEnv, AugmentedDimsAddPendingActionSlots) {
  DelayedEnv env(make_env(cfg("coop_nav")), {0, 1, 3});
  auto obs = env.reset(1);
  EXPECT_EQ(env.augmented_obs_dim(0), 18);
  EXPECT_EQ(env.augmented_obs_dim(1), 18 + 1 * 2);
  EXPECT_EQ(env.augmented_obs_dim(2), 18 + 3 * 2);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(obs[i].size(), env.augmented_obs_dim(i));
}

TEST(DelayedEnv, InitialPendingActionsAreZero) {
  DelayedEnv env(make_env(cfg("coop_nav")), {2, 2, 2});
  auto obs = env.reset(2);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(obs[i].tail(4), Eigen::VectorXd::Zero(4));
    EXPECT_EQ(env.act_part(i), Eigen::VectorXd::Zero(4));
  }
}

TEST(DelayedEnv, ZeroDelayIsBitwisePassthrough) {
  auto plain = make_env(cfg("coop_nav"));
  DelayedEnv wrapped(make_env(cfg("coop_nav")), {0, 0, 0});
  auto op = plain->reset(7);
  auto ow = wrapped.reset(7);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(op[i], ow[i]);
  Rng rng(3);
  for (int t = 0; t < 25; ++t) {
    auto acts = random_actions(wrapped, rng);
    StepResult rp = plain->step(acts);
    StepResult rw = wrapped.step(acts);
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(rp.obs[i], rw.obs[i]);
      EXPECT_EQ(wrapped.last_executed()[i], acts[i]);
    }
    EXPECT_EQ(rp.rewards, rw.rewards);
    EXPECT_EQ(rp.done, rw.done);
  }
}

TEST(DelayedEnv, ExecutedStreamIsChosenStreamShiftedByDelay) {
  const std::vector<int> delays = {0, 2, 5};
  DelayedEnv env(make_env(cfg("coop_nav")), delays);
  env.reset(11);
  Rng rng(4);
  std::vector<std::vector<Eigen::VectorXd>> chosen_history;
  for (int t = 0; t < 20; ++t) {
    auto acts = random_actions(env, rng);
    chosen_history.push_back(acts);
    env.step(acts);
    for (int i = 0; i < 3; ++i) {
      const int k = delays[i];
      if (t >= k) {
        EXPECT_EQ(env.last_executed()[i], chosen_history[t - k][i]);
      } else {
        EXPECT_EQ(env.last_executed()[i],
                  Eigen::VectorXd::Zero(env.action_spec(i).dim()));
      }
    }
  }
}

TEST(DelayedEnv, ActPartEqualsLastKChosenActionsOldestFirst) {
  const int k = 3;
  DelayedEnv env(make_env(cfg("coop_nav")), {k, k, k});
  env.reset(12);
  Rng rng(5);
  std::vector<std::vector<Eigen::VectorXd>> chosen_history;
  for (int t = 0; t < 10; ++t) {
    auto acts = random_actions(env, rng);
    chosen_history.push_back(acts);
    StepResult r = env.step(acts);
    if (t + 1 < k) continue;  // buffer still holds reset zeros
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd expect(k * 2);
      for (int j = 0; j < k; ++j)
        expect.segment(j * 2, 2) = chosen_history[t - (k - 1) + j][i];
      EXPECT_EQ(env.act_part(i), expect);
      EXPECT_EQ(r.obs[i].tail(k * 2), expect);
    }
  }
}

TEST(DelayedEnv, AugmentedObsHeadIsTheBaseObservation) {
  DelayedEnv env(make_env(cfg("predator_prey")), {1, 2, 3, 4});
  auto obs = env.reset(13);
  Rng rng(6);
  for (int t = 0; t < 5; ++t) {
    auto acts = random_actions(env, rng);
    StepResult r = env.step(acts);
    for (int i = 0; i < 4; ++i) {
      EXPECT_EQ(r.obs[i].head(env.base_obs_dim(i)),
                env.last_base_obs()[i]);
    }
  }
}

TEST(DelayedEnv, PhysicsFollowsExecutedNotChosenActions) {
  // With k = 1 the first chosen action must have no effect on step 1:
  // the executed action is the zero placeholder.
  DelayedEnv a(make_env(cfg("coop_nav")), {1, 1, 1});
  DelayedEnv b(make_env(cfg("coop_nav")), {1, 1, 1});
  a.reset(14);
  b.reset(14);
  Eigen::VectorXd push(2), still(2);
  push << 1.0, 0.0;
  still << 0.0, 0.0;
  StepResult ra = a.step({push, push, push});
  StepResult rb = b.step({still, still, still});
  for (int i = 0; i < 3; ++i) {
    // base obs identical at step 1 (both executed zeros)...
    EXPECT_EQ(ra.obs[i].head(18), rb.obs[i].head(18));
    // ...but the pending tails differ
    EXPECT_NE(ra.obs[0].tail(2), rb.obs[0].tail(2));
  }
  // at step 2 the delayed push lands and the states diverge
  ra = a.step({still, still, still});
  rb = b.step({still, still, still});
  EXPECT_NE(ra.obs[0].head(18), rb.obs[0].head(18));
}

TEST(DelayedEnv, RejectsNegativeDelayAndWrongCount) {
  EXPECT_THROW(DelayedEnv(make_env(cfg("coop_nav")), {1, 1}), ConfigError);
  EXPECT_THROW(DelayedEnv(make_env(cfg("coop_nav")), {1, -1, 1}), ConfigError);
  DelayedEnv env(make_env(cfg("coop_nav")), {1, 1, 1});
  env.reset(1);
  std::vector<Eigen::VectorXd> bad(3, Eigen::VectorXd::Zero(3));
  EXPECT_THROW(env.step(bad), ShapeError);
}

TEST(DelayedEnv, WorksOnIntersectionWithUniformDelay) {
  DelayedEnv env(make_env(cfg("intersection")), {8, 8, 8, 8});
  auto obs = env.reset(21);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(obs[i].size(), 8 + 8 * 1);
  Eigen::VectorXd brake(1);
  brake << -3.0;
  StepResult r = env.step(std::vector<Eigen::VectorXd>(4, brake));
  // braking is still in flight: executed action was the zero placeholder
  EXPECT_EQ(env.last_executed()[0], Eigen::VectorXd::Zero(1));
  EXPECT_DOUBLE_EQ(r.obs[0](1), 1.0);  // speed still 10 / 10
}
