#include "damarl/mrp.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace damarl;

namespace {

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

// Random instance with the augmented state count capped so the materialised
// route stays cheap; delays are drawn in [0, 2] and decremented only as far
// as needed to fit the budget.
void draw_instance(std::uint64_t seed, TabularMarkovGame& g, DelaySpec& d,
                   PolicySet& policies) {
  Rng rng(sub_seed(seed, Stream::Instance));
  g = make_random_game(rng, /*max_states=*/4, /*max_agents=*/3, /*max_actions=*/3);
  d = make_random_delays(rng, g, /*kmax=*/2);
  auto states = [&] { return AugmentedIndexer(g, d).state_count(); };
  while (states() > 500) {
    int arg = 0;
    for (int i = 0; i < g.num_agents; ++i)
      if (d.steps[i] > d.steps[arg]) arg = i;
    d.steps[arg] -= 1;
    d.initial_actions[arg].pop_back();
  }
  policies = make_random_policies(rng, g, d);
}

}  // namespace

// Two-agent, two-state game with asymmetric observations; the closed-loop
// kernel and per-agent expected rewards below are worked out by hand.
TEST(MrpOfGame, MatchesHandComputedKernel) {
  TabularMarkovGame g;
  g.num_agents = 2;
  g.num_states = 2;
  g.num_actions = {2, 2};
  g.num_observations = {2, 1};
  g.initial_dist = {1.0, 0.0};
  g.transition.assign(2 * 4 * 2, 0.0);
  // p(0 | s, a) = 0.5 + 0.1 a0 - 0.2 a1 for both states
  for (int s = 0; s < 2; ++s)
    for (int a0 = 0; a0 < 2; ++a0)
      for (int a1 = 0; a1 < 2; ++a1) {
        double p0 = 0.5 + 0.1 * a0 - 0.2 * a1;
        g.prob(s, g.joint_action_index({a0, a1}), 0) = p0;
        g.prob(s, g.joint_action_index({a0, a1}), 1) = 1.0 - p0;
      }
  g.rewards = {{1, 2, 3, 4}, {-1, 5, 0, 2}};
  g.observation = {{0, 1}, {0, 0}};
  g.validate();

  PolicySet pis(2);
  pis[0] = {2, 2, {0.7, 0.3, 0.2, 0.8}};
  pis[1] = {1, 2, {0.4, 0.6}};

  MrpKernel m = mrp_of_game(g, pis);

  // s=0: 0.7*0.4*0.5 + 0.7*0.6*0.3 + 0.3*0.4*0.6 + 0.3*0.6*0.4 = 0.41
  // s=1: 0.2*0.4*0.5 + 0.2*0.6*0.3 + 0.8*0.4*0.6 + 0.8*0.6*0.4 = 0.46
  EXPECT_NEAR(m.k(0, 0), 0.41, 1e-12);
  EXPECT_NEAR(m.k(0, 1), 0.59, 1e-12);
  EXPECT_NEAR(m.k(1, 0), 0.46, 1e-12);
  EXPECT_NEAR(m.k(1, 1), 0.54, 1e-12);
  EXPECT_NEAR(m.state_rewards[0][0], 0.7 * 1 + 0.3 * 2, 1e-12);
  EXPECT_NEAR(m.state_rewards[0][1], 0.2 * 3 + 0.8 * 4, 1e-12);
  EXPECT_NEAR(m.state_rewards[1][0], 0.4 * -1 + 0.6 * 5, 1e-12);
  EXPECT_NEAR(m.state_rewards[1][1], 0.4 * 0 + 0.6 * 2, 1e-12);
}

// Flip chain with one step of delay: from x = (s, q) the head q executes,
// so the chain lands in (s XOR q, u) with the policy's probability of the
// fresh action u.  Expected rewards are deterministic in the augmented state.
TEST(DelayedMrpKernel, MatchesHandComputedKernel) {
  TabularMarkovGame g = flip_mdp();
  DelaySpec d;
  d.steps = {1};
  d.initial_actions = {{0}};
  PolicySet pis(1);
  pis[0] = {4, 2, {0.9, 0.1, 0.8, 0.2, 0.7, 0.3, 0.6, 0.4}};

  MrpKernel m = delayed_mrp_kernel(g, d, pis);
  ASSERT_EQ(m.num_states, 4);

  const std::vector<double> expected_kappa = {
      0.9, 0.1, 0.0, 0.0,   // x0 = (0,0) -> s'=0, new pending ~ pi(.|x0)
      0.0, 0.0, 0.8, 0.2,   // x1 = (0,1) -> s'=1
      0.0, 0.0, 0.7, 0.3,   // x2 = (1,0) -> s'=1
      0.6, 0.4, 0.0, 0.0};  // x3 = (1,1) -> s'=0
  ASSERT_EQ(m.kappa.size(), expected_kappa.size());
  for (std::size_t i = 0; i < expected_kappa.size(); ++i)
    EXPECT_DOUBLE_EQ(m.kappa[i], expected_kappa[i]) << "entry " << i;

  const std::vector<double> expected_r = {0, 1, 10, 11};
  for (int x = 0; x < 4; ++x)
    EXPECT_DOUBLE_EQ(m.state_rewards[0][x], expected_r[x]);

  const std::vector<double> expected_init = {1, 0, 0, 0};
  EXPECT_EQ(m.initial_dist, expected_init);
}

// The central consistency check: over many random games, delays and
// policies, the kernel built through explicit augmentation and the kernel
// built directly from the buffered process must agree element-wise.
TEST(DelayEquivalence, FiveHundredRandomInstancesAgree) {
  double worst = 0.0;
  int delayed_instances = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    TabularMarkovGame g;
    DelaySpec d;
    PolicySet pis;
    draw_instance(seed, g, d, pis);
    if (*std::max_element(d.steps.begin(), d.steps.end()) > 0) ++delayed_instances;
    EquivalenceReport rep = verify_delay_equivalence(g, d, pis, 1e-12);
    EXPECT_TRUE(rep.pass) << "seed " << seed << " max diff " << rep.diff.max_all();
    worst = std::max(worst, rep.diff.max_all());
  }
  EXPECT_LT(worst, 1e-12);
  // the sampler must actually exercise delays, not just the k = 0 corner
  EXPECT_GT(delayed_instances, 300);
}

TEST(DelayEquivalence, ZeroDelayReducesToThePlainClosedLoopKernel) {
  for (std::uint64_t seed = 1000; seed < 1010; ++seed) {
    Rng rng(seed);
    TabularMarkovGame g = make_random_game(rng);
    DelaySpec d = DelaySpec::zeros(g.num_agents);
    PolicySet pis = make_random_policies(rng, g, d);

    EquivalenceReport rep = verify_delay_equivalence(g, d, pis);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.diff.max_all(), 0.0);  // identical accumulation order

    // and both coincide exactly with the undelayed construction
    MrpKernel plain = mrp_of_game(g, pis);
    MrpKernel direct = delayed_mrp_kernel(g, d, pis);
    EXPECT_EQ(kernel_diff(plain, direct).max_all(), 0.0);
  }
}

TEST(DelayEquivalence, MixedZeroAndPositiveDelays) {
  Rng rng(42);
  TabularMarkovGame g = make_random_game(rng, 3, 2, 3);
  while (g.num_agents != 2) g = make_random_game(rng, 3, 2, 3);
  DelaySpec d;
  d.steps = {0, 2};
  d.initial_actions = {{}, {0, std::min(1, g.num_actions[1] - 1)}};
  PolicySet pis = make_random_policies(rng, g, d);
  EquivalenceReport rep = verify_delay_equivalence(g, d, pis);
  EXPECT_TRUE(rep.pass) << "max diff " << rep.diff.max_all();
}

// A deliberate perturbation of one kernel entry must be detected at the
// perturbation's own magnitude; the comparison cannot round it away.
TEST(DelayEquivalence, DetectsSingleEntryPerturbation) {
  TabularMarkovGame g;
  DelaySpec d;
  PolicySet pis;
  draw_instance(7, g, d, pis);
  MrpKernel a = mrp_via_augmentation(g, d, pis);
  MrpKernel b = delayed_mrp_kernel(g, d, pis);
  b.kappa[b.kappa.size() / 2] += 1e-6;
  KernelDiff diff = kernel_diff(a, b);
  EXPECT_GE(diff.max_kernel, 0.9e-6);
  EXPECT_GT(diff.max_all(), 1e-12);
}

TEST(DelayEquivalence, RejectsUnnormalisedPolicyRows) {
  TabularMarkovGame g = flip_mdp();
  DelaySpec d;
  d.steps = {1};
  d.initial_actions = {{0}};
  PolicySet pis(1);
  pis[0] = {4, 2, {0.9, 0.1, 0.8, 0.2, 0.72, 0.3, 0.6, 0.4}};  // row 2 sums to 1.02
  EXPECT_THROW(verify_delay_equivalence(g, d, pis), ConfigError);
  EXPECT_THROW(delayed_mrp_kernel(g, d, pis), ConfigError);
  EXPECT_THROW(mrp_via_augmentation(g, d, pis), ConfigError);
}

TEST(DelayEquivalence, RejectsPolicyOverWrongObservationSpace) {
  TabularMarkovGame g = flip_mdp();
  DelaySpec d;
  d.steps = {1};
  d.initial_actions = {{0}};
  PolicySet pis(1);
  pis[0] = {2, 2, {0.5, 0.5, 0.5, 0.5}};  // base rows, not augmented rows
  EXPECT_THROW(delayed_mrp_kernel(g, d, pis), ConfigError);
}

TEST(DelayEquivalence, EnforcesEnumerationCap) {
  TabularMarkovGame g = flip_mdp();
  DelaySpec d = DelaySpec::uniform(1, 3);  // 16 augmented states
  Rng rng(1);
  PolicySet pis = make_random_policies(rng, g, d);
  try {
    verify_delay_equivalence(g, d, pis, 1e-12, /*cap=*/10);
    FAIL() << "expected SizeError";
  } catch (const SizeError& e) {
    EXPECT_NE(std::string(e.what()).find("16"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("10"), std::string::npos);
  }
}
