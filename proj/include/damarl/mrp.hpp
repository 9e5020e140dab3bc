#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "damarl/augment.hpp"
#include "damarl/common.hpp"
#include "damarl/delay.hpp"
#include "damarl/tabular_game.hpp"

namespace damarl {

// Stochastic policy for one agent as a table: one row per observation index,
// one column per action, rows are probability distributions.
struct PolicyTable {
  int num_rows = 0;
  int num_actions = 0;
  std::vector<double> probs;  // row-major

  double p(int row, int action) const {
    return probs[static_cast<std::size_t>(row) * num_actions + action];
  }
  double& p(int row, int action) {
    return probs[static_cast<std::size_t>(row) * num_actions + action];
  }

  void validate(double tol = 1e-9) const {
    if (num_rows <= 0 || num_actions <= 0 ||
        probs.size() != static_cast<std::size_t>(num_rows) * num_actions)
      throw ConfigError("policy table has inconsistent dimensions");
    for (int r = 0; r < num_rows; ++r) {
      double sum = 0.0;
      for (int a = 0; a < num_actions; ++a) {
        if (p(r, a) < -tol)
          throw ConfigError("policy row " + std::to_string(r) +
                            " has a negative probability");
        sum += p(r, a);
      }
      if (std::abs(sum - 1.0) > tol)
        throw ConfigError("policy row " + std::to_string(r) + " sums to " +
                          std::to_string(sum) + ", not 1");
    }
  }
};

using PolicySet = std::vector<PolicyTable>;

// Markov reward process: the closed-loop chain obtained by running fixed
// policies in a game.  kappa is the state-to-state kernel, state_rewards[i]
// is agent i's expected one-step reward as a function of state.
struct MrpKernel {
  std::int64_t num_states = 0;
  std::vector<double> initial_dist;                // [x]
  std::vector<double> kappa;                       // [x][x'] row-major
  std::vector<std::vector<double>> state_rewards;  // per agent, [x]

  double k(std::int64_t x, std::int64_t x2) const {
    return kappa[x * num_states + x2];
  }

  void validate(double tol = 1e-9) const {
    for (std::int64_t x = 0; x < num_states; ++x) {
      double row = 0.0;
      for (std::int64_t x2 = 0; x2 < num_states; ++x2) row += k(x, x2);
      if (std::abs(row - 1.0) > tol)
        throw NumericError("kernel row " + std::to_string(x) + " sums to " +
                           std::to_string(row));
    }
  }
};

// Element-wise comparison of two kernels over the same state space.
struct KernelDiff {
  double max_kernel = 0.0;
  double max_reward = 0.0;
  double max_initial = 0.0;

  double max_all() const { return std::max({max_kernel, max_reward, max_initial}); }
};

inline KernelDiff kernel_diff(const MrpKernel& a, const MrpKernel& b) {
  if (a.num_states != b.num_states || a.state_rewards.size() != b.state_rewards.size())
    throw ShapeError("kernel comparison: state spaces differ");
  KernelDiff d;
  for (std::size_t i = 0; i < a.kappa.size(); ++i)
    d.max_kernel = std::max(d.max_kernel, std::abs(a.kappa[i] - b.kappa[i]));
  for (std::size_t i = 0; i < a.initial_dist.size(); ++i)
    d.max_initial = std::max(d.max_initial, std::abs(a.initial_dist[i] - b.initial_dist[i]));
  for (std::size_t n = 0; n < a.state_rewards.size(); ++n)
    for (std::size_t i = 0; i < a.state_rewards[n].size(); ++i)
      d.max_reward = std::max(d.max_reward,
                              std::abs(a.state_rewards[n][i] - b.state_rewards[n][i]));
  return d;
}

// Closed-loop chain of a tabular game under fixed per-agent policies:
//
//   kappa(x' | x)   = sum_u p(x' | x, u) * prod_i pi_i(u_i | o_i(x))
//   r_bar_i(x)      = sum_{a_i} pi_i(a_i | o_i(x)) * r_i(x, a_i)
//
// policies[i] must have one row per observation of agent i in `g`.
inline MrpKernel mrp_of_game(const TabularMarkovGame& g, const PolicySet& policies) {
  if (static_cast<int>(policies.size()) != g.num_agents)
    throw ConfigError("need one policy per agent");
  for (int i = 0; i < g.num_agents; ++i) {
    policies[i].validate();
    if (policies[i].num_rows != g.num_observations[i] ||
        policies[i].num_actions != g.num_actions[i])
      throw ConfigError("policy table " + std::to_string(i) +
                        " does not match the game's observation/action space");
  }
  const std::int64_t S = g.num_states;
  const std::int64_t ja = g.joint_action_count();
  MrpKernel m;
  m.num_states = S;
  m.initial_dist = g.initial_dist;
  m.kappa.assign(static_cast<std::size_t>(S) * S, 0.0);
  m.state_rewards.assign(g.num_agents, std::vector<double>(S, 0.0));

  std::vector<int> u(g.num_agents, 0);
  for (int s = 0; s < S; ++s) {
    std::fill(u.begin(), u.end(), 0);
    for (std::int64_t flat = 0; flat < ja; ++flat) {
      double w = 1.0;
      for (int i = 0; i < g.num_agents; ++i) w *= policies[i].p(g.observation[i][s], u[i]);
      if (w != 0.0)
        for (int s2 = 0; s2 < S; ++s2)
          m.kappa[static_cast<std::size_t>(s) * S + s2] += w * g.prob(s, flat, s2);
      for (int i = g.num_agents - 1; i >= 0; --i) {
        if (++u[i] < g.num_actions[i]) break;
        u[i] = 0;
      }
    }
    for (int i = 0; i < g.num_agents; ++i) {
      double r = 0.0;
      for (int a = 0; a < g.num_actions[i]; ++a)
        r += policies[i].p(g.observation[i][s], a) * g.reward(i, s, a);
      m.state_rewards[i][s] = r;
    }
  }
  return m;
}

// Route A: materialise the augmented game, then apply the generic closed-loop
// construction above.
inline MrpKernel mrp_via_augmentation(const TabularMarkovGame& g, const DelaySpec& d,
                                      const PolicySet& policies) {
  return mrp_of_game(augment_game(g, d), policies);
}

// Route B: build the closed-loop kernel of the delayed process directly over
// (state, pending actions), without ever materialising the augmented game's
// transition tensor.  For each augmented state the policies choose the fresh
// actions; what executes is the buffer head (or the fresh action itself for a
// zero-delay agent); buffers shift and the fresh actions join the tails.
// Expected rewards follow the executed action: deterministic for a delayed
// agent (the head is part of the state), policy-averaged for k_i == 0.
//
// `policies` uses the same augmented observation indexing as route A:
// row = o_i(s) * |A_i|^{k_i} + index(pending_i).
inline MrpKernel delayed_mrp_kernel(const TabularMarkovGame& g, const DelaySpec& d,
                                    const PolicySet& policies) {
  g.validate();
  d.validate(g);
  AugmentedIndexer ix(g, d);
  const std::int64_t X = ix.state_count();
  if (static_cast<int>(policies.size()) != g.num_agents)
    throw ConfigError("need one policy per agent");
  for (int i = 0; i < g.num_agents; ++i) {
    policies[i].validate();
    if (policies[i].num_rows !=
            static_cast<std::int64_t>(g.num_observations[i]) * ix.pending_count(i) ||
        policies[i].num_actions != g.num_actions[i])
      throw ConfigError("policy table " + std::to_string(i) +
                        " does not match the augmented observation space");
  }

  MrpKernel m;
  m.num_states = X;
  m.initial_dist.assign(X, 0.0);
  for (int s = 0; s < g.num_states; ++s)
    m.initial_dist[ix.encode(s, d.initial_actions)] = g.initial_dist[s];
  m.kappa.assign(static_cast<std::size_t>(X) * X, 0.0);
  m.state_rewards.assign(g.num_agents, std::vector<double>(X, 0.0));

  const std::int64_t ja = g.joint_action_count();
  std::vector<std::vector<int>> pend;
  std::vector<int> obs_row(g.num_agents);
  std::vector<int> fresh(g.num_agents, 0);
  std::vector<int> heads(g.num_agents);
  std::vector<std::vector<int>> next_pend(g.num_agents);
  for (std::int64_t x = 0; x < X; ++x) {
    int s = 0;
    ix.decode(x, s, pend);
    for (int i = 0; i < g.num_agents; ++i)
      obs_row[i] = static_cast<int>(g.observation[i][s] * ix.pending_count(i) +
                                    ix.pending_index(i, pend[i]));

    std::fill(fresh.begin(), fresh.end(), 0);
    for (std::int64_t flat = 0; flat < ja; ++flat) {
      double w = 1.0;
      for (int i = 0; i < g.num_agents; ++i) w *= policies[i].p(obs_row[i], fresh[i]);
      if (w != 0.0) {
        for (int i = 0; i < g.num_agents; ++i) {
          if (d.steps[i] == 0) {
            heads[i] = fresh[i];
            next_pend[i].clear();
          } else {
            heads[i] = pend[i][0];
            next_pend[i].assign(pend[i].begin() + 1, pend[i].end());
            next_pend[i].push_back(fresh[i]);
          }
        }
        const std::int64_t base_row = g.joint_action_index(heads);
        for (int s2 = 0; s2 < g.num_states; ++s2) {
          double p = g.prob(s, base_row, s2);
          if (p != 0.0)
            m.kappa[static_cast<std::size_t>(x) * X + ix.encode(s2, next_pend)] += w * p;
        }
      }
      for (int i = g.num_agents - 1; i >= 0; --i) {
        if (++fresh[i] < g.num_actions[i]) break;
        fresh[i] = 0;
      }
    }
    for (int i = 0; i < g.num_agents; ++i) {
      if (d.steps[i] == 0) {
        double r = 0.0;
        for (int a = 0; a < g.num_actions[i]; ++a)
          r += policies[i].p(obs_row[i], a) * g.reward(i, s, a);
        m.state_rewards[i][x] = r;
      } else {
        m.state_rewards[i][x] = g.reward(i, s, pend[i][0]);
      }
    }
  }
  return m;
}

// Result of one equivalence check between the two kernel constructions.
struct EquivalenceReport {
  std::int64_t augmented_states = 0;
  KernelDiff diff;
  double tolerance = 0.0;
  bool pass = false;
};

// Checks that the closed-loop process of the materialised augmented game and
// the directly-built delayed-process kernel agree element-wise: transition
// kernel, expected state rewards and initial distribution.  Refuses to
// enumerate augmented state spaces larger than `cap` states.
inline EquivalenceReport verify_delay_equivalence(const TabularMarkovGame& g,
                                                  const DelaySpec& d,
                                                  const PolicySet& policies,
                                                  double tol = 1e-12,
                                                  std::int64_t cap = 100'000) {
  g.validate();
  d.validate(g);
  AugmentedIndexer ix(g, d);
  if (ix.state_count() > cap)
    throw SizeError("augmented state space has " + format_size(ix.state_count()) +
                    " states, above the enumeration cap of " + format_size(cap) +
                    "; reduce |S|, action counts or delays");
  EquivalenceReport rep;
  rep.augmented_states = ix.state_count();
  rep.tolerance = tol;
  MrpKernel via_aug = mrp_via_augmentation(g, d, policies);
  MrpKernel direct = delayed_mrp_kernel(g, d, policies);
  via_aug.validate();
  direct.validate();
  rep.diff = kernel_diff(via_aug, direct);
  rep.pass = rep.diff.max_all() <= tol;
  return rep;
}

// Random policy tables over the augmented observation space, rows bounded
// away from determinism so every joint action carries weight.
inline PolicySet make_random_policies(Rng& rng, const TabularMarkovGame& g,
                                      const DelaySpec& d) {
  AugmentedIndexer ix(g, d);
  PolicySet policies(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i) {
    PolicyTable& t = policies[i];
    t.num_rows = static_cast<int>(g.num_observations[i] * ix.pending_count(i));
    t.num_actions = g.num_actions[i];
    t.probs.resize(static_cast<std::size_t>(t.num_rows) * t.num_actions);
    for (int r = 0; r < t.num_rows; ++r) {
      double sum = 0.0;
      for (int a = 0; a < t.num_actions; ++a) {
        t.p(r, a) = 0.05 + rng.uniform();
        sum += t.p(r, a);
      }
      for (int a = 0; a < t.num_actions; ++a) t.p(r, a) /= sum;
    }
  }
  return policies;
}

}  // namespace damarl
