#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "damarl/common.hpp"
#include "damarl/delay.hpp"
#include "damarl/tabular_game.hpp"

namespace damarl {

// Bijection between augmented states and flat indices.  An augmented state is
// the base state plus, for every agent, the oldest-first sequence of its k_i
// pending actions:
//
//   x = (s, q_1, ..., q_N),   q_i in A_i^{k_i}
//
// Flat layout is mixed radix with s most significant, then agents in order;
// within q_i the oldest pending action is most significant.
class AugmentedIndexer {
 public:
  AugmentedIndexer(const TabularMarkovGame& g, const DelaySpec& d)
      : num_states_(g.num_states),
        num_actions_(g.num_actions),
        k_(d.steps) {
    d.validate(g);
    radix_.resize(k_.size());
    count_ = num_states_;
    for (std::size_t i = 0; i < k_.size(); ++i) {
      std::int64_t r = 1;
      for (int j = 0; j < k_[i]; ++j) {
        r *= num_actions_[i];
        if (r > (std::int64_t{1} << 40))
          throw SizeError("pending-action space for agent " + std::to_string(i) +
                          " overflows the index range");
      }
      radix_[i] = r;
      if (count_ > (std::int64_t{1} << 40) / r)
        throw SizeError("augmented state space overflows the index range");
      count_ *= r;
    }
  }

  std::int64_t state_count() const { return count_; }
  int num_agents() const { return static_cast<int>(k_.size()); }
  int delay(int agent) const { return k_[agent]; }
  // Number of distinct pending sequences for one agent: |A_i|^{k_i}.
  std::int64_t pending_count(int agent) const { return radix_[agent]; }

  std::int64_t pending_index(int agent, const std::vector<int>& q) const {
    std::int64_t idx = 0;
    for (int a : q) idx = idx * num_actions_[agent] + a;
    return idx;
  }

  std::vector<int> pending_decode(int agent, std::int64_t idx) const {
    std::vector<int> q(k_[agent]);
    for (int j = k_[agent] - 1; j >= 0; --j) {
      q[j] = static_cast<int>(idx % num_actions_[agent]);
      idx /= num_actions_[agent];
    }
    return q;
  }

  std::int64_t encode(int s, const std::vector<std::vector<int>>& pendings) const {
    std::int64_t idx = s;
    for (std::size_t i = 0; i < k_.size(); ++i)
      idx = idx * radix_[i] + pending_index(static_cast<int>(i), pendings[i]);
    return idx;
  }

  void decode(std::int64_t idx, int& s, std::vector<std::vector<int>>& pendings) const {
    pendings.resize(k_.size());
    for (int i = static_cast<int>(k_.size()) - 1; i >= 0; --i) {
      pendings[i] = pending_decode(i, idx % radix_[i]);
      idx /= radix_[i];
    }
    s = static_cast<int>(idx);
  }

 private:
  int num_states_;
  std::vector<int> num_actions_;
  std::vector<int> k_;
  std::vector<std::int64_t> radix_;  // |A_i|^{k_i}
  std::int64_t count_ = 0;
};

// Materialises the delay-augmented game as an ordinary tabular game over the
// augmented state space.  One step of the augmented game does three things at
// once: the base game advances under the buffered (oldest pending) actions,
// every buffer shifts forward, and the freshly chosen joint action joins the
// buffer tails.  Rewards follow the executed action, so for a delayed agent
// they depend only on the augmented state, not on the fresh choice.  Each
// agent observes its base observation together with its own pending sequence;
// augmented observation indices are o_i(s) * |A_i|^{k_i} + index(q_i).
//
// The initial distribution is the base one with every buffer pinned to the
// initial sequences from `d`.  With all delays zero this returns a game equal
// to the input, element for element.
inline TabularMarkovGame augment_game(const TabularMarkovGame& g, const DelaySpec& d,
                                      std::int64_t max_elements = 50'000'000) {
  g.validate();
  d.validate(g);
  AugmentedIndexer ix(g, d);
  const std::int64_t X = ix.state_count();
  const std::int64_t ja = g.joint_action_count();
  if (X > max_elements || X * ja > max_elements / X)
    throw SizeError("augmented transition tensor would need " +
                    format_size(static_cast<std::uint64_t>(X) * ja * X) +
                    " entries (limit " + format_size(max_elements) + ")");

  TabularMarkovGame a;
  a.num_agents = g.num_agents;
  a.num_states = static_cast<int>(X);
  a.num_actions = g.num_actions;
  a.num_observations.resize(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i)
    a.num_observations[i] =
        static_cast<int>(g.num_observations[i] * ix.pending_count(i));

  a.initial_dist.assign(X, 0.0);
  for (int s = 0; s < g.num_states; ++s)
    a.initial_dist[ix.encode(s, d.initial_actions)] = g.initial_dist[s];

  a.transition.assign(static_cast<std::size_t>(X) * ja * X, 0.0);
  a.rewards.resize(g.num_agents);
  a.observation.resize(g.num_agents);
  for (int i = 0; i < g.num_agents; ++i) {
    a.rewards[i].assign(static_cast<std::size_t>(X) * g.num_actions[i], 0.0);
    a.observation[i].resize(X);
  }

  std::vector<std::vector<int>> pend;
  std::vector<int> fresh(g.num_agents, 0);
  for (std::int64_t x = 0; x < X; ++x) {
    int s = 0;
    ix.decode(x, s, pend);
    for (int i = 0; i < g.num_agents; ++i)
      a.observation[i][x] = static_cast<int>(
          g.observation[i][s] * ix.pending_count(i) + ix.pending_index(i, pend[i]));

    // Enumerate fresh joint actions in the same mixed-radix order as
    // joint_action_index, so `u` doubles as the flat action index.
    std::fill(fresh.begin(), fresh.end(), 0);
    for (std::int64_t u = 0; u < ja; ++u) {
      std::vector<int> heads(g.num_agents);
      std::vector<std::vector<int>> next_pend(g.num_agents);
      for (int i = 0; i < g.num_agents; ++i) {
        if (d.steps[i] == 0) {
          heads[i] = fresh[i];
          next_pend[i] = {};
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
          a.transition[(static_cast<std::size_t>(x) * ja + u) * X +
                       ix.encode(s2, next_pend)] += p;
      }
      for (int i = 0; i < g.num_agents; ++i)
        a.reward(i, static_cast<int>(x), fresh[i]) = g.reward(i, s, heads[i]);

      // mixed-radix increment, agent N-1 is the least significant digit
      for (int i = g.num_agents - 1; i >= 0; --i) {
        if (++fresh[i] < g.num_actions[i]) break;
        fresh[i] = 0;
      }
    }
  }
  a.validate();
  return a;
}

}  // namespace damarl
