#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "damarl/checkpoint.hpp"
#include "damarl/common.hpp"
#include "damarl/learner.hpp"
#include "damarl/replay.hpp"
#include "damarl/scenarios.hpp"

namespace damarl {

struct TrainerConfig {
  ScenarioConfig scenario;
  std::vector<int> delay_steps;  // per agent; empty means no delay
  LearnerConfig learner;
  int episodes = 10000;
  int batch = 1024;
  std::size_t replay_capacity = 1'000'000;
  int warmup = 1024;  // stored transitions before updates begin
  double noise_start = 0.3;
  double noise_end = 0.05;
  double noise_frac = 0.6;  // fraction of episodes spent annealing
  std::uint64_t seed = 1;
  std::string out_dir;       // empty: write nothing
  int checkpoint_every = 0;  // episodes between checkpoints (0: final only)

  void validate() const {
    scenario.validate();
    learner.validate();
    if (episodes <= 0) throw ConfigError("trainer: episodes must be positive");
    if (batch <= 0) throw ConfigError("trainer: batch must be positive");
    if (warmup < batch)
      throw ConfigError("trainer: warmup must cover at least one batch");
    if (replay_capacity < static_cast<std::size_t>(batch))
      throw ConfigError("trainer: replay capacity below batch size");
    if (noise_start < 0.0 || noise_end < 0.0 || noise_frac < 0.0 || noise_frac > 1.0)
      throw ConfigError("trainer: bad noise schedule");
    for (int k : delay_steps)
      if (k < 0) throw ConfigError("trainer: delay steps must be non-negative");
  }
};

inline nlohmann::ordered_json to_json(const TrainerConfig& c) {
  return nlohmann::ordered_json{
      {"scenario", c.scenario.scenario},
      {"dt", c.scenario.dt},
      {"episode_length", c.scenario.resolved_episode_length()},
      {"fixed_prey", c.scenario.fixed_prey},
      {"delay_steps", c.delay_steps},
      {"variant", to_string(c.learner.variant)},
      {"hidden", c.learner.hidden},
      {"lr", c.learner.lr},
      {"gamma", c.learner.gamma},
      {"kappa", c.learner.kappa},
      {"tau", c.learner.tau},
      {"grad_clip", c.learner.grad_clip},
      {"episodes", c.episodes},
      {"batch", c.batch},
      {"replay_capacity", c.replay_capacity},
      {"warmup", c.warmup},
      {"noise_start", c.noise_start},
      {"noise_end", c.noise_end},
      {"noise_frac", c.noise_frac},
      {"seed", c.seed},
  };
}

// Line-oriented JSON metrics stream.  Records carry only deterministic
// training quantities; wall-clock timings go to a separate sidecar file so
// the metrics stream is byte-identical across reruns of the same seed.
class MetricsWriter {
 public:
  MetricsWriter() = default;

  explicit MetricsWriter(const std::filesystem::path& file) {
    std::filesystem::create_directories(file.parent_path());
    out_.open(file);
    if (!out_) throw ConfigError("metrics: cannot open " + file.string());
  }

  bool active() const { return out_.is_open(); }

  void write(const nlohmann::ordered_json& record) {
    if (!out_.is_open()) return;
    out_ << record.dump() << '\n';
  }

  void flush() {
    if (out_.is_open()) out_.flush();
  }

 private:
  std::ofstream out_;
};

struct EvalSummary {
  int episodes = 0;
  std::vector<double> mean_returns;          // per agent
  double mean_touches = 0.0;                 // per episode
  double mean_collisions = 0.0;              // per episode
  std::map<std::string, int> outcome_counts; // intersection outcomes

  double outcome_rate(const std::string& key) const {
    auto it = outcome_counts.find(key);
    return episodes == 0 ? 0.0
                         : static_cast<double>(it == outcome_counts.end() ? 0 : it->second) /
                               episodes;
  }

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{{"episodes", episodes},
                                  {"mean_returns", mean_returns},
                                  {"mean_touches", mean_touches},
                                  {"mean_collisions", mean_collisions},
                                  {"outcomes", outcome_counts}};
  }
};

// Off-policy training loop: every agent takes one critic and one actor
// gradient step per environment step once the warm-up buffer is full,
// followed by a soft target update.  All randomness is drawn from named
// per-purpose streams of the master seed, so runs are reproducible.
class Trainer {
 public:
  explicit Trainer(TrainerConfig cfg)
      : cfg_(std::move(cfg)),
        env_(make_env(cfg_.scenario), resolved_delays(cfg_)),
        learner_(agent_io(env_), cfg_.learner, cfg_.seed),
        replay_(cfg_.replay_capacity),
        replay_rng_(sub_seed(cfg_.seed, Stream::Replay)),
        env_root_(sub_seed(cfg_.seed, Stream::Env)),
        eval_root_(sub_seed(cfg_.seed, Stream::Eval)) {
    cfg_.validate();
    const std::uint64_t noise_root = sub_seed(cfg_.seed, Stream::Noise);
    const std::uint64_t gumbel_root = sub_seed(cfg_.seed, Stream::Gumbel);
    for (int i = 0; i < env_.num_agents(); ++i) {
      noise_rngs_.emplace_back(sub_seed(noise_root, i));
      gumbel_rngs_.emplace_back(sub_seed(gumbel_root, i));
    }
    update_gumbel_rng_ = Rng(sub_seed(gumbel_root, 1000));
    if (!cfg_.out_dir.empty()) {
      metrics_ = MetricsWriter(std::filesystem::path(cfg_.out_dir) / "metrics.jsonl");
      timing_ = MetricsWriter(std::filesystem::path(cfg_.out_dir) / "timing.jsonl");
      nlohmann::ordered_json header{{"type", "header"}, {"config", to_json(cfg_)}};
      metrics_.write(header);
    }
  }

  const TrainerConfig& config() const { return cfg_; }
  MultiAgentLearner& learner() { return learner_; }
  const MultiAgentLearner& learner() const { return learner_; }
  DelayedEnv& env() { return env_; }
  const ReplayBuffer& replay() const { return replay_; }
  int episodes_run() const { return episode_; }
  int updates_run() const { return updates_; }

  double noise_at(int episode) const {
    const double anneal = cfg_.noise_frac * cfg_.episodes;
    if (anneal <= 0.0 || episode >= anneal) return cfg_.noise_end;
    return cfg_.noise_start +
           (cfg_.noise_end - cfg_.noise_start) * (episode / anneal);
  }

  // Runs `n` further training episodes (the full run() calls this once).
  void run_episodes(int n) {
    for (int e = 0; e < n; ++e) run_one_episode();
  }

  void run() {
    run_episodes(cfg_.episodes - episode_);
    if (!cfg_.out_dir.empty()) {
      save_checkpoint(std::filesystem::path(cfg_.out_dir) / "checkpoints" / "final");
      metrics_.flush();
      timing_.flush();
    }
  }

  // Noise-free evaluation on fresh episode seeds; no training side effects.
  EvalSummary evaluate(int episodes) {
    EvalSummary s;
    s.episodes = episodes;
    s.mean_returns.assign(env_.num_agents(), 0.0);
    for (int e = 0; e < episodes; ++e) {
      auto obs = env_.reset(sub_seed(eval_root_, e));
      int touches = 0, collisions = 0;
      Outcome outcome = Outcome::None;
      for (int t = 0; t < env_.episode_length(); ++t) {
        std::vector<Eigen::VectorXd> acts(env_.num_agents());
        for (int i = 0; i < env_.num_agents(); ++i)
          acts[i] = learner_.act_greedy(i, obs[i]);
        StepResult r = env_.step(acts);
        obs = r.obs;
        for (int i = 0; i < env_.num_agents(); ++i)
          s.mean_returns[i] += r.rewards[i];
        touches += r.info.touches;
        collisions += r.info.collisions;
        outcome = r.info.outcome;
        if (r.done) break;
      }
      s.mean_touches += touches;
      s.mean_collisions += collisions;
      if (outcome != Outcome::None) ++s.outcome_counts[damarl::to_string(outcome)];
    }
    for (double& v : s.mean_returns) v /= episodes;
    s.mean_touches /= episodes;
    s.mean_collisions /= episodes;
    return s;
  }

  void save_checkpoint(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    const auto file = [&dir](int i, const char* role) {
      return (dir / ("agent" + std::to_string(i) + "_" + role + ".bin")).string();
    };
    for (int i = 0; i < env_.num_agents(); ++i) {
      save_mlp(file(i, "actor"), learner_.actor(i));
      save_mlp(file(i, "critic"), learner_.critic(i));
      save_mlp(file(i, "actor_target"), learner_.actor_target(i));
      save_mlp(file(i, "critic_target"), learner_.critic_target(i));
    }
    nlohmann::ordered_json meta{{"episode", episode_},
                                {"updates", updates_},
                                {"config", to_json(cfg_)}};
    std::ofstream mf(dir / "meta.json");
    mf << meta.dump(2) << '\n';
  }

  // Loads the nets saved by save_checkpoint (optimizer moments restart).
  void load_checkpoint(const std::filesystem::path& dir) {
    const auto file = [&dir](int i, const char* role) {
      return (dir / ("agent" + std::to_string(i) + "_" + role + ".bin")).string();
    };
    for (int i = 0; i < env_.num_agents(); ++i) {
      load_into(learner_.actor(i), file(i, "actor"));
      load_into(learner_.critic(i), file(i, "critic"));
      load_into(learner_.actor_target(i), file(i, "actor_target"));
      load_into(learner_.critic_target(i), file(i, "critic_target"));
    }
  }

 private:
  static std::vector<int> resolved_delays(const TrainerConfig& cfg) {
    // the environment must exist to know the agent count, so build a probe
    auto probe = make_env(cfg.scenario);
    const int n = probe->num_agents();
    if (cfg.delay_steps.empty()) return std::vector<int>(n, 0);
    if (static_cast<int>(cfg.delay_steps.size()) == 1)
      return std::vector<int>(n, cfg.delay_steps[0]);
    if (static_cast<int>(cfg.delay_steps.size()) != n)
      throw ConfigError("trainer: delay_steps needs 1 or " + std::to_string(n) +
                        " entries");
    return cfg.delay_steps;
  }

  static void load_into(Mlp& net, const std::string& file) {
    Mlp loaded = load_mlp(file);
    if (!loaded.same_shape(net))
      throw ConfigError("checkpoint: net shape mismatch in " + file);
    net = loaded;
  }

  void run_one_episode() {
    const auto t0 = std::chrono::steady_clock::now();
    const double noise = noise_at(episode_);
    auto obs = env_.reset(sub_seed(env_root_, episode_));
    std::vector<double> returns(env_.num_agents(), 0.0);
    int touches = 0, collisions = 0;
    Outcome outcome = Outcome::None;

    for (int t = 0; t < env_.episode_length(); ++t) {
      std::vector<Eigen::VectorXd> acts(env_.num_agents());
      for (int i = 0; i < env_.num_agents(); ++i)
        acts[i] = learner_.act(i, obs[i], noise, noise_rngs_[i], gumbel_rngs_[i]);
      StepResult r = env_.step(acts);

      Transition tr;
      tr.obs = obs;
      tr.actions = acts;
      tr.rewards = r.rewards;
      tr.next_obs = r.obs;
      tr.done = r.done;
      replay_.add(std::move(tr));

      obs = r.obs;
      for (int i = 0; i < env_.num_agents(); ++i) returns[i] += r.rewards[i];
      touches += r.info.touches;
      collisions += r.info.collisions;
      outcome = r.info.outcome;

      if (replay_.size() >= static_cast<std::size_t>(cfg_.warmup)) {
        for (int i = 0; i < env_.num_agents(); ++i) {
          auto batch = MultiAgentLearner::make_batch(
              replay_.sample(cfg_.batch, replay_rng_));
          learner_.critic_update(i, batch);
          learner_.actor_update(i, batch, update_gumbel_rng_);
        }
        learner_.soft_update_targets();
        ++updates_;
      }
      if (r.done) break;
    }

    double mean_return = 0.0;
    for (double v : returns) mean_return += v;
    mean_return /= returns.size();

    nlohmann::ordered_json rec{{"type", "episode"},
                               {"episode", episode_},
                               {"returns", returns},
                               {"mean_return", mean_return},
                               {"noise", noise},
                               {"collisions", collisions},
                               {"touches", touches}};
    if (cfg_.scenario.scenario == "intersection")
      rec["outcome"] = damarl::to_string(outcome);
    metrics_.write(rec);

    const auto t1 = std::chrono::steady_clock::now();
    timing_.write(nlohmann::ordered_json{
        {"episode", episode_},
        {"wall_ms",
         std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()}});

    ++episode_;
    if (cfg_.checkpoint_every > 0 && episode_ % cfg_.checkpoint_every == 0 &&
        !cfg_.out_dir.empty())
      save_checkpoint(std::filesystem::path(cfg_.out_dir) / "checkpoints" /
                      ("ep" + std::to_string(episode_)));
  }

  TrainerConfig cfg_;
  DelayedEnv env_;
  MultiAgentLearner learner_;
  ReplayBuffer replay_;
  Rng replay_rng_;
  std::uint64_t env_root_, eval_root_;
  std::vector<Rng> noise_rngs_, gumbel_rngs_;
  Rng update_gumbel_rng_{0};
  MetricsWriter metrics_, timing_;
  int episode_ = 0;
  int updates_ = 0;
};

}  // namespace damarl
