// Command-line front end for the damarl library: training runs, checkpoint
// evaluation, the delayed-process equivalence battery and CSV export of
// training curves.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration or usage
// error.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "damarl/export.hpp"
#include "damarl/mrp.hpp"
#include "damarl/run_config.hpp"
#include "damarl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config_file;
  std::string scenario;
  std::string variant;
  double delay_seconds = -1.0;  // <0: not set
  std::vector<int> delay_steps;
  double dt = 0.0;  // 0: not set
  int episodes = 0;
  int episode_length = -1;  // <0: not set
  bool fixed_prey = false;
  int batch = 0;
  int warmup = -1;  // <0: not set
  int hidden = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  int num_seeds = 1;
  std::string out_dir;
  int eval_episodes = 200;
  int checkpoint_every = -1;  // <0: not set
  bool quiet = false;
};

std::string delay_key(const std::vector<int>& steps) {
  if (steps.empty()) return "0";
  bool uniform = true;
  for (int k : steps) uniform &= (k == steps.front());
  if (uniform) return std::to_string(steps.front());
  std::string key;
  for (std::size_t i = 0; i < steps.size(); ++i)
    key += (i ? "-" : "") + std::to_string(steps[i]);
  return key;
}

std::string default_out_root() {
  const char* env = std::getenv("DAMARL_OUT_ROOT");
  return env && *env ? env : "runs";
}

int run_train(const TrainArgs& a, const CLI::App& cmd) {
  damarl::TrainerConfig base;
  if (!a.config_file.empty()) base = damarl::config_from_file(a.config_file);

  const auto given = [&cmd](const std::string& flag) {
    return cmd.count(flag) > 0;
  };
  if (given("--scenario")) base.scenario.scenario = a.scenario;
  if (given("--dt")) base.scenario.dt = a.dt;
  if (given("--episode-length")) base.scenario.episode_length = a.episode_length;
  if (given("--fixed-prey")) base.scenario.fixed_prey = a.fixed_prey;
  if (given("--variant")) base.learner.variant = damarl::parse_variant(a.variant);
  if (given("--hidden")) base.learner.hidden = a.hidden;
  if (given("--lr")) base.learner.lr = a.lr;
  if (given("--episodes")) base.episodes = a.episodes;
  if (given("--batch")) base.batch = a.batch;
  if (given("--warmup")) base.warmup = a.warmup;
  if (given("--seed")) base.seed = a.seed;
  if (given("--checkpoint-every")) base.checkpoint_every = a.checkpoint_every;

  if (given("--delay-steps") && given("--delay-seconds"))
    throw damarl::ConfigError("train: pass --delay-steps or --delay-seconds, not both");
  if (given("--delay-steps")) {
    base.delay_steps = a.delay_steps;
  } else if (given("--delay-seconds")) {
    base.delay_steps = {
        damarl::delay_steps_from_seconds(a.delay_seconds, base.scenario.dt)};
  }

  if (base.scenario.scenario.empty())
    throw damarl::ConfigError("train: choose a scenario (--scenario or --config)");
  if (a.num_seeds < 1) throw damarl::ConfigError("train: --seeds must be positive");

  std::string out_root = a.out_dir;
  if (out_root.empty())
    out_root = default_out_root() + "/" + base.scenario.scenario + "_" +
               damarl::to_string(base.learner.variant) + "_delay" +
               delay_key(base.delay_steps);

  for (int s = 0; s < a.num_seeds; ++s) {
    damarl::TrainerConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(s);
    const fs::path run_dir = fs::path(out_root) / ("seed" + std::to_string(cfg.seed));
    cfg.out_dir = run_dir.string();
    cfg.validate();
    damarl::write_resolved_config(run_dir, cfg);

    damarl::Trainer trainer(cfg);
    if (!a.quiet)
      std::fprintf(stderr, "[train] %s %s delay=%s seed=%llu -> %s\n",
                   cfg.scenario.scenario.c_str(),
                   damarl::to_string(cfg.learner.variant).c_str(),
                   delay_key(cfg.delay_steps).c_str(),
                   static_cast<unsigned long long>(cfg.seed),
                   run_dir.string().c_str());
    const int chunk = std::max(1, cfg.episodes / 10);
    while (trainer.episodes_run() < cfg.episodes) {
      trainer.run_episodes(std::min(chunk, cfg.episodes - trainer.episodes_run()));
      if (!a.quiet)
        std::fprintf(stderr, "[train]   episode %d / %d (updates %d)\n",
                     trainer.episodes_run(), cfg.episodes, trainer.updates_run());
    }
    trainer.run();  // writes the final checkpoint and flushes streams

    if (a.eval_episodes > 0) {
      damarl::EvalSummary summary = trainer.evaluate(a.eval_episodes);
      std::ofstream out(run_dir / "eval_summary.json");
      out << summary.to_json().dump(2) << '\n';
      std::cout << summary.to_json().dump(2) << std::endl;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string run_dir;
  int episodes = 200;
  bool no_write = false;
};

int run_eval(const EvalArgs& a) {
  const fs::path run_dir(a.run_dir);
  damarl::TrainerConfig cfg = damarl::config_from_file(run_dir / "resolved_config.json");
  cfg.out_dir.clear();  // evaluation must not touch the training streams
  damarl::Trainer trainer(cfg);
  trainer.load_checkpoint(run_dir / "checkpoints" / "final");
  damarl::EvalSummary summary = trainer.evaluate(a.episodes);
  std::cout << summary.to_json().dump(2) << std::endl;
  if (!a.no_write) {
    std::ofstream out(run_dir / "eval_summary.json");
    out << summary.to_json().dump(2) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  int instances = 500;
  std::uint64_t seed = 1;
  double tol = 1e-10;
  int max_states = 4;
  int max_agents = 2;
  int max_actions = 3;
  int max_delay = 2;
  std::string game_file;
  std::vector<int> delays;
};

damarl::DelaySpec delays_for_game(const damarl::TabularMarkovGame& g,
                                  const std::vector<int>& steps) {
  damarl::DelaySpec d = damarl::DelaySpec::zeros(g.num_agents);
  if (!steps.empty()) {
    if (static_cast<int>(steps.size()) == 1)
      d.steps.assign(g.num_agents, steps[0]);
    else if (static_cast<int>(steps.size()) == g.num_agents)
      d.steps = steps;
    else
      throw damarl::ConfigError("verify: --delays needs 1 or " +
                                std::to_string(g.num_agents) + " entries");
    for (int i = 0; i < g.num_agents; ++i)
      d.initial_actions[i].assign(d.steps[i], 0);  // buffers start on action 0
  }
  return d;
}

int run_verify(const VerifyArgs& a) {
  damarl::Rng rng(damarl::sub_seed(a.seed, damarl::Stream::Instance));

  if (!a.game_file.empty()) {
    std::ifstream in(a.game_file);
    if (!in) throw damarl::ConfigError("verify: cannot open " + a.game_file);
    damarl::TabularMarkovGame g = damarl::load_game(in);
    damarl::DelaySpec d = delays_for_game(g, a.delays);
    damarl::PolicySet policies = damarl::make_random_policies(rng, g, d);
    damarl::EquivalenceReport rep =
        damarl::verify_delay_equivalence(g, d, policies, a.tol);
    std::printf("game %s: %lld augmented states, max |diff| = %.3e (tol %.1e): %s\n",
                a.game_file.c_str(), static_cast<long long>(rep.augmented_states),
                rep.diff.max_all(), rep.tolerance, rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 1;
  }

  if (a.instances <= 0)
    throw damarl::ConfigError("verify: --instances must be positive");
  double worst = 0.0;
  long long largest = 0;
  int failures = 0;
  for (int n = 0; n < a.instances; ++n) {
    damarl::TabularMarkovGame g =
        damarl::make_random_game(rng, a.max_states, a.max_agents, a.max_actions);
    damarl::DelaySpec d = damarl::make_random_delays(rng, g, a.max_delay);
    damarl::PolicySet policies = damarl::make_random_policies(rng, g, d);
    damarl::EquivalenceReport rep =
        damarl::verify_delay_equivalence(g, d, policies, a.tol);
    worst = std::max(worst, rep.diff.max_all());
    largest = std::max(largest, static_cast<long long>(rep.augmented_states));
    if (!rep.pass) {
      ++failures;
      std::printf("instance %d FAILED: max |diff| = %.3e\n", n, rep.diff.max_all());
    }
  }
  std::printf(
      "checked %d random delayed games (|S| <= %d, N <= %d, |A| <= %d, k <= %d,\n"
      "largest augmented space %lld states): worst |diff| = %.3e, tolerance %.1e\n"
      "equivalence: %s\n",
      a.instances, a.max_states, a.max_agents, a.max_actions, a.max_delay, largest,
      worst, a.tol, failures == 0 ? "PASS" : "FAIL");
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// export-plots

struct ExportArgs {
  std::string root;
  std::string out_dir;
  int window = 1000;
};

struct GroupKey {
  std::string scenario, variant, delay;

  bool operator<(const GroupKey& o) const {
    return std::tie(scenario, variant, delay) <
           std::tie(o.scenario, o.variant, o.delay);
  }
  std::string slug() const { return scenario + "_" + variant + "_delay" + delay; }
};

struct GroupData {
  std::vector<std::vector<double>> curves;   // mean-return curve per run
  std::vector<json> eval_summaries;          // eval_summary.json per run, if present
};

int run_export(const ExportArgs& a) {
  const fs::path root(a.root);
  if (!fs::is_directory(root))
    throw damarl::ConfigError("export-plots: " + a.root + " is not a directory");
  const fs::path out_dir = a.out_dir.empty() ? root / "plots" : fs::path(a.out_dir);

  std::map<GroupKey, GroupData> groups;
  std::vector<fs::path> metric_files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "metrics.jsonl")
      metric_files.push_back(entry.path());
  }
  std::sort(metric_files.begin(), metric_files.end());
  for (const fs::path& file : metric_files) {
    damarl::RunSeries series = damarl::load_metrics(file);
    if (series.episodes.empty()) continue;
    GroupKey key;
    key.scenario = series.config.value("scenario", "unknown");
    key.variant = series.config.value("variant", "unknown");
    std::vector<int> steps;
    if (series.config.contains("delay_steps"))
      steps = series.config.at("delay_steps").get<std::vector<int>>();
    key.delay = delay_key(steps);
    GroupData& g = groups[key];
    g.curves.push_back(damarl::mean_return_curve(series));
    const fs::path summary_file = file.parent_path() / "eval_summary.json";
    if (fs::exists(summary_file)) {
      std::ifstream in(summary_file);
      json s;
      in >> s;
      g.eval_summaries.push_back(std::move(s));
    }
  }
  if (groups.empty())
    throw damarl::ConfigError("export-plots: no metrics.jsonl found under " + a.root);

  std::vector<std::string> summary_rows;
  std::vector<std::string> outcome_rows;
  for (const auto& [key, data] : groups) {
    damarl::Aggregate agg = damarl::aggregate_curves(data.curves);
    damarl::write_curve_csv(out_dir / (key.slug() + "_curve.csv"), agg);

    // one length-1 curve per run, so the aggregate pools tail means over runs
    std::vector<std::vector<double>> tails;
    for (const auto& c : data.curves)
      tails.push_back({damarl::tail_mean(c, a.window)});
    const damarl::Aggregate tail = damarl::aggregate_curves(tails);
    summary_rows.push_back(key.scenario + "," + key.variant + "," + key.delay + "," +
                           std::to_string(data.curves.size()) + "," +
                           format_double(tail.mean[0]) + "," +
                           format_double(tail.stddev[0]));

    if (!data.eval_summaries.empty()) {
      double ret = 0.0, success = 0.0, crash = 0.0, stuck = 0.0;
      double collisions = 0.0, touches = 0.0;
      for (const json& s : data.eval_summaries) {
        const auto returns = s.value("mean_returns", std::vector<double>{});
        double per_agent = 0.0;
        for (double r : returns) per_agent += r;
        if (!returns.empty()) per_agent /= returns.size();
        ret += per_agent;
        const int n = std::max(1, s.value("episodes", 0));
        const json outcomes = s.value("outcomes", json::object());
        success += outcomes.value("success", 0) / static_cast<double>(n);
        crash += outcomes.value("crash", 0) / static_cast<double>(n);
        stuck += outcomes.value("stuck", 0) / static_cast<double>(n);
        collisions += s.value("mean_collisions", 0.0);
        touches += s.value("mean_touches", 0.0);
      }
      const double runs = static_cast<double>(data.eval_summaries.size());
      outcome_rows.push_back(key.scenario + "," + key.variant + "," + key.delay +
                             "," + std::to_string(data.eval_summaries.size()) + "," +
                             format_double(ret / runs) + "," +
                             format_double(success / runs) + "," +
                             format_double(crash / runs) + "," +
                             format_double(stuck / runs) + "," +
                             format_double(collisions / runs) + "," +
                             format_double(touches / runs));
    }
  }
  damarl::write_rows_csv(out_dir / "summary.csv",
                         "scenario,variant,delay,runs,tail_mean,tail_std",
                         summary_rows);
  if (!outcome_rows.empty())
    damarl::write_rows_csv(out_dir / "outcomes.csv",
                           "scenario,variant,delay,runs,mean_return,success_rate,"
                           "crash_rate,stuck_rate,mean_collisions,mean_touches",
                           outcome_rows);
  std::printf("exported %zu curve groups to %s\n", groups.size(),
              out_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delay-aware multi-agent actor-critic toolkit"};
  app.require_subcommand(1);

  TrainArgs targs;
  CLI::App* train = app.add_subcommand("train", "Train one or more seeds");
  train->add_option("--config", targs.config_file, "JSON config to start from");
  train->add_option("--scenario", targs.scenario,
                    "coop_comm | coop_nav | predator_prey | intersection");
  train->add_option("--variant", targs.variant, "ddpg | ma | da | dama");
  train->add_option("--delay-seconds", targs.delay_seconds,
                    "action delay in seconds (must sit on the dt grid)");
  train->add_option("--delay-steps", targs.delay_steps,
                    "action delay in control steps (1 value or one per agent)");
  train->add_option("--dt", targs.dt, "seconds per control step");
  train->add_option("--episodes", targs.episodes, "training episodes");
  train->add_option("--episode-length", targs.episode_length,
                    "steps per episode (0: scenario default)");
  train->add_flag("--fixed-prey", targs.fixed_prey,
                  "predator_prey: scripted fleeing prey");
  train->add_option("--batch", targs.batch, "minibatch size");
  train->add_option("--warmup", targs.warmup, "transitions before updates start");
  train->add_option("--hidden", targs.hidden, "hidden layer width");
  train->add_option("--lr", targs.lr, "learning rate");
  train->add_option("--seed", targs.seed, "base seed");
  train->add_option("--seeds", targs.num_seeds, "train this many consecutive seeds");
  train->add_option("--out", targs.out_dir,
                    "output root (default: $DAMARL_OUT_ROOT or ./runs)");
  train->add_option("--eval-episodes", targs.eval_episodes,
                    "greedy evaluation episodes after training (0: skip)");
  train->add_option("--checkpoint-every", targs.checkpoint_every,
                    "episodes between checkpoints (0: final only)");
  train->add_flag("--quiet", targs.quiet, "suppress progress lines");

  EvalArgs eargs;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a saved run");
  eval->add_option("--run", eargs.run_dir, "run directory (resolved_config.json "
                                           "+ checkpoints/final)")
      ->required();
  eval->add_option("--episodes", eargs.episodes, "evaluation episodes");
  eval->add_flag("--no-write", eargs.no_write, "print only, keep eval_summary.json");

  VerifyArgs vargs;
  CLI::App* verify = app.add_subcommand(
      "verify", "Check that the delayed process and its augmented-game "
                "construction induce the same closed-loop chain");
  verify->add_option("--instances", vargs.instances, "random games to check");
  verify->add_option("--seed", vargs.seed, "seed for games, delays and policies");
  verify->add_option("--tol", vargs.tol, "element-wise tolerance");
  verify->add_option("--max-states", vargs.max_states, "max base states");
  verify->add_option("--max-agents", vargs.max_agents, "max agents");
  verify->add_option("--max-actions", vargs.max_actions, "max actions per agent");
  verify->add_option("--max-delay", vargs.max_delay, "max delay steps per agent");
  verify->add_option("--game", vargs.game_file, "check one saved game file instead");
  verify->add_option("--delays", vargs.delays,
                     "with --game: delay steps (1 value or one per agent)");

  ExportArgs xargs;
  CLI::App* exp = app.add_subcommand("export-plots",
                                     "Aggregate run metrics into CSV curves");
  exp->add_option("--root", xargs.root, "directory tree holding run outputs")
      ->required();
  exp->add_option("--out", xargs.out_dir, "CSV output directory (default <root>/plots)");
  exp->add_option("--window", xargs.window, "tail window for summary means");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return run_train(targs, *train);
    if (eval->parsed()) return run_eval(eargs);
    if (verify->parsed()) return run_verify(vargs);
    if (exp->parsed()) return run_export(xargs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;  // unreachable: require_subcommand(1)
}
