// Acceptance gate, slow half: training-outcome comparisons at full scale.
// These runs take core-hours to core-days on one core, so the binary is only
// registered with ctest when the DAMARL_LONG_TESTS build option is ON.
//
// Scales and thresholds are pinned below.  An optional argv filter runs a
// single criterion (e.g. `acceptance_long C8`); the scales themselves are
// not configurable.

#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "damarl/export.hpp"
#include "damarl/trainer.hpp"

namespace fs = std::filesystem;
using namespace damarl;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

fs::path run_root() {
  return fs::temp_directory_path() / "damarl_accept_long";
}

// Trains one configuration to completion (resuming nothing; each call is a
// fresh run), returns the mean training return over the final `tail` episodes
// and leaves metrics and the final checkpoint in the run directory.
struct TrainedRun {
  double tail_return = 0.0;
  EvalSummary eval;
};

TrainedRun train_run(const std::string& scenario, double dt, Variant variant,
                     const std::vector<int>& delays, std::uint64_t seed,
                     int episodes, int tail, int eval_episodes,
                     const std::string& name) {
  TrainerConfig cfg;
  cfg.scenario.scenario = scenario;
  cfg.scenario.dt = dt;
  cfg.delay_steps = delays;
  cfg.learner.variant = variant;
  cfg.episodes = episodes;
  cfg.seed = seed;
  const fs::path dir = run_root() / name;
  fs::remove_all(dir);
  cfg.out_dir = dir.string();

  Trainer trainer(cfg);
  const int chunk = 500;
  while (trainer.episodes_run() < episodes) {
    trainer.run_episodes(std::min(chunk, episodes - trainer.episodes_run()));
    std::fprintf(stderr, "  [%s] episode %d / %d\n", name.c_str(),
                 trainer.episodes_run(), episodes);
  }
  trainer.run();  // final checkpoint + stream flush

  TrainedRun out;
  out.tail_return = tail_mean(
      mean_return_curve(load_metrics(dir / "metrics.jsonl")), tail);
  if (eval_episodes > 0) out.eval = trainer.evaluate(eval_episodes);
  return out;
}

// --- C7: cooperative navigation with one step of action delay at dt = 0.2 --
// Per seed, the delay-aware centralized learner must beat the delay-unaware
// one on mean training return over the final 1000 episodes, in at least 4 of
// 5 seeds.
Result coop_nav_delay_advantage() {
  constexpr int kEpisodes = 10000;
  constexpr int kTail = 1000;
  constexpr int kSeeds = 5;
  int dama_wins = 0;
  std::string per_seed;
  for (int s = 1; s <= kSeeds; ++s) {
    const TrainedRun ma =
        train_run("coop_nav", 0.2, Variant::Ma, {1}, s, kEpisodes, kTail, 0,
                  "c7_ma_seed" + std::to_string(s));
    const TrainedRun dama =
        train_run("coop_nav", 0.2, Variant::Dama, {1}, s, kEpisodes, kTail, 0,
                  "c7_dama_seed" + std::to_string(s));
    const bool win = dama.tail_return > ma.tail_return;
    dama_wins += win;
    per_seed += fmt(" seed%d: dama %.2f vs ma %.2f (%s)", s, dama.tail_return,
                    ma.tail_return, win ? "win" : "loss");
  }
  return {dama_wins >= 4,
          fmt("dama beats ma in %d/%d seeds (need >= 4):%s", dama_wins, kSeeds,
              per_seed.c_str())};
}

// --- C8: unsignalized intersection with a 0.8 s action delay ----------------
// After training, the delay-aware centralized learner must have a strictly
// higher success rate and a strictly lower crash rate than the delay-unaware
// one over 200 greedy evaluation episodes.
Result intersection_outcome_advantage() {
  constexpr int kEpisodes = 10000;
  constexpr int kEval = 200;
  const std::vector<int> delays{8};  // 0.8 s at dt = 0.1
  const TrainedRun ma = train_run("intersection", 0.1, Variant::Ma, delays, 1,
                                  kEpisodes, 1000, kEval, "c8_ma");
  const TrainedRun dama = train_run("intersection", 0.1, Variant::Dama, delays,
                                    1, kEpisodes, 1000, kEval, "c8_dama");
  const double succ_ma = ma.eval.outcome_rate("success");
  const double succ_dama = dama.eval.outcome_rate("success");
  const double crash_ma = ma.eval.outcome_rate("crash");
  const double crash_dama = dama.eval.outcome_rate("crash");
  return {succ_dama > succ_ma && crash_dama < crash_ma,
          fmt("%d eval episodes: success dama %.3f vs ma %.3f (need >), "
              "crash dama %.3f vs ma %.3f (need <)",
              kEval, succ_dama, succ_ma, crash_dama, crash_ma)};
}

// --- C9: cooperative communication across a delay sweep ---------------------
// Mean final-1000 training return (3 seeds) per variant must be non-increasing
// in the delay (at most one inversion per variant), and the dama-minus-ma gap
// at k = 8 must exceed the gap at k = 2.
Result coop_comm_delay_sweep() {
  constexpr int kEpisodes = 10000;
  constexpr int kTail = 1000;
  constexpr int kSeeds = 3;
  const std::vector<int> delays{0, 2, 4, 8};
  std::vector<double> ma_curve, dama_curve;
  for (int k : delays) {
    double ma_sum = 0.0, dama_sum = 0.0;
    for (int s = 1; s <= kSeeds; ++s) {
      ma_sum += train_run("coop_comm", 0.1, Variant::Ma, {k}, s, kEpisodes,
                          kTail, 0,
                          fmt("c9_ma_k%d_seed%d", k, s))
                    .tail_return;
      dama_sum += train_run("coop_comm", 0.1, Variant::Dama, {k}, s, kEpisodes,
                            kTail, 0,
                            fmt("c9_dama_k%d_seed%d", k, s))
                      .tail_return;
    }
    ma_curve.push_back(ma_sum / kSeeds);
    dama_curve.push_back(dama_sum / kSeeds);
  }
  auto inversions = [](const std::vector<double>& curve) {
    int n = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) n += curve[i] > curve[i - 1];
    return n;
  };
  const int inv_ma = inversions(ma_curve);
  const int inv_dama = inversions(dama_curve);
  const double gap2 = dama_curve[1] - ma_curve[1];
  const double gap8 = dama_curve[3] - ma_curve[3];
  std::string detail = "per-delay means (k=0,2,4,8):";
  for (std::size_t i = 0; i < delays.size(); ++i)
    detail += fmt(" [k=%d ma %.2f dama %.2f]", delays[i], ma_curve[i],
                  dama_curve[i]);
  detail += fmt("; inversions ma %d dama %d (allow <= 1 each); gap(8) %.2f vs "
                "gap(2) %.2f (need >)",
                inv_ma, inv_dama, gap8, gap2);
  return {inv_ma <= 1 && inv_dama <= 1 && gap8 > gap2, detail};
}

struct Criterion {
  const char* id;
  const char* name;
  std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"C7", "delayed cooperative navigation advantage", coop_nav_delay_advantage},
      {"C8", "delayed intersection outcome advantage", intersection_outcome_advantage},
      {"C9", "communication delay sweep", coop_comm_delay_sweep},
  };
  const std::string filter = argc > 1 ? argv[1] : "";

  int failures = 0;
  int ran = 0;
  for (const Criterion& c : criteria) {
    if (!filter.empty() && filter != c.id) continue;
    ++ran;
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %s %s: %s\n", r.pass ? "PASS" : "FAIL", c.id, c.name,
                r.detail.c_str());
    if (!r.pass) ++failures;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion matches '%s' (use C7, C8 or C9)\n",
                 filter.c_str());
    return 2;
  }
  std::printf("acceptance (long): %d/%d criteria passed\n", ran - failures, ran);
  return failures;
}
