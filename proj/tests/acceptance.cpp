// Acceptance gate: every release criterion in one binary, one verdict line
// per criterion.  Criteria 1-5 wrap the library's oracle-backed selftests;
// 6-8 are training runs with pinned tolerances; 9 reruns every harness verb
// and demands bit-identical CSVs.  Exit status 0 only when all pass.
//
//   acceptance [--only N]   run a single criterion (development aid)
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tschpg/bandit.hpp"
#include "tschpg/baselines.hpp"
#include "tschpg/config.hpp"
#include "tschpg/csv.hpp"
#include "tschpg/env.hpp"
#include "tschpg/errors.hpp"
#include "tschpg/harness.hpp"
#include "tschpg/nn.hpp"
#include "tschpg/ppg.hpp"
#include "tschpg/selftest.hpp"
#include "tschpg/sim.hpp"
#include "tschpg/tsch.hpp"

namespace {

using namespace tschpg;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

EnvFactory tsch_factory(const Scenario& scenario) {
  return [scenario](uint64_t seed) {
    return std::make_unique<TschEnv>(scenario, seed);
  };
}

Outcome from_check(const CheckResult& check) {
  return Outcome{check.pass, check.detail};
}

// ---- criterion 6: trainer sanity on a two-armed bandit ----------------

Outcome bandit_sanity() {
  const auto factory = [](uint64_t seed) {
    return std::make_unique<BanditEnv>(seed);
  };
  PpgConfig config;
  config.mode = PpgConfig::Mode::kPpo;
  config.total_steps = 5000;
  config.rollout_len = 50;
  config.minibatch_size = 50;
  config.policy_epochs = 4;
  config.n_policy_iters = 4;
  config.hidden_sizes = {16};
  config.learning_rate = 0.02;

  int solved = 0;
  std::string per_seed;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const TrainReport report = train(factory, config, seed);
    BanditEnv probe(seed);
    const std::vector<double> out =
        report.checkpoint.net("policy").forward(probe.reset());
    std::vector<double> logp(2);
    log_softmax(std::span<const double>(out.data(), 2), logp);
    const double p_better = std::exp(logp[probe.better_arm()]);
    if (p_better >= 0.95) solved += 1;
    if (!per_seed.empty()) per_seed += ", ";
    per_seed += "seed " + std::to_string(seed) + ": " + num(p_better, 3);
  }
  Outcome outcome;
  outcome.pass = solved >= 4;
  outcome.detail = std::to_string(solved) +
                   "/5 seeds reached p(better arm) >= 0.95 within 5000 steps"
                   " (" + per_seed + ")";
  return outcome;
}

// ---- criterion 7: optimality on an exhaustively searchable instance ---

// Replays one fixed (cell, power) assignment every slotframe.
class FixedScheduler : public Scheduler {
 public:
  explicit FixedScheduler(std::vector<int> raw) : raw_(std::move(raw)) {}

  void reset(const Scenario& scenario, uint64_t) override {
    scenario_ = scenario;
  }
  std::pair<ScheduleMatrix, PowerAllocation> assign(
      int64_t, const SlotframeReport*) override {
    return decode_action(scenario_, raw_);
  }

 private:
  Scenario scenario_;
  std::vector<int> raw_;
};

Scenario searchable_scenario() {
  Scenario tiny;
  tiny.net.n_nodes = 2;
  tiny.net.n_channels = 2;
  tiny.net.slotframe_len = 2;
  tiny.sim.rayleigh_fading = false;
  tiny.qos = QosSpec::uniform(2, 16, 0.25, 0.5);
  tiny.validate();
  return tiny;
}

Outcome small_instance_optimality() {
  const Scenario tiny = searchable_scenario();
  const uint64_t run_seed = 1;
  const int n_eval = 40;
  const uint64_t episodes_seed = eval_seed(run_seed);

  // Exhaustive search over all joint assignments, scored on exactly the
  // episode stream the trained policy is evaluated on.
  const int n_cells = tiny.net.n_cells();
  const int n_powers = static_cast<int>(tiny.net.power_levels_mw.size());
  double best = 0.0;
  std::vector<int> best_raw;
  int enumerated = 0;
  for (int c0 = 0; c0 < n_cells; ++c0) {
    for (int p0 = 0; p0 < n_powers; ++p0) {
      for (int c1 = 0; c1 < n_cells; ++c1) {
        for (int p1 = 0; p1 < n_powers; ++p1) {
          FixedScheduler fixed({c0, p0, c1, p1});
          const double utility =
              evaluate_scheduler(fixed, tiny, n_eval, episodes_seed)
                  .mean_utility;
          enumerated += 1;
          if (best_raw.empty() || utility > best) {
            best = utility;
            best_raw = {c0, p0, c1, p1};
          }
        }
      }
    }
  }

  PpgConfig config;
  config.mode = PpgConfig::Mode::kPpg;
  config.total_steps = 60000;
  const TrainReport report = train(tsch_factory(tiny), config, run_seed);
  const double learned =
      evaluate(report.checkpoint, tsch_factory(tiny), n_eval, episodes_seed)
          .mean_utility;

  Outcome outcome;
  outcome.pass = learned >= 0.95 * best;
  outcome.detail = "trained utility " + num(learned) + " vs optimum " +
                   num(best) + " over " + std::to_string(enumerated) +
                   " assignments (ratio " + num(learned / best, 3) + ")";
  return outcome;
}

// ---- criterion 8: reference-scenario orderings ------------------------

Outcome directional_reproduction() {
  const Scenario scenario = Scenario::reference();
  PpgConfig trainer;
  trainer.total_steps = 200000;
  const int n_eval = 20;
  const std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};

  std::vector<double> ppg_utility, ppo_utility, ppg_throughput, msf_throughput;
  for (const uint64_t seed : seeds) {
    for (const char* algorithm : {"ppg", "ppo"}) {
      std::cout << "criterion 8: training " << algorithm << " seed " << seed
                << "..." << std::endl;
      PpgConfig config = trainer;
      config.mode = std::strcmp(algorithm, "ppg") == 0 ? PpgConfig::Mode::kPpg
                                                       : PpgConfig::Mode::kPpo;
      const TrainReport report = train(tsch_factory(scenario), config, seed);
      const EvalSummary summary = evaluate(
          report.checkpoint, tsch_factory(scenario), n_eval, eval_seed(seed));
      if (config.mode == PpgConfig::Mode::kPpg) {
        ppg_utility.push_back(summary.mean_utility);
        ppg_throughput.push_back(summary.mean_throughput);
      } else {
        ppo_utility.push_back(summary.mean_utility);
      }
    }
    const std::unique_ptr<Scheduler> msf = make_scheduler("msf");
    msf_throughput.push_back(
        evaluate_scheduler(*msf, scenario, n_eval, eval_seed(seed))
            .mean_throughput);
  }

  const double ppg_util_median = percentile(ppg_utility, 0.5);
  const double ppo_util_median = percentile(ppo_utility, 0.5);
  const double ppg_th_median = percentile(ppg_throughput, 0.5);
  const double msf_th_median = percentile(msf_throughput, 0.5);

  const bool utility_leg = ppg_util_median >= ppo_util_median;
  const bool throughput_leg = ppg_th_median >= 1.2 * msf_th_median;
  std::cout << "criterion 8: utility leg ppg " << num(ppg_util_median)
            << " vs ppo " << num(ppo_util_median) << " -> "
            << (utility_leg ? "pass" : "fail") << "\n";
  std::cout << "criterion 8: throughput leg ppg " << num(ppg_th_median)
            << " vs 1.2 x msf " << num(1.2 * msf_th_median) << " (msf "
            << num(msf_th_median) << ") -> "
            << (throughput_leg ? "pass" : "fail") << std::endl;

  Outcome outcome;
  outcome.pass = utility_leg && throughput_leg;
  outcome.detail = "median utility ppg " + num(ppg_util_median) + " / ppo " +
                   num(ppo_util_median) + "; median throughput ppg " +
                   num(ppg_th_median) + " / 1.2 x msf " +
                   num(1.2 * msf_th_median);
  return outcome;
}

// ---- criterion 9: bit-identical harness reruns ------------------------

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("tschpg_accept_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

bool same_file(const std::string& a, const std::string& b, std::string& why) {
  if (read_text_file(a) != read_text_file(b)) {
    why = std::filesystem::path(a).filename().string() + " differs";
    return false;
  }
  return true;
}

Outcome harness_determinism() {
  const ExperimentConfig config = ExperimentConfig::from_string(R"(
[network]
n_nodes = 4
[env]
episode_len = 5
[trainer]
mode = ppg
total_steps = 120
rollout_len = 60
minibatch_size = 30
n_policy_iters = 2
hidden_sizes = 8
[sweep]
seeds = 1
algorithms = ppg, msf
node_counts = 4
[eval]
episodes = 2
)");

  std::ostringstream log;
  Outcome outcome;

  TempDir conv_a("conv_a"), conv_b("conv_b");
  run_convergence(config, conv_a.str(), log);
  run_convergence(config, conv_b.str(), log);
  for (const char* name :
       {"convergence.csv", "convergence_summary.csv", "curve_ppg_seed1.csv"}) {
    if (!same_file(conv_a.file(name), conv_b.file(name), outcome.detail)) {
      return outcome;
    }
  }

  TempDir scale_a("scale_a"), scale_b("scale_b");
  run_scaling(config, scale_a.str(), log);
  run_scaling(config, scale_b.str(), log);
  for (const char* name : {"scaling.csv", "scaling_summary.csv"}) {
    if (!same_file(scale_a.file(name), scale_b.file(name), outcome.detail)) {
      return outcome;
    }
  }

  EvaluateOptions options;
  options.algorithm = "round_robin";
  options.episodes = 3;
  options.trace_path = "trace.csv";
  TempDir eval_a("eval_a"), eval_b("eval_b");
  run_evaluate(config, options, eval_a.str(), log);
  run_evaluate(config, options, eval_b.str(), log);
  for (const char* name :
       {"evaluation.csv", "evaluation_summary.csv", "trace.csv"}) {
    if (!same_file(eval_a.file(name), eval_b.file(name), outcome.detail)) {
      return outcome;
    }
  }

  outcome.pass = true;
  outcome.detail =
      "convergence, scaling and evaluate reruns all byte-identical";
  return outcome;
}

// ---- driver ------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no stated budget
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "equation-identities", 1.0,
       [] { return from_check(check_equation_identities()); }},
      {2, "gradient-suite", 60.0,
       [] { return from_check(check_gradient_suite()); }},
      {3, "gae-oracle", 5.0, [] { return from_check(check_gae_oracle()); }},
      {4, "constraint-safety", 10.0,
       [] { return from_check(check_constraint_safety()); }},
      {5, "sim-conservation", 30.0,
       [] { return from_check(check_sim_conservation()); }},
      {6, "bandit-sanity", 60.0, bandit_sanity},
      {7, "small-instance-optimality", 300.0, small_instance_optimality},
      {8, "directional-reproduction", 1800.0, directional_reproduction},
      {9, "harness-determinism", 0.0, harness_determinism},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    if (only != 0 && criterion.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool in_budget =
        criterion.budget_s == 0.0 || elapsed < criterion.budget_s;
    if (!in_budget) {
      outcome.pass = false;
      outcome.detail += " [over budget of " + num(criterion.budget_s, 0) + " s]";
    }
    if (!outcome.pass) failures += 1;
    std::cout << "criterion " << criterion.id << " (" << criterion.name
              << "): " << (outcome.pass ? "PASS" : "FAIL") << " ["
              << num(elapsed, 1) << " s] " << outcome.detail << std::endl;
  }

  if (failures > 0) {
    std::cout << failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
