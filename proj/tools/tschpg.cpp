// Command-line front end: experiment verbs over one config file.
//
// Exit codes: 0 success, 1 configuration error (bad flags, bad config file),
// 2 runtime failure (IO errors, numerical failures, failed self-tests).

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tschpg/config.hpp"
#include "tschpg/errors.hpp"
#include "tschpg/harness.hpp"
#include "tschpg/selftest.hpp"

namespace {

int run_selftest_verb() {
  const std::vector<tschpg::CheckResult> results = tschpg::run_selftests();
  int failures = 0;
  for (const tschpg::CheckResult& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail
              << "\n";
    if (!r.pass) failures += 1;
  }
  std::cout << (failures == 0 ? "all self-tests passed"
                              : std::to_string(failures) + " self-test(s) failed")
            << "\n";
  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "tschpg: slotframe-scheduling resource allocation testbed\n"
      "Trains phasic/proximal policy-gradient schedulers on a multichannel\n"
      "network simulator and compares them against non-learning baselines."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed_offset = 0;
  app.add_option("--config", config_path,
                 "Experiment config file (defaults apply when omitted)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (created when missing)")
      ->capture_default_str();
  app.add_option("--seed-offset", seed_offset,
                 "Added to every sweep seed, for disjoint replications")
      ->capture_default_str();

  CLI::App* convergence = app.add_subcommand(
      "convergence", "Train each learner per seed; write reward curves");
  CLI::App* scaling = app.add_subcommand(
      "scaling", "Sweep node counts; write evaluated throughput per algorithm");

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score one checkpoint or algorithm on the config scenario");
  tschpg::EvaluateOptions eval_options;
  evaluate->add_option("--checkpoint", eval_options.checkpoint_path,
                       "Checkpoint file to evaluate");
  evaluate->add_option("--algorithm", eval_options.algorithm,
                       "Algorithm to evaluate (ppg, ppo, msf, random, "
                       "round_robin); learners are trained first");
  evaluate->add_option("--episodes", eval_options.episodes,
                       "Evaluation episodes (default: config eval.episodes)");
  evaluate->add_option("--trace", eval_options.trace_path,
                       "Write a per-transmission event CSV to this path");

  CLI::App* selftest = app.add_subcommand(
      "selftest", "Run the oracle, gradient and property suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (selftest->parsed()) return run_selftest_verb();

    tschpg::ExperimentConfig config =
        config_path.empty() ? tschpg::ExperimentConfig::from_string("")
                            : tschpg::ExperimentConfig::from_file(config_path);
    tschpg::offset_seeds(config, seed_offset);

    if (convergence->parsed()) {
      tschpg::run_convergence(config, out_dir, std::cout);
    } else if (scaling->parsed()) {
      tschpg::run_scaling(config, out_dir, std::cout);
    } else if (evaluate->parsed()) {
      tschpg::run_evaluate(config, eval_options, out_dir, std::cout);
    }
    return 0;
  } catch (const tschpg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
