#ifndef TSCHPG_HARNESS_HPP
#define TSCHPG_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tschpg/config.hpp"

namespace tschpg {

// Linear-interpolation percentile (p in [0,1]) of a nonempty sample; the
// input is copied and sorted.
double percentile(std::vector<double> xs, double p);

// Applies --seed-offset: shifts every sweep seed.
void offset_seeds(ExperimentConfig& config, uint64_t offset);

// Evaluation episode stream of a run: derived from (not equal to) the
// training seed so evaluation sees fresh topologies, and shared across
// algorithms so they are compared on identical episodes.
uint64_t eval_seed(uint64_t run_seed);

// Trains one learner ("ppg" or "ppo") on a scenario with the configured
// trainer settings, the mode pinned to the algorithm.
TrainReport train_algorithm(const ExperimentConfig& config,
                            const Scenario& scenario,
                            const std::string& algorithm, uint64_t seed);

// Scores one algorithm on a scenario over the eval_seed(seed) episode
// stream: learners are trained and their final checkpoint evaluated
// greedily, schedulers are rolled out directly.
EvalSummary evaluate_algorithm(const ExperimentConfig& config,
                               const Scenario& scenario,
                               const std::string& algorithm, uint64_t seed,
                               std::ostream& log);

// Experiment verbs.  Both create out_dir when missing, write the documented
// CSV files plus one SVG per figure, and log progress lines.
void run_convergence(const ExperimentConfig& config, const std::string& out_dir,
                     std::ostream& log);
void run_scaling(const ExperimentConfig& config, const std::string& out_dir,
                 std::ostream& log);

struct EvaluateOptions {
  std::string checkpoint_path;  // evaluate a saved checkpoint...
  std::string algorithm;        // ...or a named algorithm (exclusive)
  int episodes = 0;             // 0: use the config's eval episode count
  std::string trace_path;       // optional per-transmission event CSV
};
void run_evaluate(const ExperimentConfig& config,
                  const EvaluateOptions& options, const std::string& out_dir,
                  std::ostream& log);

}  // namespace tschpg

#endif  // TSCHPG_HARNESS_HPP
