#ifndef TSCHPG_ENV_HPP
#define TSCHPG_ENV_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tschpg/sim.hpp"
#include "tschpg/tsch.hpp"

namespace tschpg {

// Everything needed to instantiate one learning problem.
struct Scenario {
  NetworkConfig net;
  SimConfig sim;
  QosSpec qos;
  UtilityWeights weights;
  int episode_len = 20;
  double qos_penalty = 0.5;   // per-violation reward penalty

  static Scenario reference();  // the default 10-node benchmark scenario
  void validate() const;        // throws ConfigError
};

// U - qos_penalty * n_violations, where U = w_th * th + w_eff * eta.
double reward_fn(double th, double eta, const UtilityWeights& weights,
                 int n_violations, double qos_penalty);

// Seed of one episode's topology/traffic draw within a run.  Exposed so that
// non-learning schedulers can be evaluated on exactly the episode sequence a
// TschEnv with the same run seed produces.
uint64_t episode_seed(uint64_t run_seed, int64_t episode_index);

// Fresh simulation state for one episode: topology drawn from the episode
// seed, clocks and queues zeroed.
SimState make_episode_state(const Scenario& scenario, uint64_t ep_seed);

// Cell/power choices per node decoded into a one-cell-per-node schedule:
// raw = [cell_0, power_0, cell_1, power_1, ...], cell c -> (t = c / M,
// k = c % M).  Out-of-range indices raise ActionError.
std::pair<ScheduleMatrix, PowerAllocation> decode_action(
    const Scenario& scenario, std::span<const int> raw);

struct EnvStep {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  // Step diagnostics, sufficient to reconstruct the reward exactly.
  double th = 0.0;
  double eta = 0.0;
  double utility_value = 0.0;
  double penalty = 0.0;
  int violation_count = 0;
};

// Episodic environment interface consumed by the trainer: a flat observation
// vector and a tuple of categorical actions described by head sizes.
class Env {
 public:
  virtual ~Env() = default;
  virtual int observation_dim() const = 0;
  virtual const std::vector<int>& action_head_sizes() const = 0;
  virtual std::vector<double> reset() = 0;
  virtual EnvStep step(std::span<const int> action) = 0;
};

using EnvFactory = std::function<std::unique_ptr<Env>(uint64_t seed)>;

// Cross-episode evaluation statistics shared by every policy kind (trained
// checkpoints and non-learning schedulers alike): each metric is first
// averaged over an episode's steps, then summarized across episodes.
struct EvalSummary {
  int n_episodes = 0;
  double mean_utility = 0.0, std_utility = 0.0;
  double mean_throughput = 0.0, std_throughput = 0.0;
  double mean_efficiency = 0.0, std_efficiency = 0.0;
  double mean_violations = 0.0, std_violations = 0.0;
  double mean_reward = 0.0, std_reward = 0.0;
  std::vector<double> episode_utility;
  std::vector<double> episode_throughput;
};

// Folds per-episode means into an EvalSummary (mean and sample stddev across
// episodes; stddev 0 for a single episode).  All vectors must share a length.
EvalSummary summarize_episodes(std::vector<double> utility,
                               std::vector<double> throughput,
                               const std::vector<double>& efficiency,
                               const std::vector<double>& violations,
                               const std::vector<double>& rewards);

// The slotframe-scheduling MDP.  Observation layout (all entries in [0,1]):
//   [0]      w_throughput / (w_throughput + w_efficiency)
//   [1]      w_efficiency / (w_throughput + w_efficiency)
//   [2+3i+0] queue length of node i / queue_capacity
//   [2+3i+1] hop count of node i / max_hops
//   [2+3i+2] success rate of node i in the previous slotframe (1.0 at reset)
// Action heads, interleaved per node: [cells(T*M), powers(P)] * N.
// Each reset draws a fresh topology; episodes end after episode_len frames.
class TschEnv : public Env {
 public:
  TschEnv(Scenario scenario, uint64_t seed);

  int observation_dim() const override { return 2 + 3 * scenario_.net.n_nodes; }
  const std::vector<int>& action_head_sizes() const override { return head_sizes_; }
  std::vector<double> reset() override;
  EnvStep step(std::span<const int> action) override;

  const Scenario& scenario() const { return scenario_; }
  const SimState& sim_state() const;
  int64_t episode_index() const { return episode_index_; }

  // Installed on every episode's simulation state (reset() included).
  void set_trace_sink(TraceSink sink);

 private:
  std::vector<double> observation() const;

  Scenario scenario_;
  uint64_t seed_;
  TraceSink trace_;
  std::vector<int> head_sizes_;
  std::optional<SimState> state_;
  std::vector<double> prev_success_;
  int64_t episode_index_ = -1;
  int steps_done_ = 0;
  bool done_ = true;
};

}  // namespace tschpg

#endif  // TSCHPG_ENV_HPP
