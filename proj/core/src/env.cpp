#include "tschpg/env.hpp"

#include <cmath>
#include <string>

#include "tschpg/errors.hpp"
#include "tschpg/rng.hpp"

namespace tschpg {

namespace {

void mean_std(const std::vector<double>& xs, double* mean, double* stddev) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m) * (x - m);
  var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
  *mean = m;
  *stddev = std::sqrt(var);
}

}  // namespace

EvalSummary summarize_episodes(std::vector<double> utility,
                               std::vector<double> throughput,
                               const std::vector<double>& efficiency,
                               const std::vector<double>& violations,
                               const std::vector<double>& rewards) {
  const size_t n = utility.size();
  if (n == 0 || throughput.size() != n || efficiency.size() != n ||
      violations.size() != n || rewards.size() != n) {
    throw InputError("episode metric vectors must share a nonzero length");
  }
  EvalSummary summary;
  summary.n_episodes = static_cast<int>(n);
  mean_std(utility, &summary.mean_utility, &summary.std_utility);
  mean_std(throughput, &summary.mean_throughput, &summary.std_throughput);
  mean_std(efficiency, &summary.mean_efficiency, &summary.std_efficiency);
  mean_std(violations, &summary.mean_violations, &summary.std_violations);
  mean_std(rewards, &summary.mean_reward, &summary.std_reward);
  summary.episode_utility = std::move(utility);
  summary.episode_throughput = std::move(throughput);
  return summary;
}

Scenario Scenario::reference() {
  Scenario s;
  s.net = NetworkConfig{};
  s.sim = SimConfig{};
  s.qos = QosSpec::uniform(s.net.n_nodes, 64, 0.25, 0.5);
  s.weights = UtilityWeights{};
  return s;
}

void Scenario::validate() const {
  net.validate();
  sim.validate();
  qos.validate(net.n_nodes);
  weights.validate();
  if (episode_len < 1) throw ConfigError("episode_len must be at least 1");
  if (!(qos_penalty >= 0.0)) throw ConfigError("qos_penalty must be nonnegative");
}

double reward_fn(double th, double eta, const UtilityWeights& weights,
                 int n_violations, double qos_penalty) {
  return utility(th, eta, weights) - qos_penalty * n_violations;
}

uint64_t episode_seed(uint64_t run_seed, int64_t episode_index) {
  return hash_key(run_seed, 0xe915ULL, static_cast<uint64_t>(episode_index));
}

SimState make_episode_state(const Scenario& scenario, uint64_t ep_seed) {
  Topology topo = generate_topology(scenario.net.n_nodes, scenario.sim.max_hops,
                                    scenario.sim.area_side_m, ep_seed);
  return SimState(scenario.net, scenario.sim, scenario.qos, std::move(topo),
                  hash_key(ep_seed, 0x51abULL));
}

std::pair<ScheduleMatrix, PowerAllocation> decode_action(
    const Scenario& scenario, std::span<const int> raw) {
  const int n = scenario.net.n_nodes;
  const int n_cells = scenario.net.n_cells();
  const int n_powers = static_cast<int>(scenario.net.power_levels_mw.size());
  if (static_cast<int>(raw.size()) != 2 * n) {
    throw ActionError("expected one (cell, power) index pair per node");
  }
  ScheduleMatrix schedule(n, scenario.net.slotframe_len, scenario.net.n_channels);
  PowerAllocation powers;
  powers.power_mw.resize(n);
  for (int i = 0; i < n; ++i) {
    const int cell = raw[2 * i];
    const int power = raw[2 * i + 1];
    if (cell < 0 || cell >= n_cells) {
      throw ActionError("cell index out of range for node " + std::to_string(i));
    }
    if (power < 0 || power >= n_powers) {
      throw ActionError("power index out of range for node " + std::to_string(i));
    }
    schedule.set(i, cell / scenario.net.n_channels, cell % scenario.net.n_channels,
                 true);
    powers.power_mw[i] = scenario.net.power_levels_mw[power];
  }
  return {std::move(schedule), std::move(powers)};
}

TschEnv::TschEnv(Scenario scenario, uint64_t seed)
    : scenario_(std::move(scenario)), seed_(seed) {
  scenario_.validate();
  const int n_cells = scenario_.net.n_cells();
  const int n_powers = static_cast<int>(scenario_.net.power_levels_mw.size());
  for (int i = 0; i < scenario_.net.n_nodes; ++i) {
    head_sizes_.push_back(n_cells);
    head_sizes_.push_back(n_powers);
  }
}

const SimState& TschEnv::sim_state() const {
  if (!state_) throw LifecycleError("environment has not been reset");
  return *state_;
}

void TschEnv::set_trace_sink(TraceSink sink) {
  trace_ = std::move(sink);
  if (state_) state_->set_trace_sink(trace_);
}

std::vector<double> TschEnv::reset() {
  episode_index_ += 1;
  state_ = make_episode_state(scenario_, episode_seed(seed_, episode_index_));
  if (trace_) state_->set_trace_sink(trace_);
  prev_success_.assign(scenario_.net.n_nodes, 1.0);
  steps_done_ = 0;
  done_ = false;
  return observation();
}

std::vector<double> TschEnv::observation() const {
  const int n = scenario_.net.n_nodes;
  std::vector<double> obs;
  obs.reserve(2 + 3 * n);
  const double wsum = scenario_.weights.w_throughput + scenario_.weights.w_efficiency;
  obs.push_back(scenario_.weights.w_throughput / wsum);
  obs.push_back(scenario_.weights.w_efficiency / wsum);
  for (int i = 0; i < n; ++i) {
    obs.push_back(static_cast<double>(state_->queue(i).size()) /
                  scenario_.sim.queue_capacity);
    obs.push_back(static_cast<double>(state_->topology().hop_count[i]) /
                  scenario_.sim.max_hops);
    obs.push_back(prev_success_[i]);
  }
  return obs;
}

EnvStep TschEnv::step(std::span<const int> action) {
  if (done_) throw LifecycleError("episode finished; call reset() first");
  auto [schedule, powers] = decode_action(scenario_, action);

  inject_traffic(*state_);
  const SlotframeReport report =
      run_slotframe(*state_, schedule, powers, scenario_.qos);

  const double th = throughput(report.stats, schedule);
  double eta = 0.0;
  try {
    eta = energy_efficiency(th, schedule, powers);
  } catch (const UndefinedEfficiencyError&) {
    eta = 0.0;  // unreachable with one cell per node, kept for safety
  }
  const auto violations = qos_violations(report.stats, scenario_.qos);
  const int n_violations = static_cast<int>(violations.size());

  EnvStep result;
  result.th = th;
  result.eta = eta;
  result.utility_value = utility(th, eta, scenario_.weights);
  result.penalty = scenario_.qos_penalty * n_violations;
  result.violation_count = n_violations;
  result.reward = result.utility_value - result.penalty;

  const int n = scenario_.net.n_nodes;
  for (int i = 0; i < n; ++i) {
    int64_t offered = 0;
    int64_t successes = 0;
    for (int k = 0; k < scenario_.net.n_channels; ++k) {
      offered += report.stats.offered(i, k);
      successes += report.stats.successes(i, k);
    }
    prev_success_[i] = offered > 0
                           ? static_cast<double>(successes) / static_cast<double>(offered)
                           : 1.0;
  }

  steps_done_ += 1;
  done_ = steps_done_ >= scenario_.episode_len;
  result.done = done_;
  result.observation = observation();
  return result;
}

}  // namespace tschpg
