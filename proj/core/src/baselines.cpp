#include "tschpg/baselines.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "tschpg/errors.hpp"

namespace tschpg {

namespace {

double max_power_level(const NetworkConfig& net) {
  return *std::max_element(net.power_levels_mw.begin(),
                           net.power_levels_mw.end());
}

}  // namespace

void MsfState::Params::validate() const {
  if (!(0.0 <= lo && lo < hi && hi <= 1.0)) {
    throw ConfigError("utilization thresholds must satisfy 0 <= lo < hi <= 1");
  }
  if (window < 1) throw ConfigError("utilization window must be at least 1");
}

MsfState::MsfState(NetworkConfig net, Params params, uint64_t seed,
                   WarnSink warn)
    : net_(std::move(net)),
      params_(params),
      rng_(Rng(seed).stream("msf")),
      warn_(std::move(warn)) {
  net_.validate();
  params_.validate();
  cells_.resize(net_.n_nodes);
  history_.resize(net_.n_nodes);
  const int t = net_.slotframe_len;
  const int m = net_.n_channels;
  for (int i = 0; i < net_.n_nodes; ++i) {
    cells_[i].push_back(Cell{(i / m) % t, i % m});
  }
}

double MsfState::utilization(int node) const {
  if (node < 0 || node >= net_.n_nodes) throw InputError("node index out of range");
  int used = 0;
  int allocated = 0;
  for (const auto& [u, a] : history_[node]) {
    used += u;
    allocated += a;
  }
  if (allocated == 0) return 1.0;
  return static_cast<double>(used) / static_cast<double>(allocated);
}

std::pair<ScheduleMatrix, PowerAllocation> MsfState::current() const {
  ScheduleMatrix schedule(net_.n_nodes, net_.slotframe_len, net_.n_channels);
  for (int i = 0; i < net_.n_nodes; ++i) {
    for (const Cell& c : cells_[i]) schedule.set(i, c.slot, c.channel, true);
  }
  PowerAllocation powers;
  powers.power_mw.assign(net_.n_nodes, max_power_level(net_));
  return {std::move(schedule), std::move(powers)};
}

void MsfState::add_random_cell(int node) {
  std::vector<uint8_t> slot_taken(net_.slotframe_len, 0);
  for (const Cell& c : cells_[node]) slot_taken[c.slot] = 1;
  std::vector<int> free_slots;
  for (int t = 0; t < net_.slotframe_len; ++t) {
    if (!slot_taken[t]) free_slots.push_back(t);
  }
  if (free_slots.empty()) {
    if (warn_) {
      warn_("node " + std::to_string(node) +
            " holds a cell in every timeslot; allocation unchanged");
    }
    return;
  }
  const int pick =
      rng_.uniform_int(static_cast<int>(free_slots.size()) * net_.n_channels);
  cells_[node].push_back(
      Cell{free_slots[pick / net_.n_channels], pick % net_.n_channels});
}

void MsfState::remove_random_cell(int node) {
  const int pick = rng_.uniform_int(static_cast<int>(cells_[node].size()));
  cells_[node].erase(cells_[node].begin() + pick);
}

std::pair<ScheduleMatrix, PowerAllocation> msf_step(
    MsfState& state, const SlotframeReport& last_report) {
  const NetworkConfig& net = state.net_;
  if (last_report.stats.n_nodes() != net.n_nodes ||
      last_report.stats.n_channels() != net.n_channels) {
    throw InputError("report dimensions do not match the network");
  }
  for (int i = 0; i < net.n_nodes; ++i) {
    int64_t used = 0;
    for (int k = 0; k < net.n_channels; ++k) used += last_report.stats.attempts(i, k);
    auto& window = state.history_[i];
    window.emplace_back(static_cast<int>(used),
                        static_cast<int>(state.cells_[i].size()));
    if (static_cast<int>(window.size()) > state.params_.window) {
      window.erase(window.begin());
    }
  }
  for (int i = 0; i < net.n_nodes; ++i) {
    const double u = state.utilization(i);
    if (u > state.params_.hi) {
      state.add_random_cell(i);
    } else if (u < state.params_.lo && state.cells_[i].size() > 1) {
      state.remove_random_cell(i);
    }
  }
  return state.current();
}

std::pair<ScheduleMatrix, PowerAllocation> random_schedule(
    const Scenario& scenario, uint64_t seed) {
  Rng rng = Rng(seed).stream("random-schedule");
  const int n_cells = scenario.net.n_cells();
  const int n_powers = static_cast<int>(scenario.net.power_levels_mw.size());
  std::vector<int> raw;
  raw.reserve(2 * scenario.net.n_nodes);
  for (int i = 0; i < scenario.net.n_nodes; ++i) {
    raw.push_back(rng.uniform_int(n_cells));
    raw.push_back(rng.uniform_int(n_powers));
  }
  return decode_action(scenario, raw);
}

std::pair<ScheduleMatrix, PowerAllocation> round_robin_schedule(
    const Scenario& scenario, int64_t slotframe_index, const WarnSink& warn) {
  (void)slotframe_index;
  const NetworkConfig& net = scenario.net;
  if (net.n_nodes > net.n_cells() && warn) {
    warn("more nodes than cells (" + std::to_string(net.n_nodes) + " > " +
         std::to_string(net.n_cells()) + "); cells are reused modulo capacity");
  }
  ScheduleMatrix schedule(net.n_nodes, net.slotframe_len, net.n_channels);
  for (int i = 0; i < net.n_nodes; ++i) {
    schedule.set(i, (i / net.n_channels) % net.slotframe_len,
                 i % net.n_channels, true);
  }
  PowerAllocation powers;
  powers.power_mw.assign(net.n_nodes, max_power_level(net));
  return {std::move(schedule), std::move(powers)};
}

namespace {

class MsfScheduler : public Scheduler {
 public:
  explicit MsfScheduler(WarnSink warn) : warn_(std::move(warn)) {}

  void reset(const Scenario& scenario, uint64_t ep_seed) override {
    state_.emplace(scenario.net, MsfState::Params{},
                   hash_key(ep_seed, 0x6d5fULL), warn_);
  }

  std::pair<ScheduleMatrix, PowerAllocation> assign(
      int64_t, const SlotframeReport* last_report) override {
    if (!state_) throw LifecycleError("scheduler has not been reset");
    if (!last_report) return state_->current();
    return msf_step(*state_, *last_report);
  }

 private:
  WarnSink warn_;
  std::optional<MsfState> state_;
};

class RandomScheduler : public Scheduler {
 public:
  void reset(const Scenario& scenario, uint64_t ep_seed) override {
    scenario_ = scenario;
    ep_seed_ = ep_seed;
  }

  std::pair<ScheduleMatrix, PowerAllocation> assign(
      int64_t frame_index, const SlotframeReport*) override {
    if (!scenario_) throw LifecycleError("scheduler has not been reset");
    return random_schedule(
        *scenario_,
        hash_key(ep_seed_, 0x7a4dULL, static_cast<uint64_t>(frame_index)));
  }

 private:
  std::optional<Scenario> scenario_;
  uint64_t ep_seed_ = 0;
};

class RoundRobinScheduler : public Scheduler {
 public:
  explicit RoundRobinScheduler(WarnSink warn) : warn_(std::move(warn)) {}

  void reset(const Scenario& scenario, uint64_t) override {
    scenario_ = scenario;
  }

  std::pair<ScheduleMatrix, PowerAllocation> assign(
      int64_t frame_index, const SlotframeReport*) override {
    if (!scenario_) throw LifecycleError("scheduler has not been reset");
    return round_robin_schedule(*scenario_, frame_index, warn_);
  }

 private:
  WarnSink warn_;
  std::optional<Scenario> scenario_;
};

}  // namespace

std::unique_ptr<Scheduler> make_scheduler(const std::string& algorithm,
                                          const WarnSink& warn) {
  if (algorithm == "msf") return std::make_unique<MsfScheduler>(warn);
  if (algorithm == "random") return std::make_unique<RandomScheduler>();
  if (algorithm == "round_robin") {
    return std::make_unique<RoundRobinScheduler>(warn);
  }
  throw ConfigError("unknown scheduler: " + algorithm);
}

EvalSummary evaluate_scheduler(Scheduler& scheduler, const Scenario& scenario,
                               int n_episodes, uint64_t seed,
                               const TraceSink& trace) {
  if (n_episodes < 1) throw ConfigError("n_episodes must be at least 1");
  scenario.validate();
  std::vector<double> utility, th, eff, violations, rewards;
  for (int ep = 0; ep < n_episodes; ++ep) {
    const uint64_t ep_seed = episode_seed(seed, ep);
    SimState state = make_episode_state(scenario, ep_seed);
    if (trace) state.set_trace_sink(trace);
    scheduler.reset(scenario, ep_seed);
    SlotframeReport last;
    bool have_last = false;
    double ep_utility = 0.0, ep_th = 0.0, ep_eta = 0.0, ep_violations = 0.0,
           ep_reward = 0.0;
    for (int step = 0; step < scenario.episode_len; ++step) {
      const auto [schedule, powers] =
          scheduler.assign(step, have_last ? &last : nullptr);
      inject_traffic(state);
      const SlotframeReport report =
          run_slotframe(state, schedule, powers, scenario.qos);
      const double step_th = throughput(report.stats, schedule);
      double step_eta = 0.0;
      try {
        step_eta = energy_efficiency(step_th, schedule, powers);
      } catch (const UndefinedEfficiencyError&) {
        step_eta = 0.0;
      }
      const int n_violations =
          static_cast<int>(qos_violations(report.stats, scenario.qos).size());
      ep_th += step_th;
      ep_eta += step_eta;
      ep_utility += tschpg::utility(step_th, step_eta, scenario.weights);
      ep_violations += n_violations;
      ep_reward += reward_fn(step_th, step_eta, scenario.weights, n_violations,
                             scenario.qos_penalty);
      last = report;
      have_last = true;
    }
    const double denom = static_cast<double>(scenario.episode_len);
    utility.push_back(ep_utility / denom);
    th.push_back(ep_th / denom);
    eff.push_back(ep_eta / denom);
    violations.push_back(ep_violations / denom);
    rewards.push_back(ep_reward / denom);
  }
  return summarize_episodes(std::move(utility), std::move(th), eff, violations,
                            rewards);
}

}  // namespace tschpg
