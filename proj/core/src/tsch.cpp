#include "tschpg/tsch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tschpg/errors.hpp"

namespace tschpg {

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

void NetworkConfig::validate() const {
  if (n_nodes < 1) throw ConfigError("n_nodes must be at least 1");
  if (n_channels < 1) throw ConfigError("n_channels must be at least 1");
  if (slotframe_len < 1) throw ConfigError("slotframe_len must be at least 1");
  if (!(noise_floor_mw > 0.0)) throw ConfigError("noise_floor_mw must be positive");
  if (!(pathloss_exponent > 0.0)) throw ConfigError("pathloss_exponent must be positive");
  if (!(reference_gain > 0.0)) throw ConfigError("reference_gain must be positive");
  if (!(sinr_threshold > 0.0)) throw ConfigError("sinr_threshold must be positive");
  if (power_levels_mw.empty()) throw ConfigError("power_levels_mw must not be empty");
  for (double p : power_levels_mw) {
    if (!(p > 0.0)) throw ConfigError("power levels must be positive");
  }
}

Vec2 Topology::receiver_position(int node) const {
  const int p = parent[node];
  return p == kRouter ? router_position : position[p];
}

void Topology::validate(int max_hops) const {
  const int n = n_nodes();
  if (static_cast<int>(hop_count.size()) != n || static_cast<int>(position.size()) != n) {
    throw ConfigError("topology arrays disagree on node count");
  }
  for (int i = 0; i < n; ++i) {
    const int p = parent[i];
    if (p != kRouter && (p < 0 || p >= n)) {
      throw ConfigError("parent index out of range");
    }
    const int expected = p == kRouter ? 1 : hop_count[p] + 1;
    if (hop_count[i] != expected) {
      throw ConfigError("hop_count inconsistent with parent chain");
    }
    if (hop_count[i] < 1 || hop_count[i] > max_hops) {
      throw ConfigError("hop_count outside [1, max_hops]");
    }
  }
  // Hop counts increase along child edges, so the parent relation is acyclic
  // and every chain terminates at the router.
}

ScheduleMatrix::ScheduleMatrix(int n_nodes, int n_slots, int n_channels)
    : n_nodes_(n_nodes),
      n_slots_(n_slots),
      n_channels_(n_channels),
      cells_(static_cast<size_t>(n_nodes) * n_slots * n_channels, 0) {
  if (n_nodes < 1 || n_slots < 1 || n_channels < 1) {
    throw ConfigError("schedule dimensions must be positive");
  }
}

size_t ScheduleMatrix::index(int node, int slot, int channel) const {
  if (node < 0 || node >= n_nodes_ || slot < 0 || slot >= n_slots_ ||
      channel < 0 || channel >= n_channels_) {
    throw InputError("schedule cell index out of range");
  }
  return (static_cast<size_t>(node) * n_slots_ + slot) * n_channels_ + channel;
}

bool ScheduleMatrix::node_uses_channel(int node, int channel) const {
  for (int t = 0; t < n_slots_; ++t) {
    if (at(node, t, channel)) return true;
  }
  return false;
}

int ScheduleMatrix::cell_count(int node) const {
  int count = 0;
  for (int t = 0; t < n_slots_; ++t) {
    for (int k = 0; k < n_channels_; ++k) {
      count += at(node, t, k) ? 1 : 0;
    }
  }
  return count;
}

int ScheduleMatrix::total_cells() const {
  int count = 0;
  for (uint8_t c : cells_) count += c;
  return count;
}

QosSpec QosSpec::uniform(int n_nodes, int deadline, double drop_bound,
                         double err_bound) {
  QosSpec qos;
  qos.deadline_slots.assign(n_nodes, deadline);
  qos.max_drop.assign(n_nodes, drop_bound);
  qos.max_err.assign(n_nodes, err_bound);
  return qos;
}

void QosSpec::validate(int n_nodes) const {
  if (static_cast<int>(deadline_slots.size()) != n_nodes ||
      static_cast<int>(max_drop.size()) != n_nodes ||
      static_cast<int>(max_err.size()) != n_nodes) {
    throw ConfigError("QoS spec arrays must have one entry per node");
  }
  for (int i = 0; i < n_nodes; ++i) {
    if (deadline_slots[i] < 1) throw ConfigError("deadline_slots must be at least 1");
    if (!is_probability(max_drop[i]) || !is_probability(max_err[i])) {
      throw ConfigError("QoS probability bounds must lie in [0,1]");
    }
  }
}

void UtilityWeights::validate() const {
  if (!std::isfinite(w_throughput) || !std::isfinite(w_efficiency) ||
      w_throughput < 0.0 || w_efficiency < 0.0) {
    throw ConfigError("utility weights must be finite and nonnegative");
  }
  if (w_throughput + w_efficiency <= 0.0) {
    throw ConfigError("at least one utility weight must be positive");
  }
}

LinkStats::LinkStats(int n_nodes, int n_channels)
    : n_nodes_(n_nodes),
      n_channels_(n_channels),
      attempts_(static_cast<size_t>(n_nodes) * n_channels, 0),
      errors_(static_cast<size_t>(n_nodes) * n_channels, 0),
      drops_(static_cast<size_t>(n_nodes) * n_channels, 0),
      sinr_(static_cast<size_t>(n_nodes) * n_channels) {
  if (n_nodes < 1 || n_channels < 1) {
    throw ConfigError("link stats dimensions must be positive");
  }
}

size_t LinkStats::index(int node, int channel) const {
  if (node < 0 || node >= n_nodes_ || channel < 0 || channel >= n_channels_) {
    throw InputError("link stats index out of range");
  }
  return static_cast<size_t>(node) * n_channels_ + channel;
}

void LinkStats::record_attempt(int node, int channel, double sinr, bool success) {
  const size_t i = index(node, channel);
  attempts_[i] += 1;
  if (!success) errors_[i] += 1;
  sinr_[i].push_back(sinr);
}

void LinkStats::record_drop(int node, int channel) {
  drops_[index(node, channel)] += 1;
}

void LinkStats::merge(const LinkStats& other) {
  if (other.n_nodes_ != n_nodes_ || other.n_channels_ != n_channels_) {
    throw InputError("cannot merge link stats of different dimensions");
  }
  for (size_t i = 0; i < attempts_.size(); ++i) {
    attempts_[i] += other.attempts_[i];
    errors_[i] += other.errors_[i];
    drops_[i] += other.drops_[i];
    sinr_[i].insert(sinr_[i].end(), other.sinr_[i].begin(), other.sinr_[i].end());
  }
}

double LinkStats::drop_prob(int node, int channel) const {
  const int64_t off = offered(node, channel);
  if (off == 0) return 0.0;
  return static_cast<double>(drops(node, channel)) / static_cast<double>(off);
}

double LinkStats::err_prob(int node, int channel) const {
  const int64_t att = attempts(node, channel);
  if (att == 0) return 0.0;
  return static_cast<double>(errors(node, channel)) / static_cast<double>(att);
}

double LinkStats::suc_prob(int node, int channel) const {
  if (offered(node, channel) == 0) return 0.0;
  return success_probability(drop_prob(node, channel), err_prob(node, channel));
}

std::span<const double> LinkStats::sinr_samples(int node, int channel) const {
  return sinr_[index(node, channel)];
}

double path_gain(const NetworkConfig& config, Vec2 from, Vec2 to) {
  // Far-field floor: below 1 m the power law is out of its validity range and
  // diverges, so the gain saturates at reference_gain there.
  const double d2 = std::max(squared_distance(from, to), 1.0);
  // distance^-alpha computed from the squared distance to avoid one sqrt.
  return config.reference_gain * std::pow(d2, -0.5 * config.pathloss_exponent);
}

std::vector<double> sinr_of_transmissions(
    const NetworkConfig& config, const Topology& topology,
    std::span<const ActiveTransmission> transmissions) {
  const size_t n = transmissions.size();
  std::vector<double> result(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const ActiveTransmission& tx = transmissions[i];
    if (tx.fading < 0.0) throw InputError("fading must be nonnegative");
    const Vec2 rx = topology.receiver_position(tx.node);
    const int rx_node = topology.parent[tx.node];
    if (squared_distance(topology.position[tx.node], rx) == 0.0) {
      throw ModelError("transmitter co-located with its receiver");
    }
    double interference = 0.0;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const ActiveTransmission& other = transmissions[j];
      // Zero distance to the receiver is fine for the receiver's own radio
      // (a parent transmitting in its child's cell jams its own reception at
      // the floored gain) but a modelling error for distinct radios.
      if (other.node != rx_node &&
          squared_distance(topology.position[other.node], rx) == 0.0) {
        throw ModelError("interferer co-located with a receiver");
      }
      interference += other.power_mw * other.fading *
                      path_gain(config, topology.position[other.node], rx);
    }
    const double signal =
        tx.power_mw * tx.fading * path_gain(config, topology.position[tx.node], rx);
    result[i] = signal / (config.noise_floor_mw + interference);
  }
  return result;
}

std::vector<SinrEntry> compute_sinr(const NetworkConfig& config,
                                    const Topology& topology,
                                    const ScheduleMatrix& schedule,
                                    const PowerAllocation& powers,
                                    std::span<const double> fading, int slot,
                                    int channel) {
  const int n = schedule.n_nodes();
  if (topology.n_nodes() != n) throw InputError("topology/schedule node count mismatch");
  if (static_cast<int>(powers.power_mw.size()) != n) {
    throw InputError("power allocation must have one entry per node");
  }
  if (static_cast<int>(fading.size()) != n) {
    throw InputError("fading must have one entry per node");
  }
  if (slot < 0 || slot >= schedule.n_slots() || channel < 0 ||
      channel >= schedule.n_channels()) {
    throw InputError("slot or channel out of range");
  }
  std::vector<ActiveTransmission> active;
  for (int i = 0; i < n; ++i) {
    if (!schedule.at(i, slot, channel)) continue;
    if (fading[i] < 0.0) throw InputError("fading must be nonnegative");
    active.push_back({i, powers.power_mw[i], fading[i]});
  }
  const std::vector<double> sinr = sinr_of_transmissions(config, topology, active);
  std::vector<SinrEntry> result(active.size());
  for (size_t i = 0; i < active.size(); ++i) {
    result[i] = {active[i].node, sinr[i]};
  }
  return result;
}

std::vector<ScheduleViolation> validate_schedule(const NetworkConfig& config,
                                                 const ScheduleMatrix& schedule) {
  if (schedule.n_nodes() != config.n_nodes ||
      schedule.n_slots() != config.slotframe_len ||
      schedule.n_channels() != config.n_channels) {
    throw InputError("schedule dimensions do not match the network config");
  }
  std::vector<ScheduleViolation> violations;
  for (int i = 0; i < schedule.n_nodes(); ++i) {
    for (int t = 0; t < schedule.n_slots(); ++t) {
      int used = 0;
      for (int k = 0; k < schedule.n_channels(); ++k) {
        used += schedule.at(i, t, k) ? 1 : 0;
      }
      if (used > 1) violations.push_back({i, t});
    }
  }
  return violations;
}

double success_probability(double drop_prob, double err_prob) {
  if (!is_probability(drop_prob) || !is_probability(err_prob)) {
    throw InputError("probabilities must lie in [0,1]");
  }
  const double p = 1.0 - drop_prob - err_prob + drop_prob * err_prob;
  return std::clamp(p, 0.0, 1.0);
}

double throughput(const LinkStats& stats, const ScheduleMatrix& schedule) {
  if (stats.n_nodes() != schedule.n_nodes() ||
      stats.n_channels() != schedule.n_channels()) {
    throw InputError("stats dimensions do not match the schedule");
  }
  double th = 0.0;
  for (int i = 0; i < schedule.n_nodes(); ++i) {
    for (int k = 0; k < schedule.n_channels(); ++k) {
      if (schedule.node_uses_channel(i, k)) {
        th += stats.suc_prob(i, k);
      }
    }
  }
  return th;
}

double energy_efficiency(double throughput_value, const ScheduleMatrix& schedule,
                         const PowerAllocation& powers) {
  if (static_cast<int>(powers.power_mw.size()) != schedule.n_nodes()) {
    throw InputError("power allocation must have one entry per node");
  }
  if (throughput_value < 0.0) throw InputError("throughput must be nonnegative");
  double spent = 0.0;
  for (int i = 0; i < schedule.n_nodes(); ++i) {
    spent += powers.power_mw[i] * schedule.cell_count(i);
  }
  if (spent <= 0.0) {
    throw UndefinedEfficiencyError("efficiency undefined for an all-zero schedule");
  }
  return throughput_value / spent;
}

double utility(double throughput_value, double efficiency_value,
               const UtilityWeights& weights) {
  weights.validate();
  if (throughput_value < 0.0 || efficiency_value < 0.0) {
    throw InputError("utility terms must be nonnegative");
  }
  return weights.w_throughput * throughput_value +
         weights.w_efficiency * efficiency_value;
}

std::vector<QosViolation> qos_violations(const LinkStats& stats,
                                         const QosSpec& qos) {
  qos.validate(stats.n_nodes());
  std::vector<QosViolation> violations;
  for (int i = 0; i < stats.n_nodes(); ++i) {
    for (int k = 0; k < stats.n_channels(); ++k) {
      if (stats.offered(i, k) == 0) continue;
      if (stats.drop_prob(i, k) >= qos.max_drop[i]) {
        violations.push_back({i, k, QosViolation::Kind::kDrop});
      }
      if (stats.attempts(i, k) > 0 && stats.err_prob(i, k) >= qos.max_err[i]) {
        violations.push_back({i, k, QosViolation::Kind::kErr});
      }
    }
  }
  return violations;
}

}  // namespace tschpg
