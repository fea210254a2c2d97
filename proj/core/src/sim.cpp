#include "tschpg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tschpg/errors.hpp"
#include "tschpg/rng.hpp"

namespace tschpg {

void SimConfig::validate() const {
  if (!(traffic_rate >= 0.0 && traffic_rate <= 1.0)) {
    throw ConfigError("traffic_rate must lie in [0,1]");
  }
  if (queue_capacity < 1) throw ConfigError("queue_capacity must be at least 1");
  if (max_hops < 1) throw ConfigError("max_hops must be at least 1");
  if (!(area_side_m > 0.0)) throw ConfigError("area_side_m must be positive");
}

SimState::SimState(NetworkConfig net, SimConfig sim, QosSpec qos,
                   Topology topology, uint64_t seed)
    : net_(std::move(net)),
      sim_(std::move(sim)),
      qos_(std::move(qos)),
      topology_(std::move(topology)),
      seed_(seed),
      traffic_key_(hash_key(seed, 0x7261ffULL)),
      fading_key_(hash_key(seed, 0xfade00ULL)),
      drop_key_(hash_key(seed, 0xd20700ULL)),
      queues_(net_.n_nodes) {
  net_.validate();
  sim_.validate();
  qos_.validate(net_.n_nodes);
  topology_.validate(sim_.max_hops);
  if (topology_.n_nodes() != net_.n_nodes) {
    throw ConfigError("topology node count does not match the network config");
  }
}

int64_t SimState::queued_packets() const {
  int64_t total = 0;
  for (const auto& q : queues_) total += static_cast<int64_t>(q.size());
  return total;
}

Topology generate_topology(int n_nodes, int max_hops, double area_side_m,
                           uint64_t seed) {
  if (n_nodes < 1) throw ConfigError("n_nodes must be at least 1");
  if (max_hops < 1) throw ConfigError("max_hops must be at least 1");
  if (!(area_side_m > 0.0)) throw ConfigError("area_side_m must be positive");

  Topology topo;
  topo.router_position = {0.5 * area_side_m, 0.5 * area_side_m};
  topo.parent.resize(n_nodes);
  topo.hop_count.resize(n_nodes);
  topo.position.resize(n_nodes);

  Rng rng = Rng(seed).stream("topology");
  for (int i = 0; i < n_nodes; ++i) {
    topo.position[i] = {rng.uniform() * area_side_m, rng.uniform() * area_side_m};
  }
  // Attach nodes in index order: nearest already-attached candidate that can
  // still accept a child without exceeding max_hops; the router always can.
  for (int i = 0; i < n_nodes; ++i) {
    int best_parent = kRouter;
    double best_d2 = squared_distance(topo.position[i], topo.router_position);
    for (int j = 0; j < i; ++j) {
      if (topo.hop_count[j] >= max_hops) continue;
      const double d2 = squared_distance(topo.position[i], topo.position[j]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best_parent = j;
      }
    }
    topo.parent[i] = best_parent;
    topo.hop_count[i] = best_parent == kRouter ? 1 : topo.hop_count[best_parent] + 1;
  }
  return topo;
}

int inject_traffic(SimState& state) {
  int created = 0;
  for (int i = 0; i < state.net_.n_nodes; ++i) {
    const double u = keyed_uniform(state.traffic_key_,
                                   static_cast<uint64_t>(state.frame_index_),
                                   static_cast<uint64_t>(i));
    if (u >= state.sim_.traffic_rate) continue;
    ++created;
    state.total_generated_ += 1;
    state.pending_generated_ += 1;
    if (static_cast<int>(state.queues_[i].size()) >= state.sim_.queue_capacity) {
      state.total_dropped_overflow_ += 1;
      state.pending_overflow_ += 1;
      continue;
    }
    Packet pkt;
    pkt.source = i;
    pkt.created_slot = state.clock_;
    pkt.deadline_slot = state.clock_ + state.qos_.deadline_slots[i];
    pkt.hops_remaining = state.topology_.hop_count[i];
    state.queues_[i].push_back(pkt);
  }
  return created;
}

namespace {

// Channel a deadline drop is charged to: the packet source's scheduled
// channel, drawn uniformly (keyed by the packet identity, so paired runs
// agree) when the source holds cells on several channels.
int drop_channel(const ScheduleMatrix& schedule, uint64_t drop_key,
                 const Packet& pkt) {
  std::vector<int> active;
  for (int k = 0; k < schedule.n_channels(); ++k) {
    if (schedule.node_uses_channel(pkt.source, k)) active.push_back(k);
  }
  if (active.empty()) return 0;
  if (active.size() == 1) return active[0];
  const double u = keyed_uniform(drop_key, static_cast<uint64_t>(pkt.source),
                                 static_cast<uint64_t>(pkt.created_slot));
  size_t pick = static_cast<size_t>(u * static_cast<double>(active.size()));
  if (pick >= active.size()) pick = active.size() - 1;
  return active[pick];
}

}  // namespace

SlotframeReport run_slotframe(SimState& state, const ScheduleMatrix& schedule,
                              const PowerAllocation& powers, const QosSpec& qos) {
  const NetworkConfig& net = state.net_;
  qos.validate(net.n_nodes);
  if (!validate_schedule(net, schedule).empty()) {
    throw ConstraintError("schedule assigns a node two cells in one timeslot");
  }
  if (static_cast<int>(powers.power_mw.size()) != net.n_nodes) {
    throw InputError("power allocation must have one entry per node");
  }

  SlotframeReport report;
  report.stats = LinkStats(net.n_nodes, net.n_channels);
  report.generated = state.pending_generated_;
  report.dropped_overflow = state.pending_overflow_;
  state.pending_generated_ = 0;
  state.pending_overflow_ = 0;

  struct Tx {
    int node;
    double power;
    double fading;
  };
  std::vector<Tx> txs;
  std::vector<ActiveTransmission> active;
  // A successful hop: pop the head of `from` and hand the packet to its
  // parent (or to the router) after the slot's outcomes are all decided.
  std::vector<int> completed;

  for (int t = 0; t < net.slotframe_len; ++t) {
    const int64_t now = state.clock_ + t;
    completed.clear();
    for (int k = 0; k < net.n_channels; ++k) {
      txs.clear();
      for (int i = 0; i < net.n_nodes; ++i) {
        if (!schedule.at(i, t, k)) continue;
        // About to attempt: first purge everything past its deadline.  Relay
        // queues are not age-sorted, so the whole queue is scanned.
        auto& queue = state.queues_[i];
        for (auto it = queue.begin(); it != queue.end();) {
          if (now - it->created_slot > qos.deadline_slots[it->source]) {
            report.dropped_deadline += 1;
            state.total_dropped_deadline_ += 1;
            report.stats.record_drop(
                it->source, drop_channel(schedule, state.drop_key_, *it));
            it = queue.erase(it);
          } else {
            ++it;
          }
        }
        if (queue.empty()) continue;
        const double fading =
            state.sim_.rayleigh_fading
                ? keyed_exponential(state.fading_key_,
                                    static_cast<uint64_t>(state.frame_index_),
                                    static_cast<uint64_t>(t),
                                    static_cast<uint64_t>(i))
                : 1.0;
        txs.push_back({i, powers.power_mw[i], fading});
      }
      if (txs.empty()) continue;
      active.clear();
      for (const Tx& tx : txs) active.push_back({tx.node, tx.power, tx.fading});
      const std::vector<double> sinr =
          sinr_of_transmissions(net, state.topology_, active);
      for (size_t a = 0; a < txs.size(); ++a) {
        const bool success = sinr[a] >= net.sinr_threshold;
        report.stats.record_attempt(txs[a].node, k, sinr[a], success);
        if (state.trace_) {
          state.trace_({now, txs[a].node, k, txs[a].power, sinr[a], success});
        }
        if (success) completed.push_back(txs[a].node);
      }
    }
    // Apply the slot's successful hops in deterministic (channel, node)
    // order; arrivals become visible to their new holder from the next slot.
    for (int from : completed) {
      Packet pkt = state.queues_[from].front();
      state.queues_[from].pop_front();
      pkt.hops_remaining -= 1;
      const int parent = state.topology_.parent[from];
      if (parent == kRouter) {
        report.delivered += 1;
        state.total_delivered_ += 1;
      } else if (static_cast<int>(state.queues_[parent].size()) >=
                 state.sim_.queue_capacity) {
        report.dropped_overflow += 1;
        state.total_dropped_overflow_ += 1;
      } else {
        state.queues_[parent].push_back(pkt);
      }
    }
  }

  for (int i = 0; i < net.n_nodes; ++i) {
    report.energy_spent += powers.power_mw[i] * schedule.cell_count(i);
  }
  state.clock_ += net.slotframe_len;
  state.frame_index_ += 1;
  return report;
}

std::vector<SlotframeReport> run_episode(
    SimState& state,
    std::span<const std::pair<ScheduleMatrix, PowerAllocation>> assignments,
    const QosSpec& qos) {
  if (assignments.empty()) throw InputError("run_episode needs at least one slotframe");
  std::vector<SlotframeReport> reports;
  reports.reserve(assignments.size());
  for (const auto& [schedule, powers] : assignments) {
    inject_traffic(state);
    reports.push_back(run_slotframe(state, schedule, powers, qos));
  }
  return reports;
}

}  // namespace tschpg
