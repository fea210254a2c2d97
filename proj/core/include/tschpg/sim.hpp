#ifndef TSCHPG_SIM_HPP
#define TSCHPG_SIM_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "tschpg/tsch.hpp"

namespace tschpg {

// One upstream report unit travelling the parent chain towards the router.
struct Packet {
  int source = 0;
  int64_t created_slot = 0;
  int64_t deadline_slot = 0;   // created_slot + deadline of the source
  int hops_remaining = 0;
};

// Simulation knobs that sit outside the radio/network description.
struct SimConfig {
  double traffic_rate = 0.3;   // per-node packet arrival probability per slotframe
  int queue_capacity = 10;
  int max_hops = 3;
  double area_side_m = 50.0;
  bool rayleigh_fading = true; // unit-mean exponential fading vs. fixed gain 1

  void validate() const;  // throws ConfigError
};

// One transmission attempt, as reported to an optional trace sink.
struct TraceEvent {
  int64_t slot = 0;
  int node = 0;
  int channel = 0;
  double power_mw = 0.0;
  double sinr = 0.0;
  bool success = false;
};
using TraceSink = std::function<void(const TraceEvent&)>;

// Outcome of simulating one slotframe.
struct SlotframeReport {
  LinkStats stats;
  int64_t generated = 0;
  int64_t delivered = 0;
  int64_t dropped_deadline = 0;
  int64_t dropped_overflow = 0;
  double energy_spent = 0.0;   // mW-slots charged for scheduled cells
};

// Mutable network state: per-node FIFO queues, the slot clock and cumulative
// accounting.  All randomness (arrivals, fading, drop attribution) is drawn
// from counter-based streams keyed by (seed, frame, slot, node), so paired
// runs that share a seed consume identical draws regardless of control flow.
class SimState {
 public:
  SimState(NetworkConfig net, SimConfig sim, QosSpec qos, Topology topology,
           uint64_t seed);

  const NetworkConfig& net() const { return net_; }
  const SimConfig& sim() const { return sim_; }
  const QosSpec& qos() const { return qos_; }
  const Topology& topology() const { return topology_; }
  uint64_t seed() const { return seed_; }

  int64_t clock() const { return clock_; }
  int64_t frame_index() const { return frame_index_; }
  const std::deque<Packet>& queue(int node) const { return queues_[node]; }
  int64_t queued_packets() const;

  int64_t total_generated() const { return total_generated_; }
  int64_t total_delivered() const { return total_delivered_; }
  int64_t total_dropped_deadline() const { return total_dropped_deadline_; }
  int64_t total_dropped_overflow() const { return total_dropped_overflow_; }

  void set_trace_sink(TraceSink sink) { trace_ = std::move(sink); }

  friend int inject_traffic(SimState& state);
  friend SlotframeReport run_slotframe(SimState& state,
                                       const ScheduleMatrix& schedule,
                                       const PowerAllocation& powers,
                                       const QosSpec& qos);

 private:
  NetworkConfig net_;
  SimConfig sim_;
  QosSpec qos_;
  Topology topology_;
  uint64_t seed_;
  uint64_t traffic_key_;
  uint64_t fading_key_;
  uint64_t drop_key_;

  int64_t clock_ = 0;
  int64_t frame_index_ = 0;
  std::vector<std::deque<Packet>> queues_;
  int64_t total_generated_ = 0;
  int64_t total_delivered_ = 0;
  int64_t total_dropped_deadline_ = 0;
  int64_t total_dropped_overflow_ = 0;
  // Arrivals since the last simulated slotframe, folded into its report.
  int64_t pending_generated_ = 0;
  int64_t pending_overflow_ = 0;
  TraceSink trace_;
};

// Random reporting tree: node positions are uniform in the square, and each
// node attaches to the nearest already-attached node (or the router at the
// center) whose hop count still admits one more hop.  Deterministic in seed.
Topology generate_topology(int n_nodes, int max_hops, double area_side_m,
                           uint64_t seed);

// Bernoulli per-node arrivals for the upcoming slotframe; returns the number
// of packets generated.  Arrivals beyond queue capacity count as overflow.
int inject_traffic(SimState& state);

// Simulates one slotframe under the given cell/power assignment: deadline
// purging before each transmission attempt, SINR-determined outcomes with
// co-channel interference, hop-by-hop forwarding, and energy charged for
// every scheduled cell.  Throws ConstraintError if a node holds two cells in
// one timeslot.
SlotframeReport run_slotframe(SimState& state, const ScheduleMatrix& schedule,
                              const PowerAllocation& powers, const QosSpec& qos);

// Convenience: inject + run for each assignment in sequence.
std::vector<SlotframeReport> run_episode(
    SimState& state,
    std::span<const std::pair<ScheduleMatrix, PowerAllocation>> assignments,
    const QosSpec& qos);

}  // namespace tschpg

#endif  // TSCHPG_SIM_HPP
