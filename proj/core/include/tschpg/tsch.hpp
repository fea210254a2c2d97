#ifndef TSCHPG_TSCH_HPP
#define TSCHPG_TSCH_HPP

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace tschpg {

// Static description of a slotframe-scheduled multichannel network:
// N nodes reporting towards one border router over a slotframe of
// `slotframe_len` timeslots and `n_channels` channel offsets, with a
// distance-law radio model and a discrete transmit power menu.
struct NetworkConfig {
  int n_nodes = 10;
  int n_channels = 4;
  int slotframe_len = 16;
  double noise_floor_mw = 1e-9;
  double pathloss_exponent = 3.0;
  double reference_gain = 1e-3;   // path gain at unit distance
  double sinr_threshold = 10.0;   // minimum SINR for a successful reception
  std::vector<double> power_levels_mw = {1.0, 2.5, 5.0, 10.0};

  int n_cells() const { return slotframe_len * n_channels; }
  void validate() const;  // throws ConfigError
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double squared_distance(Vec2 a, Vec2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Parent index of nodes that report directly to the border router.
inline constexpr int kRouter = -1;

// Reporting tree rooted at the border router.  parent[i] is the next hop of
// node i (kRouter for direct children); hop_count[i] counts hops to the
// router (1 for direct children).
struct Topology {
  std::vector<int> parent;
  std::vector<int> hop_count;
  std::vector<Vec2> position;
  Vec2 router_position;

  int n_nodes() const { return static_cast<int>(parent.size()); }
  Vec2 receiver_position(int node) const;
  void validate(int max_hops) const;  // throws ConfigError
};

// Binary cell assignment X[i][(t,k)]: node i transmits in timeslot t on
// channel offset k.  Stored dense; desk-scale dimensions keep this small.
class ScheduleMatrix {
 public:
  ScheduleMatrix() = default;
  ScheduleMatrix(int n_nodes, int n_slots, int n_channels);

  bool at(int node, int slot, int channel) const {
    return cells_[index(node, slot, channel)] != 0;
  }
  void set(int node, int slot, int channel, bool on) {
    cells_[index(node, slot, channel)] = on ? 1 : 0;
  }

  int n_nodes() const { return n_nodes_; }
  int n_slots() const { return n_slots_; }
  int n_channels() const { return n_channels_; }

  // True when the node holds at least one cell on the given channel.
  bool node_uses_channel(int node, int channel) const;
  // Number of cells held by a node across the whole slotframe.
  int cell_count(int node) const;
  // Total number of scheduled cells.
  int total_cells() const;

  bool operator==(const ScheduleMatrix&) const = default;

 private:
  size_t index(int node, int slot, int channel) const;

  int n_nodes_ = 0;
  int n_slots_ = 0;
  int n_channels_ = 0;
  std::vector<uint8_t> cells_;
};

// Per-node transmit power drawn from NetworkConfig::power_levels_mw.
struct PowerAllocation {
  std::vector<double> power_mw;
};

// Per-node QoS contract: packets older than deadline_slots are abandoned;
// the empirical drop and error probabilities on every used (node, channel)
// pair must stay below max_drop / max_err.
struct QosSpec {
  std::vector<int> deadline_slots;
  std::vector<double> max_drop;
  std::vector<double> max_err;

  static QosSpec uniform(int n_nodes, int deadline, double drop_bound,
                         double err_bound);
  void validate(int n_nodes) const;  // throws ConfigError
};

// Nonnegative mixing weights of the two utility terms; at least one positive.
struct UtilityWeights {
  double w_throughput = 1.0;
  double w_efficiency = 10.0;

  void validate() const;  // throws ConfigError
};

// Empirical per-(node, channel) transmission bookkeeping.  An "offered"
// packet event is either a transmission attempt or a deadline drop, so
// success/offered == (1 - drop_prob) * (1 - err_prob) holds exactly.
class LinkStats {
 public:
  LinkStats() = default;
  LinkStats(int n_nodes, int n_channels);

  void record_attempt(int node, int channel, double sinr, bool success);
  void record_drop(int node, int channel);
  void merge(const LinkStats& other);

  int n_nodes() const { return n_nodes_; }
  int n_channels() const { return n_channels_; }

  int64_t attempts(int node, int channel) const { return attempts_[index(node, channel)]; }
  int64_t errors(int node, int channel) const { return errors_[index(node, channel)]; }
  int64_t drops(int node, int channel) const { return drops_[index(node, channel)]; }
  int64_t offered(int node, int channel) const {
    return attempts(node, channel) + drops(node, channel);
  }
  int64_t successes(int node, int channel) const {
    return attempts(node, channel) - errors(node, channel);
  }

  // drops / offered; 0 when nothing was offered.
  double drop_prob(int node, int channel) const;
  // errors / attempts; 0 when nothing was attempted.
  double err_prob(int node, int channel) const;
  // (1 - drop_prob) * (1 - err_prob); 0 when nothing was offered.
  double suc_prob(int node, int channel) const;

  std::span<const double> sinr_samples(int node, int channel) const;

 private:
  size_t index(int node, int channel) const;

  int n_nodes_ = 0;
  int n_channels_ = 0;
  std::vector<int64_t> attempts_;
  std::vector<int64_t> errors_;
  std::vector<int64_t> drops_;
  std::vector<std::vector<double>> sinr_;
};

// ---- pure operations ---- //

// Path gain between two positions: reference_gain * distance^-alpha, with the
// distance floored at 1 m (the far-field reference distance).  The floor keeps
// the gain finite when a transmitter is co-located with a receiver -- e.g. a
// parent transmitting in the same slot and channel as its child -- where the
// bare power law would diverge.
double path_gain(const NetworkConfig& config, Vec2 from, Vec2 to);

// One concurrent transmission: node `node` sends with `power_mw` and a
// multiplicative channel fading `fading` applied to its path gain.
struct ActiveTransmission {
  int node = 0;
  double power_mw = 0.0;
  double fading = 1.0;
};

// SINR of each transmission in `transmissions` at its own receiver
// (the transmitter's parent), with every other entry acting as a
// co-channel interferer.  Pure; output is aligned with the input span.
std::vector<double> sinr_of_transmissions(
    const NetworkConfig& config, const Topology& topology,
    std::span<const ActiveTransmission> transmissions);

// Per-active-transmitter SINR in cell (slot, channel) of `schedule`.
// `fading` holds one multiplier per node (entries of inactive nodes are
// ignored); negative fading is an input error.
struct SinrEntry {
  int node = 0;
  double sinr = 0.0;
};
std::vector<SinrEntry> compute_sinr(const NetworkConfig& config,
                                    const Topology& topology,
                                    const ScheduleMatrix& schedule,
                                    const PowerAllocation& powers,
                                    std::span<const double> fading, int slot,
                                    int channel);

// Offending (node, slot) pairs where a node holds more than one cell in the
// same timeslot; empty result means the schedule is feasible.
struct ScheduleViolation {
  int node = 0;
  int slot = 0;
  auto operator<=>(const ScheduleViolation&) const = default;
};
std::vector<ScheduleViolation> validate_schedule(const NetworkConfig& config,
                                                 const ScheduleMatrix& schedule);

// 1 - drop - err + drop*err, clamped into [0,1].  Inputs outside [0,1]
// are an input error.
double success_probability(double drop_prob, double err_prob);

// Network throughput: sum of empirical success probabilities over every
// (node, channel) pair the schedule actually uses.
double throughput(const LinkStats& stats, const ScheduleMatrix& schedule);

// Throughput per unit of scheduled transmit power.  The denominator charges
// power_mw[i] for every cell node i holds, whether or not it transmitted.
// Throws UndefinedEfficiencyError when the schedule spends no energy.
double energy_efficiency(double throughput_value, const ScheduleMatrix& schedule,
                         const PowerAllocation& powers);

// Scalarized objective: w_throughput * th + w_efficiency * eta.
double utility(double throughput_value, double efficiency_value,
               const UtilityWeights& weights);

// QoS violations on links with recorded activity: a drop violation where
// drop_prob >= max_drop[node], an error violation where
// err_prob >= max_err[node].
struct QosViolation {
  enum class Kind { kDrop, kErr };
  int node = 0;
  int channel = 0;
  Kind kind = Kind::kDrop;
  auto operator<=>(const QosViolation&) const = default;
};
std::vector<QosViolation> qos_violations(const LinkStats& stats,
                                         const QosSpec& qos);

}  // namespace tschpg

#endif  // TSCHPG_TSCH_HPP
