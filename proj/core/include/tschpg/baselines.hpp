#ifndef TSCHPG_BASELINES_HPP
#define TSCHPG_BASELINES_HPP

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tschpg/env.hpp"
#include "tschpg/rng.hpp"
#include "tschpg/sim.hpp"
#include "tschpg/tsch.hpp"

namespace tschpg {

struct Cell {
  int slot = 0;
  int channel = 0;
  auto operator<=>(const Cell&) const = default;
};

using WarnSink = std::function<void(const std::string&)>;

// Adaptive cell allocation in the spirit of the default TSCH scheduling
// function: each node's cell-usage ratio over a sliding window of slotframes
// decides whether it acquires or releases cells.  Transmit power is pinned
// to the highest level.  Every emitted schedule keeps at most one cell per
// node per timeslot.
class MsfState {
 public:
  struct Params {
    double hi = 0.75;   // utilization above which a cell is added
    double lo = 0.25;   // utilization below which a cell is released
    int window = 5;     // slotframes of history entering the utilization

    void validate() const;  // throws ConfigError
  };

  // Starts from the round-robin assignment (one cell per node).
  MsfState(NetworkConfig net, Params params, uint64_t seed, WarnSink warn = {});

  const Params& params() const { return params_; }
  const std::vector<Cell>& cells(int node) const { return cells_[node]; }

  // used / allocated over the recorded window; 1.0 before any report.
  double utilization(int node) const;

  // The schedule and max-power allocation the current cell sets describe.
  std::pair<ScheduleMatrix, PowerAllocation> current() const;

  friend std::pair<ScheduleMatrix, PowerAllocation> msf_step(
      MsfState& state, const SlotframeReport& last_report);

 private:
  void add_random_cell(int node);
  void remove_random_cell(int node);

  NetworkConfig net_;
  Params params_;
  Rng rng_;
  WarnSink warn_;
  std::vector<std::vector<Cell>> cells_;
  // Per node, the (used, allocated) cell counts of the last `window` frames.
  std::vector<std::vector<std::pair<int, int>>> history_;
};

// Adapts the cell sets to the last slotframe's outcome and returns the
// resulting assignment: utilization above hi adds one uniformly random cell
// in a timeslot the node does not occupy yet (allocation unchanged, with a
// warning, when no such cell exists); utilization below lo releases one
// uniformly random held cell as long as more than one is held.
std::pair<ScheduleMatrix, PowerAllocation> msf_step(
    MsfState& state, const SlotframeReport& last_report);

// One uniformly random cell and uniformly random power level per node.
// Deterministic in seed.
std::pair<ScheduleMatrix, PowerAllocation> random_schedule(
    const Scenario& scenario, uint64_t seed);

// Node i transmits in cell ((i div M) mod T, i mod M) at maximum power,
// where T is the slotframe length and M the channel count: collision-free
// whenever N <= T*M.  With more nodes than cells the same modular assignment
// reuses cells; the warn sink is notified once.  The slotframe index is
// accepted for interface uniformity with adaptive schedulers; the assignment
// does not depend on it.
std::pair<ScheduleMatrix, PowerAllocation> round_robin_schedule(
    const Scenario& scenario, int64_t slotframe_index,
    const WarnSink& warn = {});

// A non-learning per-slotframe scheduling policy, evaluated on the same
// episode stream as a trained checkpoint (see episode_seed).
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  // Called once at each episode start.
  virtual void reset(const Scenario& scenario, uint64_t ep_seed) = 0;
  // Assignment for the upcoming slotframe; `last_report` is null on the
  // first frame of an episode.
  virtual std::pair<ScheduleMatrix, PowerAllocation> assign(
      int64_t frame_index, const SlotframeReport* last_report) = 0;
};

// Factory by algorithm name: "msf", "random" or "round_robin".  Throws
// ConfigError for unknown names.
std::unique_ptr<Scheduler> make_scheduler(const std::string& algorithm,
                                          const WarnSink& warn = {});

// Per-episode summary of a scheduler rollout, one entry per metric, averaged
// over the episode's slotframes exactly like the learner's evaluation.  An
// optional trace sink observes every transmission attempt.
EvalSummary evaluate_scheduler(Scheduler& scheduler, const Scenario& scenario,
                               int n_episodes, uint64_t seed,
                               const TraceSink& trace = {});

}  // namespace tschpg

#endif  // TSCHPG_BASELINES_HPP
