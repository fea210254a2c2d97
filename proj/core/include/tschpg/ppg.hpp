#ifndef TSCHPG_PPG_HPP
#define TSCHPG_PPG_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tschpg/env.hpp"
#include "tschpg/nn.hpp"

namespace tschpg {

// Slices of the policy network output: one categorical logit block per
// action head, plus one trailing auxiliary value slot.
struct HeadLayout {
  std::vector<int> sizes;
  std::vector<int> offsets;
  int logits_total = 0;

  static HeadLayout from_sizes(const std::vector<int>& head_sizes);
  int n_heads() const { return static_cast<int>(sizes.size()); }
  int aux_index() const { return logits_total; }
  int output_dim() const { return logits_total + 1; }
};

struct PpgConfig {
  enum class Mode { kPpg, kPpo };

  double clip = 0.2;           // ratio clip neighborhood
  double kl_coeff = 0.01;      // weight of the policy-phase KL penalty
  double clone_coeff = 1.0;    // weight of the auxiliary-phase clone KL
  double discount = 0.99;
  double gae_lambda = 0.95;
  int n_policy_iters = 8;      // rollouts per phase
  int policy_epochs = 1;
  int value_epochs = 1;
  int aux_epochs = 6;
  int rollout_len = 256;
  int minibatch_size = 64;
  int64_t total_steps = 200000;
  Mode mode = Mode::kPpg;
  double learning_rate = 3e-4;
  std::vector<int> hidden_sizes = {64, 64};

  void validate() const;  // throws ConfigError
};

// One phase's collected experience.  Flat row-major arrays; `values` carries
// one bootstrap entry beyond the last step.  old_logp stores, per step, the
// full per-head log-probabilities of the behavior policy (the snapshot taken
// before any update of the phase).
struct RolloutBuffer {
  int obs_dim = 0;
  int n_heads = 0;
  int logits_total = 0;
  int64_t n_steps = 0;
  std::vector<double> observations;
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> value_targets;
  std::vector<double> old_logp;

  std::span<const double> obs(int64_t step) const {
    return {observations.data() + step * obs_dim, static_cast<size_t>(obs_dim)};
  }
  std::span<const int> action(int64_t step) const {
    return {actions.data() + step * n_heads, static_cast<size_t>(n_heads)};
  }
  std::span<const double> old_head_logp(int64_t step) const {
    return {old_logp.data() + step * logits_total,
            static_cast<size_t>(logits_total)};
  }
};

// delta_t = r_t + gamma*V(s_{t+1})*(1-done_t) - V(s_t);
// A_t = sum_l (gamma*lambda)^l delta_{t+l}, truncated at episode ends;
// targets = A + V.  `values` needs rewards.size()+1 entries.
void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const uint8_t> dones, double discount, double lambda,
                 std::span<double> advantages, std::span<double> targets);

// Diagnostics of one optimization pass.
struct LossBreakdown {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double aux_loss = 0.0;
  double joint_loss = 0.0;
  double mean_ratio = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
};

struct PolicyLossResult {
  double objective = 0.0;   // maximized; optimizer descends its negation
  double kl = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
};

// Clipped-ratio surrogate with a KL(old||new) penalty over one minibatch
// (`indices` into `buffer`, `advantages` aligned with `indices` and already
// normalized by the caller).  When `grad` is nonempty it receives the
// accumulated gradient of the objective w.r.t. the policy parameters.
PolicyLossResult policy_loss(const Mlp& policy, const HeadLayout& heads,
                             const RolloutBuffer& buffer,
                             std::span<const int64_t> indices,
                             std::span<const double> advantages, double clip,
                             double kl_coeff, std::span<double> grad);

// Mean ||V(s) - target||^2 / 2 over (observations, value_targets) rows.
struct SampleView {
  int obs_dim = 0;
  std::span<const double> observations;
  std::span<const double> value_targets;

  std::span<const double> obs(int64_t row) const {
    return {observations.data() + row * obs_dim, static_cast<size_t>(obs_dim)};
  }
};
double value_loss(const Mlp& value_net, const SampleView& data,
                  std::span<const int64_t> indices, std::span<double> grad);

// The full-phase dataset the auxiliary phase trains on: every observation
// and value target of the phase plus the post-policy-phase snapshot of the
// per-head log-probabilities.
struct AuxDataset {
  int obs_dim = 0;
  int logits_total = 0;
  std::vector<double> observations;
  std::vector<double> value_targets;
  std::vector<double> old_logp;

  int64_t size() const {
    return obs_dim == 0 ? 0 : static_cast<int64_t>(value_targets.size());
  }
  SampleView view() const { return {obs_dim, observations, value_targets}; }
  std::span<const double> old_head_logp(int64_t row) const {
    return {old_logp.data() + row * logits_total,
            static_cast<size_t>(logits_total)};
  }
};

struct AuxLossResult {
  double joint = 0.0;   // aux + clone_coeff * KL(old||new); minimized
  double aux = 0.0;     // auxiliary value head fit
  double kl = 0.0;
};
AuxLossResult aux_joint_loss(const Mlp& policy, const HeadLayout& heads,
                             const AuxDataset& data,
                             std::span<const int64_t> indices,
                             double clone_coeff, std::span<double> grad);

struct IterationRow {
  int64_t iteration = 0;
  int64_t env_steps = 0;
  double mean_reward = 0.0;
  LossBreakdown losses;
};

struct TrainReport {
  std::vector<IterationRow> rows;
  Checkpoint checkpoint;   // "policy" and "value" networks
  int obs_dim = 0;
  std::vector<int> head_sizes;
};

// Two-phase training: repeated blocks of n_policy_iters rollout/update
// iterations followed (in ppg mode) by an auxiliary phase that distills the
// value function into the policy network under a KL clone penalty.
TrainReport train(const EnvFactory& factory, const PpgConfig& config,
                  uint64_t seed);

// Serialize report rows: iteration, env_steps, mean_reward, policy_loss,
// value_loss, aux_loss, kl, clip_fraction.
std::string train_report_csv(const TrainReport& report);

// Greedy (argmax per head) evaluation of a trained policy checkpoint.
EvalSummary evaluate(const Checkpoint& checkpoint, const EnvFactory& factory,
                     int n_episodes, uint64_t seed);

}  // namespace tschpg

#endif  // TSCHPG_PPG_HPP
