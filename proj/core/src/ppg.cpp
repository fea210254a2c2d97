#include "tschpg/ppg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>

#include "tschpg/errors.hpp"

namespace tschpg {

HeadLayout HeadLayout::from_sizes(const std::vector<int>& head_sizes) {
  if (head_sizes.empty()) throw ConfigError("at least one action head required");
  HeadLayout layout;
  layout.sizes = head_sizes;
  for (int s : head_sizes) {
    if (s < 1) throw ConfigError("head sizes must be positive");
    layout.offsets.push_back(layout.logits_total);
    layout.logits_total += s;
  }
  return layout;
}

void PpgConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("clip must lie in (0,1)");
  if (!(kl_coeff >= 0.0)) throw ConfigError("kl_coeff must be nonnegative");
  if (!(clone_coeff >= 0.0)) throw ConfigError("clone_coeff must be nonnegative");
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in (0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw ConfigError("gae_lambda must lie in [0,1]");
  }
  if (n_policy_iters < 1 || policy_epochs < 1 || value_epochs < 1 ||
      aux_epochs < 1 || rollout_len < 1 || minibatch_size < 1) {
    throw ConfigError("all trainer counts must be at least 1");
  }
  if (total_steps < 0) throw ConfigError("total_steps must be nonnegative");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (hidden_sizes.empty()) throw ConfigError("at least one hidden layer required");
  for (int h : hidden_sizes) {
    if (h < 1) throw ConfigError("hidden sizes must be positive");
  }
}

void compute_gae(std::span<const double> rewards, std::span<const double> values,
                 std::span<const uint8_t> dones, double discount, double lambda,
                 std::span<double> advantages, std::span<double> targets) {
  const int64_t n = static_cast<int64_t>(rewards.size());
  if (static_cast<int64_t>(values.size()) != n + 1) {
    throw InputError("values must carry one bootstrap entry beyond rewards");
  }
  if (static_cast<int64_t>(dones.size()) != n ||
      static_cast<int64_t>(advantages.size()) != n ||
      static_cast<int64_t>(targets.size()) != n) {
    throw InputError("gae array length mismatch");
  }
  double carry = 0.0;
  for (int64_t t = n - 1; t >= 0; --t) {
    const double next_nonterminal = dones[t] ? 0.0 : 1.0;
    const double delta =
        rewards[t] + discount * values[t + 1] * next_nonterminal - values[t];
    carry = delta + discount * lambda * next_nonterminal * carry;
    advantages[t] = carry;
    targets[t] = carry + values[t];
  }
}

namespace {

// Per-head log-probabilities of the policy at one observation, concatenated
// in head-layout order.  Returns the raw network output as well when the
// caller needs the auxiliary slot.
void head_log_probs(const Mlp& policy, const HeadLayout& heads,
                    std::span<const double> obs, std::vector<double>& out_logp,
                    std::vector<double>* raw_out = nullptr,
                    MlpCache* cache = nullptr) {
  std::vector<double> out = policy.forward(obs, cache);
  out_logp.resize(heads.logits_total);
  for (int h = 0; h < heads.n_heads(); ++h) {
    const int off = heads.offsets[h];
    const int size = heads.sizes[h];
    log_softmax({out.data() + off, static_cast<size_t>(size)},
                {out_logp.data() + off, static_cast<size_t>(size)});
  }
  if (raw_out) *raw_out = std::move(out);
}

double mean_of(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

}  // namespace

PolicyLossResult policy_loss(const Mlp& policy, const HeadLayout& heads,
                             const RolloutBuffer& buffer,
                             std::span<const int64_t> indices,
                             std::span<const double> advantages, double clip,
                             double kl_coeff, std::span<double> grad) {
  if (indices.empty()) throw InputError("empty minibatch");
  if (advantages.size() != indices.size()) {
    throw InputError("advantages must align with the minibatch");
  }
  const bool want_grad = !grad.empty();
  if (want_grad && static_cast<int>(grad.size()) != policy.param_count()) {
    throw InputError("gradient buffer shape mismatch");
  }
  const double batch = static_cast<double>(indices.size());

  PolicyLossResult result;
  double surrogate_sum = 0.0;
  double kl_sum = 0.0;
  double ratio_sum = 0.0;
  int64_t clipped = 0;

  std::vector<double> logp;
  std::vector<double> out_grad;
  MlpCache cache;
  for (size_t m = 0; m < indices.size(); ++m) {
    const int64_t j = indices[m];
    const double adv = advantages[m];
    head_log_probs(policy, heads, buffer.obs(j), logp, nullptr,
                   want_grad ? &cache : nullptr);
    const std::span<const double> old_logp = buffer.old_head_logp(j);
    const std::span<const int> action = buffer.action(j);

    double lp_new = 0.0;
    double lp_old = 0.0;
    for (int h = 0; h < heads.n_heads(); ++h) {
      const int a = action[h];
      if (a < 0 || a >= heads.sizes[h]) throw InputError("action index out of range");
      const double old_a = old_logp[heads.offsets[h] + a];
      if (!std::isfinite(old_a)) {
        throw NumericError("behavior policy assigned zero probability to a taken action");
      }
      lp_new += logp[heads.offsets[h] + a];
      lp_old += old_a;
    }
    const double ratio = std::exp(lp_new - lp_old);
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped_ratio * adv;
    surrogate_sum += std::min(unclipped_term, clipped_term);
    ratio_sum += ratio;
    if (ratio < 1.0 - clip || ratio > 1.0 + clip) clipped += 1;

    double kl = 0.0;
    for (int i = 0; i < heads.logits_total; ++i) {
      const double p_old = std::exp(old_logp[i]);
      if (p_old > 0.0) kl += p_old * (old_logp[i] - logp[i]);
    }
    kl_sum += kl;

    if (want_grad) {
      out_grad.assign(heads.logits_total + 1, 0.0);
      const bool unclipped_active = unclipped_term <= clipped_term;
      for (int h = 0; h < heads.n_heads(); ++h) {
        const int off = heads.offsets[h];
        for (int i = 0; i < heads.sizes[h]; ++i) {
          const double p_new = std::exp(logp[off + i]);
          double g = -kl_coeff * (p_new - std::exp(old_logp[off + i]));
          if (unclipped_active) {
            const double indicator = i == action[h] ? 1.0 : 0.0;
            g += ratio * adv * (indicator - p_new);
          }
          out_grad[off + i] = g / batch;
        }
      }
      policy.backward(cache, out_grad, grad);
    }
  }

  result.kl = kl_sum / batch;
  result.mean_ratio = ratio_sum / batch;
  result.clip_fraction = static_cast<double>(clipped) / batch;
  result.objective = surrogate_sum / batch - kl_coeff * result.kl;
  return result;
}

double value_loss(const Mlp& value_net, const SampleView& data,
                  std::span<const int64_t> indices, std::span<double> grad) {
  if (indices.empty()) throw InputError("empty minibatch");
  const bool want_grad = !grad.empty();
  if (want_grad && static_cast<int>(grad.size()) != value_net.param_count()) {
    throw InputError("gradient buffer shape mismatch");
  }
  const double batch = static_cast<double>(indices.size());
  double loss = 0.0;
  MlpCache cache;
  double out_grad[1];
  for (const int64_t j : indices) {
    const std::vector<double> out =
        value_net.forward(data.obs(j), want_grad ? &cache : nullptr);
    const double err = out[0] - data.value_targets[j];
    loss += 0.5 * err * err / batch;
    if (want_grad) {
      out_grad[0] = err / batch;
      value_net.backward(cache, {out_grad, 1}, grad);
    }
  }
  return loss;
}

AuxLossResult aux_joint_loss(const Mlp& policy, const HeadLayout& heads,
                             const AuxDataset& data,
                             std::span<const int64_t> indices,
                             double clone_coeff, std::span<double> grad) {
  if (indices.empty()) throw InputError("empty minibatch");
  const bool want_grad = !grad.empty();
  if (want_grad && static_cast<int>(grad.size()) != policy.param_count()) {
    throw InputError("gradient buffer shape mismatch");
  }
  const double batch = static_cast<double>(indices.size());
  const SampleView view = data.view();

  AuxLossResult result;
  std::vector<double> logp;
  std::vector<double> raw;
  std::vector<double> out_grad;
  MlpCache cache;
  for (const int64_t j : indices) {
    head_log_probs(policy, heads, view.obs(j), logp, &raw,
                   want_grad ? &cache : nullptr);
    const double err = raw[heads.aux_index()] - data.value_targets[j];
    result.aux += 0.5 * err * err / batch;

    const std::span<const double> old_logp = data.old_head_logp(j);
    double kl = 0.0;
    for (int i = 0; i < heads.logits_total; ++i) {
      const double p_old = std::exp(old_logp[i]);
      if (p_old > 0.0) kl += p_old * (old_logp[i] - logp[i]);
    }
    result.kl += kl / batch;

    if (want_grad) {
      out_grad.assign(heads.logits_total + 1, 0.0);
      for (int i = 0; i < heads.logits_total; ++i) {
        const double p_new = std::exp(logp[i]);
        out_grad[i] = clone_coeff * (p_new - std::exp(old_logp[i])) / batch;
      }
      out_grad[heads.aux_index()] = err / batch;
      policy.backward(cache, out_grad, grad);
    }
  }
  result.joint = result.aux + clone_coeff * result.kl;
  return result;
}

namespace {

std::vector<int64_t> shuffled_indices(int64_t n, Rng& rng) {
  std::vector<int64_t> idx(n);
  for (int64_t i = 0; i < n; ++i) idx[i] = i;
  for (int64_t i = n - 1; i > 0; --i) {
    const int64_t j = rng.uniform_int(static_cast<int>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

// Zero-mean unit-variance rescale of one minibatch's advantages.
std::vector<double> normalized_advantages(const RolloutBuffer& buffer,
                                          std::span<const int64_t> indices) {
  std::vector<double> adv(indices.size());
  for (size_t m = 0; m < indices.size(); ++m) adv[m] = buffer.advantages[indices[m]];
  const double mean = mean_of(adv);
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  const double std = std::sqrt(var);
  for (double& a : adv) a = (a - mean) / (std + 1e-8);
  return adv;
}

std::vector<int> policy_layer_sizes(int obs_dim, const std::vector<int>& hidden,
                                    const HeadLayout& heads) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(heads.output_dim());
  return sizes;
}

std::vector<int> value_layer_sizes(int obs_dim, const std::vector<int>& hidden) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

void ensure_finite(double loss, const char* which, int64_t iteration,
                   std::span<const int64_t> minibatch) {
  if (std::isfinite(loss)) return;
  std::ostringstream msg;
  msg << "non-finite " << which << " loss (" << loss << ") at iteration "
      << iteration << "; minibatch rows";
  for (size_t i = 0; i < minibatch.size() && i < 8; ++i) msg << ' ' << minibatch[i];
  if (minibatch.size() > 8) msg << " ...";
  throw NumericError(msg.str());
}

}  // namespace

TrainReport train(const EnvFactory& factory, const PpgConfig& config,
                  uint64_t seed) {
  config.validate();
  std::unique_ptr<Env> env = factory(seed);
  const int obs_dim = env->observation_dim();
  const HeadLayout heads = HeadLayout::from_sizes(env->action_head_sizes());

  Rng root(seed);
  Rng init_policy_rng = root.stream("init-policy");
  Rng init_value_rng = root.stream("init-value");
  Rng action_rng = root.stream("actions");
  Rng shuffle_rng = root.stream("shuffle");

  Mlp policy(policy_layer_sizes(obs_dim, config.hidden_sizes, heads));
  Mlp value_net(value_layer_sizes(obs_dim, config.hidden_sizes));
  policy.init_random(init_policy_rng, 0.01);
  value_net.init_random(init_value_rng, 0.01);

  AdamParams adam_params;
  adam_params.learning_rate = config.learning_rate;
  Adam policy_adam(policy.param_count(), adam_params);
  Adam value_adam(value_net.param_count(), adam_params);

  TrainReport report;
  report.obs_dim = obs_dim;
  report.head_sizes = env->action_head_sizes();

  std::vector<double> obs = env->reset();
  std::vector<double> grad(policy.param_count());
  std::vector<double> value_grad(value_net.param_count());
  std::vector<double> logp;

  // Slim per-iteration copies kept for the auxiliary phase.
  struct PhaseSlice {
    std::vector<double> observations;
    std::vector<double> value_targets;
  };
  std::vector<PhaseSlice> phase;

  int64_t env_steps = 0;
  int64_t iteration = 0;
  while (env_steps < config.total_steps) {
    iteration += 1;

    // ---- rollout collection under the frozen behavior policy ---- //
    RolloutBuffer buffer;
    buffer.obs_dim = obs_dim;
    buffer.n_heads = heads.n_heads();
    buffer.logits_total = heads.logits_total;
    buffer.n_steps = config.rollout_len;
    buffer.observations.reserve(config.rollout_len * obs_dim);
    buffer.old_logp.reserve(config.rollout_len * heads.logits_total);
    std::vector<int> action(heads.n_heads());
    for (int t = 0; t < config.rollout_len; ++t) {
      head_log_probs(policy, heads, obs, logp);
      double joint_logp = 0.0;
      for (int h = 0; h < heads.n_heads(); ++h) {
        const int off = heads.offsets[h];
        const int size = heads.sizes[h];
        // Inverse-CDF draw directly from the cached head distribution.
        const double u = action_rng.uniform();
        double cum = 0.0;
        int sample = size - 1;
        for (int i = 0; i < size; ++i) {
          cum += std::exp(logp[off + i]);
          if (u < cum) {
            sample = i;
            break;
          }
        }
        action[h] = sample;
        joint_logp += logp[off + sample];
      }
      const std::vector<double> v = value_net.forward(obs);

      buffer.observations.insert(buffer.observations.end(), obs.begin(), obs.end());
      buffer.old_logp.insert(buffer.old_logp.end(), logp.begin(), logp.end());
      buffer.actions.insert(buffer.actions.end(), action.begin(), action.end());
      buffer.log_probs.push_back(joint_logp);
      buffer.values.push_back(v[0]);

      EnvStep step = env->step(action);
      buffer.rewards.push_back(step.reward);
      buffer.dones.push_back(step.done ? 1 : 0);
      obs = step.done ? env->reset() : std::move(step.observation);
    }
    const std::vector<double> v_last = value_net.forward(obs);
    buffer.values.push_back(v_last[0]);
    env_steps += config.rollout_len;

    buffer.advantages.resize(config.rollout_len);
    buffer.value_targets.resize(config.rollout_len);
    compute_gae(buffer.rewards, buffer.values, buffer.dones, config.discount,
                config.gae_lambda, buffer.advantages, buffer.value_targets);

    IterationRow row;
    row.iteration = iteration;
    row.env_steps = env_steps;
    row.mean_reward = mean_of(buffer.rewards);

    // ---- policy phase ---- //
    int64_t n_policy_minibatches = 0;
    for (int epoch = 0; epoch < config.policy_epochs; ++epoch) {
      const std::vector<int64_t> order = shuffled_indices(buffer.n_steps, shuffle_rng);
      for (int64_t start = 0; start < buffer.n_steps; start += config.minibatch_size) {
        const int64_t len = std::min<int64_t>(config.minibatch_size,
                                              buffer.n_steps - start);
        const std::span<const int64_t> mb(order.data() + start,
                                          static_cast<size_t>(len));
        const std::vector<double> adv = normalized_advantages(buffer, mb);
        std::fill(grad.begin(), grad.end(), 0.0);
        const PolicyLossResult res = policy_loss(policy, heads, buffer, mb, adv,
                                                 config.clip, config.kl_coeff, grad);
        ensure_finite(res.objective, "policy", iteration, mb);
        // Ascend the objective: descend its negation.
        for (double& g : grad) g = -g;
        policy_adam.step(policy.params(), grad);
        row.losses.policy_loss += res.objective;
        row.losses.kl += res.kl;
        row.losses.mean_ratio += res.mean_ratio;
        row.losses.clip_fraction += res.clip_fraction;
        n_policy_minibatches += 1;
      }
    }
    row.losses.policy_loss /= static_cast<double>(n_policy_minibatches);
    row.losses.kl /= static_cast<double>(n_policy_minibatches);
    row.losses.mean_ratio /= static_cast<double>(n_policy_minibatches);
    row.losses.clip_fraction /= static_cast<double>(n_policy_minibatches);

    // ---- value phase ---- //
    const SampleView buffer_view{obs_dim, buffer.observations, buffer.value_targets};
    int64_t n_value_minibatches = 0;
    for (int epoch = 0; epoch < config.value_epochs; ++epoch) {
      const std::vector<int64_t> order = shuffled_indices(buffer.n_steps, shuffle_rng);
      for (int64_t start = 0; start < buffer.n_steps; start += config.minibatch_size) {
        const int64_t len = std::min<int64_t>(config.minibatch_size,
                                              buffer.n_steps - start);
        const std::span<const int64_t> mb(order.data() + start,
                                          static_cast<size_t>(len));
        std::fill(value_grad.begin(), value_grad.end(), 0.0);
        const double loss = value_loss(value_net, buffer_view, mb, value_grad);
        ensure_finite(loss, "value", iteration, mb);
        value_adam.step(value_net.params(), value_grad);
        row.losses.value_loss += loss;
        n_value_minibatches += 1;
      }
    }
    row.losses.value_loss /= static_cast<double>(n_value_minibatches);

    // ---- auxiliary phase (ppg mode only) ---- //
    if (config.mode == PpgConfig::Mode::kPpg) {
      phase.push_back(
          {std::move(buffer.observations), std::move(buffer.value_targets)});
      const bool phase_full = iteration % config.n_policy_iters == 0;
      const bool training_over = env_steps >= config.total_steps;
      if (phase_full || training_over) {
        AuxDataset data;
        data.obs_dim = obs_dim;
        data.logits_total = heads.logits_total;
        for (PhaseSlice& slice : phase) {
          data.observations.insert(data.observations.end(),
                                   slice.observations.begin(),
                                   slice.observations.end());
          data.value_targets.insert(data.value_targets.end(),
                                    slice.value_targets.begin(),
                                    slice.value_targets.end());
        }
        phase.clear();
        // The clone target is the policy as it stands right now, after the
        // policy phase and before any auxiliary update.
        const int64_t n = data.size();
        data.old_logp.resize(n * heads.logits_total);
        const SampleView data_view = data.view();
        for (int64_t j = 0; j < n; ++j) {
          head_log_probs(policy, heads, data_view.obs(j), logp);
          std::copy(logp.begin(), logp.end(),
                    data.old_logp.begin() + j * heads.logits_total);
        }

        int64_t n_aux_minibatches = 0;
        for (int epoch = 0; epoch < config.aux_epochs; ++epoch) {
          const std::vector<int64_t> order = shuffled_indices(n, shuffle_rng);
          for (int64_t start = 0; start < n; start += config.minibatch_size) {
            const int64_t len = std::min<int64_t>(config.minibatch_size, n - start);
            const std::span<const int64_t> mb(order.data() + start,
                                              static_cast<size_t>(len));
            std::fill(grad.begin(), grad.end(), 0.0);
            const AuxLossResult res = aux_joint_loss(policy, heads, data, mb,
                                                     config.clone_coeff, grad);
            ensure_finite(res.joint, "auxiliary", iteration, mb);
            policy_adam.step(policy.params(), grad);
            std::fill(value_grad.begin(), value_grad.end(), 0.0);
            const double vloss = value_loss(value_net, data_view, mb, value_grad);
            ensure_finite(vloss, "auxiliary value", iteration, mb);
            value_adam.step(value_net.params(), value_grad);
            row.losses.aux_loss += res.aux;
            row.losses.joint_loss += res.joint;
            n_aux_minibatches += 1;
          }
        }
        row.losses.aux_loss /= static_cast<double>(n_aux_minibatches);
        row.losses.joint_loss /= static_cast<double>(n_aux_minibatches);
      }
    }

    report.rows.push_back(row);
  }

  report.checkpoint.nets.emplace_back("policy", std::move(policy));
  report.checkpoint.nets.emplace_back("value", std::move(value_net));
  return report;
}

std::string train_report_csv(const TrainReport& report) {
  std::ostringstream out;
  out << "iteration,env_steps,mean_reward,policy_loss,value_loss,aux_loss,kl,"
         "clip_fraction\n";
  char buf[512];
  for (const IterationRow& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%lld,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(row.iteration),
                  static_cast<long long>(row.env_steps), row.mean_reward,
                  row.losses.policy_loss, row.losses.value_loss,
                  row.losses.aux_loss, row.losses.kl, row.losses.clip_fraction);
    out << buf;
  }
  return out.str();
}

EvalSummary evaluate(const Checkpoint& checkpoint, const EnvFactory& factory,
                     int n_episodes, uint64_t seed) {
  if (n_episodes < 1) throw ConfigError("n_episodes must be at least 1");
  std::unique_ptr<Env> env = factory(seed);
  const Mlp& policy = checkpoint.net("policy");
  const HeadLayout heads = HeadLayout::from_sizes(env->action_head_sizes());
  if (policy.input_dim() != env->observation_dim() ||
      policy.output_dim() != heads.output_dim()) {
    throw ConfigError("checkpoint dimensions do not match the scenario");
  }

  std::vector<double> utility, th, eff, violations, rewards;
  std::vector<int> action(heads.n_heads());
  for (int ep = 0; ep < n_episodes; ++ep) {
    std::vector<double> obs = env->reset();
    double ep_utility = 0.0, ep_th = 0.0, ep_eta = 0.0, ep_violations = 0.0,
           ep_reward = 0.0;
    int steps = 0;
    bool done = false;
    while (!done) {
      const std::vector<double> out = policy.forward(obs);
      for (int h = 0; h < heads.n_heads(); ++h) {
        const int off = heads.offsets[h];
        int best = 0;
        for (int i = 1; i < heads.sizes[h]; ++i) {
          if (out[off + i] > out[off + best]) best = i;
        }
        action[h] = best;
      }
      EnvStep step = env->step(action);
      ep_utility += step.utility_value;
      ep_th += step.th;
      ep_eta += step.eta;
      ep_violations += step.violation_count;
      ep_reward += step.reward;
      steps += 1;
      done = step.done;
      obs = std::move(step.observation);
    }
    const double denom = static_cast<double>(steps);
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
