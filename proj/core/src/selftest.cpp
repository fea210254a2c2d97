#include "tschpg/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <utility>

#include "tschpg/baselines.hpp"
#include "tschpg/env.hpp"
#include "tschpg/errors.hpp"
#include "tschpg/ppg.hpp"
#include "tschpg/rng.hpp"
#include "tschpg/sim.hpp"
#include "tschpg/tsch.hpp"

namespace tschpg {

namespace {

std::string err_detail(double worst, double tolerance, const char* what) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "max %s %.3e (tolerance %.0e)", what, worst,
                tolerance);
  return buf;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

}  // namespace

CheckResult check_equation_identities() {
  CheckResult result{"equation-identities", false, ""};
  Rng rng(20240801);
  double worst = 0.0;

  for (int i = 0; i < 1000; ++i) {
    const double drop = rng.uniform();
    const double err = rng.uniform();
    const double direct = (1.0 - drop) * (1.0 - err);
    worst = std::max(worst, std::abs(success_probability(drop, err) - direct));
  }
  if (worst > 1e-12) {
    result.detail = err_detail(worst, 1e-12, "success-probability error");
    return result;
  }

  Scenario scenario = Scenario::reference();
  TschEnv env(scenario, 7);
  env.reset();
  const std::vector<int>& heads = env.action_head_sizes();
  std::vector<int> action(heads.size());
  int exact_failures = 0;
  double worst_linearity = 0.0;
  for (int step = 0; step < 1000; ++step) {
    for (size_t h = 0; h < heads.size(); ++h) action[h] = rng.uniform_int(heads[h]);
    const EnvStep out = env.step(action);
    // Reconstruction: the reward must be the utility minus the violation
    // penalty, bit for bit, from the step diagnostics alone.
    const double reconstructed =
        utility(out.th, out.eta, scenario.weights) -
        scenario.qos_penalty * out.violation_count;
    if (reconstructed != out.reward) exact_failures += 1;
    // Adding the penalty back must land on the utility up to one rounding.
    const double lhs = out.reward + scenario.qos_penalty * out.violation_count;
    const double rhs = utility(out.th, out.eta, scenario.weights);
    if (rel_err(lhs, rhs) > 1e-12) exact_failures += 1;
    const double weighted = scenario.weights.w_throughput * out.th +
                            scenario.weights.w_efficiency * out.eta;
    worst_linearity = std::max(
        worst_linearity, std::abs(utility(out.th, out.eta, scenario.weights) -
                                  weighted));
    if (out.done) env.reset();
  }
  if (exact_failures > 0) {
    result.detail = std::to_string(exact_failures) +
                    " steps failed exact reward reconstruction";
    return result;
  }
  if (worst_linearity > 1e-12) {
    result.detail = err_detail(worst_linearity, 1e-12, "utility linearity error");
    return result;
  }
  result.pass = true;
  result.detail = err_detail(worst, 1e-12, "identity error") +
                  ", 1000 steps reconstructed exactly";
  return result;
}

namespace {

// Central finite differences of a scalar function of the network parameters,
// compared against an analytic gradient, worst relative error over all
// parameters.
double fd_worst_rel_err(Mlp& net, const std::function<double()>& loss_fn,
                        std::span<const double> analytic, double h) {
  double worst = 0.0;
  const std::span<double> params = net.params();
  for (int p = 0; p < net.param_count(); ++p) {
    const double saved = params[p];
    params[p] = saved + h;
    const double up = loss_fn();
    params[p] = saved - h;
    const double down = loss_fn();
    params[p] = saved;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, rel_err(analytic[p], fd));
  }
  return worst;
}

struct GradientFixture {
  HeadLayout heads;
  Mlp policy;
  Mlp value_net;
  RolloutBuffer buffer;
  std::vector<int64_t> indices;
  std::vector<double> advantages;
  AuxDataset aux;
};

// A small random policy/value pair with a batch of observations, actions
// drawn from a perturbed behavior policy, and value targets.
GradientFixture make_gradient_fixture(uint64_t seed) {
  Rng rng(seed);
  GradientFixture fx;
  const int obs_dim = 3 + rng.uniform_int(3);
  const std::vector<int> head_sizes = {2 + rng.uniform_int(3),
                                       2 + rng.uniform_int(2)};
  fx.heads = HeadLayout::from_sizes(head_sizes);
  const int batch = 4 + rng.uniform_int(4);

  std::vector<int> layers{obs_dim, 6 + rng.uniform_int(3), fx.heads.output_dim()};
  fx.policy = Mlp(layers);
  Rng init = rng.stream("init");
  fx.policy.init_random(init, 1.0);
  fx.value_net = Mlp({obs_dim, 6, 1});
  Rng vinit = rng.stream("vinit");
  fx.value_net.init_random(vinit, 1.0);

  // The behavior policy differs from the current one by a parameter nudge,
  // so ratios spread around 1 without saturating the clip region.
  Mlp behavior = fx.policy;
  for (double& p : behavior.params()) p += 0.05 * rng.normal();

  fx.buffer.obs_dim = obs_dim;
  fx.buffer.n_heads = fx.heads.n_heads();
  fx.buffer.logits_total = fx.heads.logits_total;
  fx.buffer.n_steps = batch;
  for (int b = 0; b < batch; ++b) {
    for (int d = 0; d < obs_dim; ++d) {
      fx.buffer.observations.push_back(0.6 * rng.normal());
    }
    const std::vector<double> out = behavior.forward(fx.buffer.obs(b));
    for (int h = 0; h < fx.heads.n_heads(); ++h) {
      const int off = fx.heads.offsets[h];
      const int size = fx.heads.sizes[h];
      std::vector<double> logp(size);
      log_softmax({out.data() + off, static_cast<size_t>(size)}, logp);
      const Categorical draw =
          sample_categorical({out.data() + off, static_cast<size_t>(size)}, rng);
      fx.buffer.actions.push_back(draw.sample);
      for (double lp : logp) fx.buffer.old_logp.push_back(lp);
    }
    fx.buffer.value_targets.push_back(rng.normal());
    fx.indices.push_back(b);
    fx.advantages.push_back(rng.normal());
  }

  fx.aux.obs_dim = obs_dim;
  fx.aux.logits_total = fx.heads.logits_total;
  fx.aux.observations = fx.buffer.observations;
  fx.aux.value_targets = fx.buffer.value_targets;
  fx.aux.old_logp = fx.buffer.old_logp;
  return fx;
}

}  // namespace

CheckResult check_gradient_suite() {
  CheckResult result{"gradient-suite", false, ""};
  const double h = 1e-5;
  const double tolerance = 1e-4;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    GradientFixture fx = make_gradient_fixture(42000 + trial);

    std::vector<double> grad(fx.policy.param_count(), 0.0);
    policy_loss(fx.policy, fx.heads, fx.buffer, fx.indices, fx.advantages, 0.2,
                0.01, grad);
    const double policy_err = fd_worst_rel_err(
        fx.policy,
        [&] {
          return policy_loss(fx.policy, fx.heads, fx.buffer, fx.indices,
                             fx.advantages, 0.2, 0.01, {})
              .objective;
        },
        grad, h);

    const SampleView view{fx.buffer.obs_dim, fx.buffer.observations,
                          fx.buffer.value_targets};
    std::vector<double> vgrad(fx.value_net.param_count(), 0.0);
    value_loss(fx.value_net, view, fx.indices, vgrad);
    const double value_err = fd_worst_rel_err(
        fx.value_net,
        [&] { return value_loss(fx.value_net, view, fx.indices, {}); }, vgrad,
        h);

    std::vector<double> agrad(fx.policy.param_count(), 0.0);
    aux_joint_loss(fx.policy, fx.heads, fx.aux, fx.indices, 1.0, agrad);
    const double aux_err = fd_worst_rel_err(
        fx.policy,
        [&] {
          return aux_joint_loss(fx.policy, fx.heads, fx.aux, fx.indices, 1.0, {})
              .joint;
        },
        agrad, h);

    worst = std::max({worst, policy_err, value_err, aux_err});
  }
  result.pass = worst <= tolerance;
  result.detail = err_detail(worst, tolerance, "gradient relative error");
  return result;
}

CheckResult check_gae_oracle() {
  CheckResult result{"gae-oracle", false, ""};
  const double tolerance = 1e-10;
  Rng rng(31337);
  double worst = 0.0;
  const double discounts[] = {1.0, 0.99, 0.9};
  const double lambdas[] = {1.0, 0.95, 0.5};
  for (int episode = 0; episode < 100; ++episode) {
    const int n = 3 + rng.uniform_int(38);
    const double discount = discounts[episode % 3];
    const double lambda = lambdas[(episode / 3) % 3];
    std::vector<double> rewards(n), values(n + 1);
    std::vector<uint8_t> dones(n, 0);
    for (int t = 0; t < n; ++t) {
      rewards[t] = rng.normal();
      dones[t] = rng.uniform() < 0.15 ? 1 : 0;
    }
    if (episode % 4 == 0) dones[n / 2] = 1;  // guaranteed mid-sequence cut
    const bool zero_values = episode % 10 == 9;
    for (int t = 0; t <= n; ++t) values[t] = zero_values ? 0.0 : rng.normal();

    std::vector<double> advantages(n), targets(n);
    compute_gae(rewards, values, dones, discount, lambda, advantages, targets);

    // Direct O(T^2) definition: the (discount*lambda)-weighted sum of
    // one-step TD residuals, truncated at episode boundaries.
    for (int t = 0; t < n; ++t) {
      double sum = 0.0;
      double coeff = 1.0;
      for (int l = t; l < n; ++l) {
        const double mask = dones[l] ? 0.0 : 1.0;
        sum += coeff * (rewards[l] + discount * values[l + 1] * mask - values[l]);
        if (dones[l]) break;
        coeff *= discount * lambda;
      }
      worst = std::max(worst, std::abs(advantages[t] - sum));
      worst = std::max(worst, std::abs(targets[t] - (sum + values[t])));
      if (zero_values && discount == 1.0 && lambda == 1.0) {
        // With unit discounting and a zero critic the advantage must be the
        // raw reward-to-go.
        double to_go = 0.0;
        for (int l = t; l < n; ++l) {
          to_go += rewards[l];
          if (dones[l]) break;
        }
        worst = std::max(worst, std::abs(advantages[t] - to_go));
      }
    }
  }
  result.pass = worst <= tolerance;
  result.detail = err_detail(worst, tolerance, "advantage error");
  return result;
}

CheckResult check_constraint_safety() {
  CheckResult result{"constraint-safety", false, ""};
  Rng rng(777);

  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    Scenario s;
    s.net.n_nodes = 1 + rng.uniform_int(6);
    s.net.n_channels = 1 + rng.uniform_int(4);
    s.net.slotframe_len = 1 + rng.uniform_int(6);
    s.qos = QosSpec::uniform(s.net.n_nodes, 32, 0.25, 0.5);
    std::vector<int> raw;
    for (int node = 0; node < s.net.n_nodes; ++node) {
      raw.push_back(rng.uniform_int(s.net.n_cells()));
      raw.push_back(
          rng.uniform_int(static_cast<int>(s.net.power_levels_mw.size())));
    }
    const auto [schedule, powers] = decode_action(s, raw);
    if (!validate_schedule(s.net, schedule).empty()) {
      result.detail = "decoded action violated the one-cell-per-slot rule";
      return result;
    }
    checked += 1;
  }

  // Drive the adaptive scheduler against a live simulation for 1000 steps.
  Scenario s = Scenario::reference();
  s.net.n_nodes = 8;
  s.qos = QosSpec::uniform(8, 64, 0.25, 0.5);
  MsfState msf(s.net, MsfState::Params{}, 99);
  SimState state = make_episode_state(s, episode_seed(5, 0));
  auto [schedule, powers] = msf.current();
  for (int step = 0; step < 1000; ++step) {
    inject_traffic(state);
    const SlotframeReport report = run_slotframe(state, schedule, powers, s.qos);
    std::tie(schedule, powers) = msf_step(msf, report);
    if (!validate_schedule(s.net, schedule).empty()) {
      result.detail = "adaptive schedule violated the one-cell-per-slot rule "
                      "at step " +
                      std::to_string(step);
      return result;
    }
  }

  for (int i = 0; i < 1000; ++i) {
    const auto [rand_schedule, rand_powers] = random_schedule(s, 1000 + i);
    if (!validate_schedule(s.net, rand_schedule).empty()) {
      result.detail = "random schedule violated the one-cell-per-slot rule";
      return result;
    }
  }
  for (int n = 1; n <= 80; n += 7) {
    Scenario rr = Scenario::reference();
    rr.net.n_nodes = n;
    rr.qos = QosSpec::uniform(n, 64, 0.25, 0.5);
    const auto [rr_schedule, rr_powers] = round_robin_schedule(rr, 0);
    if (!validate_schedule(rr.net, rr_schedule).empty()) {
      result.detail = "round-robin schedule violated the one-cell-per-slot rule";
      return result;
    }
    if (n <= rr.net.n_cells()) {
      // Pigeonhole check: no two nodes share a cell below capacity.
      std::set<std::pair<int, int>> used;
      for (int node = 0; node < n; ++node) {
        for (int t = 0; t < rr.net.slotframe_len; ++t) {
          for (int k = 0; k < rr.net.n_channels; ++k) {
            if (rr_schedule.at(node, t, k) && !used.insert({t, k}).second) {
              result.detail = "round-robin assigned one cell twice below capacity";
              return result;
            }
          }
        }
      }
    }
  }

  result.pass = true;
  result.detail = std::to_string(checked) +
                  " decoded actions, 1000 adaptive steps, 1000 random and 12 "
                  "round-robin schedules all feasible";
  return result;
}

CheckResult check_sim_conservation() {
  CheckResult result{"sim-conservation", false, ""};
  Rng rng(2468);
  int frames_checked = 0;
  for (int run = 0; run < 100; ++run) {
    Scenario s;
    s.net.n_nodes = 2 + rng.uniform_int(9);
    s.net.n_channels = 1 + rng.uniform_int(4);
    s.net.slotframe_len = 4 + rng.uniform_int(13);
    s.sim.traffic_rate = 0.1 + 0.8 * rng.uniform();
    s.sim.queue_capacity = 2 + rng.uniform_int(9);
    s.sim.rayleigh_fading = run % 2 == 0;
    s.qos = QosSpec::uniform(s.net.n_nodes, 8 + rng.uniform_int(57), 0.25, 0.5);
    SimState state = make_episode_state(s, episode_seed(run, 0));
    for (int frame = 0; frame < 8; ++frame) {
      const auto [schedule, powers] =
          random_schedule(s, hash_key(run, frame, 0xabcdULL));
      inject_traffic(state);
      run_slotframe(state, schedule, powers, s.qos);
      const int64_t accounted = state.total_delivered() +
                                state.total_dropped_deadline() +
                                state.total_dropped_overflow() +
                                state.queued_packets();
      if (state.total_generated() != accounted) {
        result.detail = "packet accounting mismatch: generated " +
                        std::to_string(state.total_generated()) + ", accounted " +
                        std::to_string(accounted);
        return result;
      }
      frames_checked += 1;
    }
  }

  // Interference-free certificate: the round-robin assignment with fading
  // disabled never loses a packet to the channel, because max-power SNR at
  // the worst in-area distance exceeds the threshold and no two nodes share
  // a cell.
  Scenario s = Scenario::reference();
  s.sim.rayleigh_fading = false;
  s.sim.traffic_rate = 0.8;
  const auto [schedule, powers] = round_robin_schedule(s, 0);
  int64_t errors = 0;
  int64_t attempts = 0;
  SimState state = make_episode_state(s, episode_seed(11, 0));
  for (int frame = 0; frame < 20; ++frame) {
    inject_traffic(state);
    const SlotframeReport report = run_slotframe(state, schedule, powers, s.qos);
    for (int i = 0; i < s.net.n_nodes; ++i) {
      for (int k = 0; k < s.net.n_channels; ++k) {
        errors += report.stats.errors(i, k);
        attempts += report.stats.attempts(i, k);
        if (report.stats.err_prob(i, k) != 0.0) {
          result.detail = "interference-free run shows a nonzero error rate";
          return result;
        }
      }
    }
  }
  if (attempts == 0) {
    result.detail = "interference-free run never transmitted";
    return result;
  }
  result.pass = true;
  result.detail = std::to_string(frames_checked) +
                  " frames conserved packets; " + std::to_string(attempts) +
                  " interference-free attempts, " + std::to_string(errors) +
                  " errors";
  return result;
}

std::vector<CheckResult> run_selftests() {
  return {check_equation_identities(), check_gradient_suite(),
          check_gae_oracle(), check_constraint_safety(),
          check_sim_conservation()};
}

}  // namespace tschpg
