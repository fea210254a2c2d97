#include "tschpg/ppg.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "tschpg/bandit.hpp"
#include "tschpg/errors.hpp"
#include "tschpg/rng.hpp"

using namespace tschpg;

namespace {

// A small filled rollout whose behavior policy is `policy` itself unless a
// perturbation is requested.
RolloutBuffer make_buffer(const Mlp& policy, const HeadLayout& heads,
                          int64_t n_steps, Rng& rng, double perturb = 0.0) {
  Mlp behavior = policy;
  if (perturb != 0.0) {
    for (double& p : behavior.params()) p += perturb * rng.normal();
  }

  RolloutBuffer buffer;
  buffer.obs_dim = policy.input_dim();
  buffer.n_heads = heads.n_heads();
  buffer.logits_total = heads.logits_total;
  buffer.n_steps = n_steps;
  for (int64_t s = 0; s < n_steps; ++s) {
    std::vector<double> obs(buffer.obs_dim);
    for (double& v : obs) v = rng.uniform();
    const std::vector<double> out = behavior.forward(obs);
    for (double v : obs) buffer.observations.push_back(v);
    for (int h = 0; h < heads.n_heads(); ++h) {
      std::vector<double> logp(heads.sizes[h]);
      log_softmax(std::span<const double>(out.data() + heads.offsets[h],
                                          static_cast<size_t>(heads.sizes[h])),
                  logp);
      Rng draw = rng.stream(static_cast<uint64_t>(s * 100 + h));
      const Categorical c = sample_categorical(
          std::span<const double>(out.data() + heads.offsets[h],
                                  static_cast<size_t>(heads.sizes[h])),
          draw);
      buffer.actions.push_back(c.sample);
      for (double v : logp) buffer.old_logp.push_back(v);
    }
    buffer.rewards.push_back(rng.normal());
    buffer.dones.push_back(0);
    buffer.values.push_back(rng.normal());
    buffer.advantages.push_back(rng.normal());
    buffer.value_targets.push_back(rng.normal());
  }
  buffer.values.push_back(rng.normal());  // bootstrap slot
  return buffer;
}

std::vector<int64_t> all_indices(int64_t n) {
  std::vector<int64_t> idx(n);
  std::iota(idx.begin(), idx.end(), int64_t{0});
  return idx;
}

// O(T^2) direct-sum advantage oracle truncated at episode terminations.
void gae_oracle(std::span<const double> rewards, std::span<const double> values,
                std::span<const uint8_t> dones, double gamma, double lambda,
                std::vector<double>& advantages) {
  const int64_t n = static_cast<int64_t>(rewards.size());
  advantages.assign(n, 0.0);
  for (int64_t t = 0; t < n; ++t) {
    double coeff = 1.0;
    for (int64_t l = t; l < n; ++l) {
      const double not_done = dones[l] ? 0.0 : 1.0;
      const double delta =
          rewards[l] + gamma * values[l + 1] * not_done - values[l];
      advantages[t] += coeff * delta;
      if (dones[l]) break;
      coeff *= gamma * lambda;
    }
  }
}

}  // namespace

TEST_CASE("head layout slices logits and reserves the aux slot") {
  const HeadLayout heads = HeadLayout::from_sizes({3, 5, 2});
  CHECK(heads.n_heads() == 3);
  CHECK(heads.logits_total == 10);
  CHECK(heads.offsets == std::vector<int>{0, 3, 8});
  CHECK(heads.aux_index() == 10);
  CHECK(heads.output_dim() == 11);
  CHECK_THROWS_AS(HeadLayout::from_sizes({}), ConfigError);
  CHECK_THROWS_AS(HeadLayout::from_sizes({3, 0}), ConfigError);
}

TEST_CASE("ppg config validation") {
  PpgConfig config;
  CHECK_NOTHROW(config.validate());
  config.clip = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = PpgConfig{};
  config.discount = 1.5;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = PpgConfig{};
  config.minibatch_size = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = PpgConfig{};
  config.hidden_sizes = {};
  CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("gae matches hand-computed two-step values") {
  // No termination: A_1 = d_1, A_0 = d_0 + gamma*lambda*A_1.
  const std::vector<double> rewards = {1.0, 2.0};
  const std::vector<double> values = {0.5, 1.5, 2.5};
  const std::vector<uint8_t> cont = {0, 0};
  std::vector<double> adv(2), tgt(2);
  const double g = 0.9, l = 0.8;
  compute_gae(rewards, values, cont, g, l, adv, tgt);
  const double d1 = 2.0 + g * 2.5 - 1.5;
  const double d0 = 1.0 + g * 1.5 - 0.5;
  CHECK(adv[1] == doctest::Approx(d1).epsilon(1e-15));
  CHECK(adv[0] == doctest::Approx(d0 + g * l * d1).epsilon(1e-15));
  CHECK(tgt[0] == doctest::Approx(adv[0] + 0.5).epsilon(1e-15));
  CHECK(tgt[1] == doctest::Approx(adv[1] + 1.5).epsilon(1e-15));

  // Termination at step 0 cuts both the bootstrap and the recursion.
  const std::vector<uint8_t> done0 = {1, 0};
  compute_gae(rewards, values, done0, g, l, adv, tgt);
  CHECK(adv[0] == doctest::Approx(1.0 - 0.5).epsilon(1e-15));
  CHECK(adv[1] == doctest::Approx(d1).epsilon(1e-15));
}

TEST_CASE("gae matches the direct-sum oracle on random episodes") {
  Rng rng(404);
  std::vector<double> oracle;
  for (int trial = 0; trial < 100; ++trial) {
    const int64_t n = 1 + rng.uniform_int(40);
    std::vector<double> rewards(n), values(n + 1);
    std::vector<uint8_t> dones(n);
    for (int64_t i = 0; i < n; ++i) {
      rewards[i] = rng.normal();
      values[i] = rng.normal();
      dones[i] = rng.uniform() < 0.2 ? 1 : 0;
    }
    values[n] = rng.normal();
    const double gamma = trial % 3 == 0 ? 1.0 : trial % 3 == 1 ? 0.99 : 0.9;
    const double lambda = trial % 2 == 0 ? 0.95 : 0.5;

    std::vector<double> adv(n), tgt(n);
    compute_gae(rewards, values, dones, gamma, lambda, adv, tgt);
    gae_oracle(rewards, values, dones, gamma, lambda, oracle);
    for (int64_t i = 0; i < n; ++i) {
      CHECK(std::abs(adv[i] - oracle[i]) <= 1e-10);
      CHECK(tgt[i] == doctest::Approx(adv[i] + values[i]).epsilon(1e-15));
    }
  }
}

TEST_CASE("gae with zero values and gamma=lambda=1 is reward-to-go") {
  const std::vector<double> rewards = {1.0, 2.0, 4.0, 8.0};
  const std::vector<double> values = {0, 0, 0, 0, 0};
  const std::vector<uint8_t> dones = {0, 0, 1, 0};
  std::vector<double> adv(4), tgt(4);
  compute_gae(rewards, values, dones, 1.0, 1.0, adv, tgt);
  CHECK(adv[0] == doctest::Approx(7.0));  // 1+2+4, cut by the done
  CHECK(adv[1] == doctest::Approx(6.0));
  CHECK(adv[2] == doctest::Approx(4.0));
  CHECK(adv[3] == doctest::Approx(8.0));
}

TEST_CASE("gae rejects mismatched spans") {
  std::vector<double> r(3), v(4), a(3), t(3);
  std::vector<uint8_t> d(3);
  CHECK_NOTHROW(compute_gae(r, v, d, 0.9, 0.9, a, t));
  std::vector<double> v_short(3);
  CHECK_THROWS_AS(compute_gae(r, v_short, d, 0.9, 0.9, a, t), InputError);
  std::vector<double> a_short(2);
  CHECK_THROWS_AS(compute_gae(r, v, d, 0.9, 0.9, a_short, t), InputError);
  std::vector<uint8_t> d_short(2);
  CHECK_THROWS_AS(compute_gae(r, v, d_short, 0.9, 0.9, a, t), InputError);
}

TEST_CASE("policy loss at the behavior policy is the mean advantage") {
  Rng rng(51);
  const HeadLayout heads = HeadLayout::from_sizes({3, 4});
  Mlp policy({5, 8, heads.output_dim()});
  policy.init_random(rng, 0.5);
  const RolloutBuffer buffer = make_buffer(policy, heads, 12, rng, 0.0);
  const auto idx = all_indices(12);
  std::vector<double> adv(12);
  for (int i = 0; i < 12; ++i) adv[i] = buffer.advantages[i];

  const PolicyLossResult r =
      policy_loss(policy, heads, buffer, idx, adv, 0.2, 0.0, {});
  // exp(lp - lp) = 1 exactly, so the surrogate is the plain mean advantage,
  // nothing clips, and the KL against itself vanishes.
  double mean_adv = 0.0;
  for (double a : adv) mean_adv += a;
  mean_adv /= 12.0;
  CHECK(r.objective == doctest::Approx(mean_adv).epsilon(1e-15));
  CHECK(r.mean_ratio == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.kl == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.clip_fraction == 0.0);
}

TEST_CASE("policy loss is invariant to constant logit shifts") {
  Rng rng(52);
  const HeadLayout heads = HeadLayout::from_sizes({4, 3});
  Mlp policy({4, 10, heads.output_dim()});
  policy.init_random(rng, 0.7);
  const RolloutBuffer buffer = make_buffer(policy, heads, 10, rng, 0.05);
  const auto idx = all_indices(10);
  std::vector<double> adv(buffer.advantages.begin(), buffer.advantages.end());

  const PolicyLossResult base =
      policy_loss(policy, heads, buffer, idx, adv, 0.2, 0.01, {});

  // Shift every categorical logit's bias by the same constant; softmax and
  // hence the whole objective must not move.
  Mlp shifted = policy;
  auto params = shifted.params();
  // Final layer biases sit at the tail of the parameter array.
  const int out_dim = heads.output_dim();
  for (int j = 0; j < heads.logits_total; ++j) {
    params[params.size() - out_dim + j] += 5.0;
  }
  const PolicyLossResult moved =
      policy_loss(shifted, heads, buffer, idx, adv, 0.2, 0.01, {});
  CHECK(moved.objective == doctest::Approx(base.objective).epsilon(1e-12));
  CHECK(moved.kl == doctest::Approx(base.kl).epsilon(1e-12));
}

TEST_CASE("policy loss clip fraction reacts to off-policy data") {
  Rng rng(53);
  const HeadLayout heads = HeadLayout::from_sizes({6});
  Mlp policy({3, 12, heads.output_dim()});
  policy.init_random(rng, 1.0);
  const RolloutBuffer buffer = make_buffer(policy, heads, 64, rng, 0.8);
  const auto idx = all_indices(64);
  std::vector<double> adv(buffer.advantages.begin(), buffer.advantages.end());

  const PolicyLossResult r =
      policy_loss(policy, heads, buffer, idx, adv, 0.2, 0.01, {});
  CHECK(r.clip_fraction > 0.0);
  CHECK(r.kl > 0.0);
  CHECK(std::isfinite(r.objective));
}

TEST_CASE("value loss is half the mean squared error") {
  Mlp value({2, 1});
  auto p = value.params();
  p[0] = 1.0;
  p[1] = 0.0;
  p[2] = 0.0;  // V([x, y]) = x
  std::vector<double> obs = {1.0, 9.0, 3.0, 9.0};
  std::vector<double> targets = {2.0, 1.0};  // errors -1 and 2
  SampleView data{2, obs, targets};
  const auto idx = all_indices(2);
  const double loss = value_loss(value, data, idx, {});
  CHECK(loss == doctest::Approx(0.5 * (1.0 + 4.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("aux joint loss decomposes and the clone term is nonnegative") {
  Rng rng(54);
  const HeadLayout heads = HeadLayout::from_sizes({3, 2});
  Mlp policy({4, 9, heads.output_dim()});
  policy.init_random(rng, 0.6);

  AuxDataset data;
  data.obs_dim = 4;
  data.logits_total = heads.logits_total;
  Mlp snapshot = policy;
  for (double& p : snapshot.params()) p += 0.05 * rng.normal();
  for (int row = 0; row < 16; ++row) {
    std::vector<double> obs(4);
    for (double& v : obs) v = rng.uniform();
    const auto out = snapshot.forward(obs);
    for (double v : obs) data.observations.push_back(v);
    for (int h = 0; h < heads.n_heads(); ++h) {
      std::vector<double> logp(heads.sizes[h]);
      log_softmax(std::span<const double>(out.data() + heads.offsets[h],
                                          static_cast<size_t>(heads.sizes[h])),
                  logp);
      for (double v : logp) data.old_logp.push_back(v);
    }
    data.value_targets.push_back(rng.normal());
  }

  const auto idx = all_indices(16);
  const AuxLossResult with_clone =
      aux_joint_loss(policy, heads, data, idx, 1.0, {});
  CHECK(with_clone.kl >= 0.0);
  CHECK(with_clone.joint ==
        doctest::Approx(with_clone.aux + with_clone.kl).epsilon(1e-12));

  const AuxLossResult no_clone =
      aux_joint_loss(policy, heads, data, idx, 0.0, {});
  CHECK(no_clone.joint == doctest::Approx(no_clone.aux).epsilon(1e-15));
  CHECK(no_clone.aux == doctest::Approx(with_clone.aux).epsilon(1e-12));

  // Cloning against the policy's own snapshot has zero KL.
  AuxDataset self = data;
  self.old_logp.clear();
  for (int row = 0; row < 16; ++row) {
    const auto out = policy.forward(self.view().obs(row));
    for (int h = 0; h < heads.n_heads(); ++h) {
      std::vector<double> logp(heads.sizes[h]);
      log_softmax(std::span<const double>(out.data() + heads.offsets[h],
                                          static_cast<size_t>(heads.sizes[h])),
                  logp);
      for (double v : logp) self.old_logp.push_back(v);
    }
  }
  const AuxLossResult self_res = aux_joint_loss(policy, heads, self, idx, 2.5, {});
  CHECK(self_res.kl == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("training is deterministic and fills the report") {
  auto factory = [](uint64_t seed) {
    return std::make_unique<BanditEnv>(seed);
  };
  PpgConfig config;
  config.total_steps = 200;
  config.rollout_len = 50;
  config.minibatch_size = 25;
  config.n_policy_iters = 2;
  config.hidden_sizes = {8};
  config.learning_rate = 0.01;

  const TrainReport a = train(factory, config, 11);
  const TrainReport b = train(factory, config, 11);
  REQUIRE(a.rows.size() == 4);  // 200/50 rollouts
  CHECK(a.rows.front().iteration == 1);
  CHECK(a.rows.back().env_steps == 200);
  CHECK(a.obs_dim == 1);
  CHECK(a.head_sizes == std::vector<int>{2});

  const auto pa = a.checkpoint.net("policy").params();
  const auto pb = b.checkpoint.net("policy").params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
  for (size_t r = 0; r < a.rows.size(); ++r) {
    CHECK(a.rows[r].mean_reward == b.rows[r].mean_reward);
    CHECK(a.rows[r].losses.policy_loss == b.rows[r].losses.policy_loss);
  }

  const TrainReport c = train(factory, config, 12);
  const auto pc = c.checkpoint.net("policy").params();
  bool any_differs = false;
  for (size_t i = 0; i < pa.size(); ++i) any_differs |= pa[i] != pc[i];
  CHECK(any_differs);
}

TEST_CASE("ppo mode never runs the auxiliary phase") {
  auto factory = [](uint64_t seed) {
    return std::make_unique<BanditEnv>(seed);
  };
  PpgConfig config;
  config.total_steps = 300;
  config.rollout_len = 50;
  config.minibatch_size = 50;
  config.n_policy_iters = 2;
  config.hidden_sizes = {8};
  config.mode = PpgConfig::Mode::kPpo;
  config.aux_epochs = 6;

  const TrainReport six = train(factory, config, 3);
  config.aux_epochs = 1;
  const TrainReport one = train(factory, config, 3);

  for (const IterationRow& row : six.rows) CHECK(row.losses.aux_loss == 0.0);
  // aux_epochs is inert in ppo mode: checkpoints agree bit for bit.
  const auto ps = six.checkpoint.net("policy").params();
  const auto po = one.checkpoint.net("policy").params();
  REQUIRE(ps.size() == po.size());
  for (size_t i = 0; i < ps.size(); ++i) CHECK(ps[i] == po[i]);

  // In ppg mode the auxiliary phase moves the policy for the same seed.
  config.mode = PpgConfig::Mode::kPpg;
  config.aux_epochs = 6;
  const TrainReport ppg = train(factory, config, 3);
  const auto pg = ppg.checkpoint.net("policy").params();
  bool differs = false;
  for (size_t i = 0; i < ps.size(); ++i) differs |= ps[i] != pg[i];
  CHECK(differs);
  bool any_aux = false;
  for (const IterationRow& row : ppg.rows) {
    any_aux = any_aux || row.losses.aux_loss != 0.0;
  }
  CHECK(any_aux);
}

TEST_CASE("zero-step training yields an initial checkpoint and no rows") {
  auto factory = [](uint64_t seed) {
    return std::make_unique<BanditEnv>(seed);
  };
  PpgConfig config;
  config.total_steps = 0;
  config.hidden_sizes = {8};
  const TrainReport report = train(factory, config, 5);
  CHECK(report.rows.empty());
  CHECK(report.checkpoint.net("policy").input_dim() == 1);
  CHECK(report.checkpoint.net("policy").output_dim() == 3);  // 2 logits + aux
  CHECK(report.checkpoint.net("value").output_dim() == 1);
}

TEST_CASE("train report csv has the pinned schema") {
  auto factory = [](uint64_t seed) {
    return std::make_unique<BanditEnv>(seed);
  };
  PpgConfig config;
  config.total_steps = 100;
  config.rollout_len = 50;
  config.minibatch_size = 50;
  config.hidden_sizes = {8};
  const TrainReport report = train(factory, config, 2);
  const std::string csv = train_report_csv(report);
  CHECK(csv.starts_with(
      "iteration,env_steps,mean_reward,policy_loss,value_loss,aux_loss,kl,"
      "clip_fraction\n"));
  int lines = 0;
  for (char c : csv) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 3);  // header + 2 iterations
}

TEST_CASE("evaluation is deterministic and validates its inputs") {
  auto factory = [](uint64_t seed) {
    return std::make_unique<BanditEnv>(seed);
  };
  PpgConfig config;
  config.total_steps = 100;
  config.rollout_len = 50;
  config.minibatch_size = 50;
  config.hidden_sizes = {8};
  const TrainReport report = train(factory, config, 21);

  const EvalSummary a = evaluate(report.checkpoint, factory, 10, 99);
  const EvalSummary b = evaluate(report.checkpoint, factory, 10, 99);
  CHECK(a.n_episodes == 10);
  CHECK(a.mean_reward == b.mean_reward);
  CHECK(a.episode_utility == b.episode_utility);

  CHECK_THROWS_AS(evaluate(report.checkpoint, factory, 0, 99), ConfigError);

  // A checkpoint trained for a different observation shape is rejected.
  Rng rng(1);
  Mlp wrong_policy({3, 4, 3});
  wrong_policy.init_random(rng);
  Mlp wrong_value({3, 4, 1});
  wrong_value.init_random(rng);
  Checkpoint wrong;
  wrong.nets.emplace_back("policy", wrong_policy);
  wrong.nets.emplace_back("value", wrong_value);
  CHECK_THROWS_AS(evaluate(wrong, factory, 5, 99), ConfigError);
}

TEST_CASE("ppo on the bandit learns the better arm quickly") {
  // Single-seed smoke version of the multi-seed acceptance run.
  auto factory = [](uint64_t seed) {
    return std::make_unique<BanditEnv>(seed);
  };
  PpgConfig config;
  config.mode = PpgConfig::Mode::kPpo;
  config.total_steps = 3000;
  config.rollout_len = 50;
  config.minibatch_size = 50;
  config.policy_epochs = 4;
  config.n_policy_iters = 4;
  config.hidden_sizes = {16};
  config.learning_rate = 0.02;

  const uint64_t seed = 7;
  const TrainReport report = train(factory, config, seed);
  BanditEnv probe(seed);
  const Mlp& policy = report.checkpoint.net("policy");
  const auto out = policy.forward(probe.reset());
  std::vector<double> logp(2);
  log_softmax(std::span<const double>(out.data(), 2), logp);
  const double p_better = std::exp(logp[probe.better_arm()]);
  CHECK(p_better >= 0.95);
}
