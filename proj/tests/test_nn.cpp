#include "tschpg/nn.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "tschpg/errors.hpp"
#include "tschpg/rng.hpp"

using namespace tschpg;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("mlp layout: parameter count and shape checks") {
  Mlp net({3, 5, 2});
  CHECK(net.input_dim() == 3);
  CHECK(net.output_dim() == 2);
  CHECK(net.param_count() == (3 + 1) * 5 + (5 + 1) * 2);

  Rng rng(1);
  net.init_random(rng);
  for (double p : net.params()) CHECK(std::isfinite(p));

  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}), InputError);
  CHECK_THROWS_AS(Mlp({4}), ConfigError);
  CHECK_THROWS_AS(Mlp({4, 0, 2}), ConfigError);
}

TEST_CASE("forward computes affine-tanh-affine exactly") {
  // One hidden unit: y = w2 * tanh(w1 x + b1) + b2 with hand-set parameters.
  Mlp net({1, 1, 1});
  REQUIRE(net.param_count() == 4);
  auto p = net.params();
  p[0] = 0.7;   // w1
  p[1] = -0.2;  // b1
  p[2] = 1.3;   // w2
  p[3] = 0.05;  // b2

  for (double x : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    const double expected = 1.3 * std::tanh(0.7 * x - 0.2) + 0.05;
    const auto out = net.forward(std::vector<double>{x});
    REQUIRE(out.size() == 1);
    CHECK(out[0] == doctest::Approx(expected).epsilon(1e-15));
  }

  // A two-layer net with no hidden layer is purely affine.
  Mlp linear({2, 2});
  auto q = linear.params();
  // Row-major weights [ [1,2], [3,4] ], bias [0.5, -0.5].
  q[0] = 1.0; q[1] = 2.0; q[2] = 3.0; q[3] = 4.0; q[4] = 0.5; q[5] = -0.5;
  const auto out = linear.forward(std::vector<double>{10.0, 100.0});
  CHECK(out[0] == doctest::Approx(210.5));
  CHECK(out[1] == doctest::Approx(429.5));
}

TEST_CASE("backward gradients match central finite differences") {
  Rng rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    Mlp net({4, 6, 3});
    net.init_random(rng);
    std::vector<double> input(4);
    for (double& v : input) v = rng.normal();

    // Scalar loss: L = 0.5 * sum(out^2) so dL/dout = out.
    MlpCache cache;
    const std::vector<double> out = net.forward(input, &cache);
    std::vector<double> grad(net.param_count(), 0.0);
    net.backward(cache, out, grad);

    const double h = 1e-5;
    auto params = net.params();
    for (int p = 0; p < net.param_count(); p += 7) {  // sample every 7th
      const double saved = params[p];
      params[p] = saved + h;
      const auto up = net.forward(input);
      params[p] = saved - h;
      const auto down = net.forward(input);
      params[p] = saved;
      double lu = 0.0, ld = 0.0;
      for (size_t i = 0; i < up.size(); ++i) {
        lu += 0.5 * up[i] * up[i];
        ld += 0.5 * down[i] * down[i];
      }
      const double fd = (lu - ld) / (2.0 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[p]), 1e-6});
      CHECK(std::abs(fd - grad[p]) / scale <= 1e-5);
    }
  }
}

TEST_CASE("backward accumulates instead of overwriting") {
  Rng rng(9);
  Mlp net({2, 3, 1});
  net.init_random(rng);
  std::vector<double> input = {0.3, -0.8};
  MlpCache cache;
  net.forward(input, &cache);

  std::vector<double> once(net.param_count(), 0.0);
  net.backward(cache, std::vector<double>{1.0}, once);
  std::vector<double> twice(net.param_count(), 0.0);
  net.backward(cache, std::vector<double>{1.0}, twice);
  net.backward(cache, std::vector<double>{1.0}, twice);
  for (int i = 0; i < net.param_count(); ++i) {
    CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
  }
}

TEST_CASE("log_softmax handles uniform, extreme, and degenerate logits") {
  // Uniform logits over 8 slots: every log-probability is -ln 8.
  std::vector<double> logits(8, 1.7);
  std::vector<double> out(8);
  log_softmax(logits, out);
  for (double v : out) CHECK(std::abs(v - (-std::log(8.0))) <= 1e-12);

  // Huge spread must not overflow: logits (1000, 0).
  std::vector<double> wide = {1000.0, 0.0};
  std::vector<double> wout(2);
  log_softmax(wide, wout);
  CHECK(wout[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(wout[1] == doctest::Approx(-1000.0).epsilon(1e-12));

  const auto probs = softmax(wide);
  CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-12));

  // -inf logits mark impossible choices; all-(-inf) is rejected.
  std::vector<double> masked = {0.0, -std::numeric_limits<double>::infinity()};
  std::vector<double> mout(2);
  log_softmax(masked, mout);
  CHECK(mout[0] == 0.0);
  CHECK(std::isinf(mout[1]));

  std::vector<double> all_masked(3, -std::numeric_limits<double>::infinity());
  std::vector<double> aout(3);
  CHECK_THROWS_AS(log_softmax(all_masked, aout), InputError);
  std::vector<double> with_nan = {0.0, std::nan("")};
  CHECK_THROWS_AS(log_softmax(with_nan, aout), InputError);
  const std::vector<double> empty;
  std::vector<double> empty_out;
  CHECK_THROWS_AS(log_softmax(empty, empty_out), InputError);
}

TEST_CASE("softmax probabilities sum to one across random logits") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(1 + rng.uniform_int(16));
    for (double& v : logits) v = rng.normal() * 5.0;
    const auto probs = softmax(logits);
    double sum = 0.0;
    for (double p : probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("kl divergence: known values, positivity, and validation") {
  // KL((1,0) || (0.5,0.5)) = ln 2.
  CHECK(std::abs(kl_categorical(std::vector<double>{1.0, 0.0},
                                std::vector<double>{0.5, 0.5}) -
                 std::log(2.0)) <= 1e-12);
  // KL(p || p) = 0.
  CHECK(kl_categorical(std::vector<double>{0.3, 0.7},
                       std::vector<double>{0.3, 0.7}) == doctest::Approx(0.0));

  Rng rng(44);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + rng.uniform_int(6);
    std::vector<double> p(n), q(n);
    double sp = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      p[i] = rng.uniform() + 1e-3;
      q[i] = rng.uniform() + 1e-3;
      sp += p[i];
      sq += q[i];
    }
    for (int i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    CHECK(kl_categorical(p, q) >= -1e-12);
  }

  CHECK_THROWS_AS(kl_categorical(std::vector<double>{1.0},
                                 std::vector<double>{0.5, 0.5}),
                  InputError);
  CHECK_THROWS_AS(kl_categorical(std::vector<double>{0.5, 0.2},
                                 std::vector<double>{0.5, 0.5}),
                  InputError);
  CHECK_THROWS_AS(kl_categorical(std::vector<double>{-0.5, 1.5},
                                 std::vector<double>{0.5, 0.5}),
                  InputError);
}

TEST_CASE("categorical sampling matches its probabilities within 3 sigma") {
  std::vector<double> logits = {std::log(0.2), std::log(0.3), std::log(0.5)};
  Rng rng(2025);
  std::vector<int> counts(3, 0);
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    const Categorical c = sample_categorical(logits, rng);
    REQUIRE(c.sample >= 0);
    REQUIRE(c.sample < 3);
    counts[c.sample] += 1;
    CHECK(c.log_prob == doctest::Approx(logits[c.sample]).epsilon(1e-9));
  }
  const std::vector<double> probs = {0.2, 0.3, 0.5};
  for (int i = 0; i < 3; ++i) {
    const double sigma = std::sqrt(draws * probs[i] * (1.0 - probs[i]));
    CHECK(std::abs(counts[i] - draws * probs[i]) <= 3.0 * sigma);
  }

  // Entropy of (0.2,0.3,0.5) is -sum p ln p.
  const Categorical c = sample_categorical(logits, rng);
  const double expected_entropy =
      -(0.2 * std::log(0.2) + 0.3 * std::log(0.3) + 0.5 * std::log(0.5));
  CHECK(c.entropy == doctest::Approx(expected_entropy).epsilon(1e-9));
}

TEST_CASE("adam first step follows the bias-corrected update") {
  // After one step: m_hat = g, v_hat = g^2, delta = -lr * g / (|g| + eps).
  AdamParams params;
  params.learning_rate = 0.01;
  Adam adam(3, params);
  std::vector<double> x = {1.0, -2.0, 0.0};
  const std::vector<double> g = {0.5, -3.0, 0.0};
  adam.step(x, g);
  CHECK(adam.step_count() == 1);
  for (int i = 0; i < 3; ++i) {
    const double expected =
        (i == 0 ? 1.0 : i == 1 ? -2.0 : 0.0) -
        0.01 * g[i] / (std::abs(g[i]) + params.epsilon);
    CHECK(x[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("adam drives a quadratic bowl to its minimum") {
  AdamParams params;
  params.learning_rate = 0.05;
  Adam adam(1, params);
  std::vector<double> x = {1.0};
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> g = {2.0 * x[0]};
    adam.step(x, g);
  }
  CHECK(std::abs(x[0]) < 1e-2);
}

TEST_CASE("adam refuses non-finite gradients and shape mismatches") {
  Adam adam(2, AdamParams{});
  std::vector<double> x = {1.0, 2.0};
  CHECK_THROWS_AS(adam.step(x, std::vector<double>{std::nan(""), 0.0}),
                  NumericError);
  CHECK(x[0] == 1.0);  // refused update leaves parameters alone
  CHECK(adam.step_count() == 0);
  CHECK_THROWS_AS(adam.step(x, std::vector<double>{1.0}), InputError);
  CHECK_THROWS_AS(Adam(0, AdamParams{}), ConfigError);
  AdamParams bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(Adam(1, bad), ConfigError);
  bad = AdamParams{};
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(Adam(1, bad), ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Rng rng(777);
  Mlp policy({5, 8, 4});
  policy.init_random(rng, 0.01);
  Mlp value({5, 8, 1});
  value.init_random(rng);

  Checkpoint saved;
  saved.nets.emplace_back("policy", policy);
  saved.nets.emplace_back("value", value);

  const std::string path = temp_path("tschpg_test_checkpoint.txt");
  save_checkpoint(path, saved);
  const Checkpoint loaded = load_checkpoint(path);

  REQUIRE(loaded.nets.size() == 2);
  CHECK(loaded.net("policy").layer_sizes() == policy.layer_sizes());
  const auto lp = loaded.net("policy").params();
  const auto pp = policy.params();
  REQUIRE(lp.size() == pp.size());
  for (size_t i = 0; i < lp.size(); ++i) CHECK(lp[i] == pp[i]);
  const auto lv = loaded.net("value").params();
  const auto vv = value.params();
  for (size_t i = 0; i < lv.size(); ++i) CHECK(lv[i] == vv[i]);

  CHECK_THROWS_AS(loaded.net("missing"), InputError);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/ckpt.txt"), IoError);
  const std::string junk = temp_path("tschpg_test_junk.txt");
  {
    FILE* f = std::fopen(junk.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("not a checkpoint\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(junk), IoError);
  std::filesystem::remove(junk);
}

TEST_CASE("init_random is deterministic in the stream and scales the head") {
  Rng a(5);
  Mlp m1({3, 4, 2});
  m1.init_random(a, 0.01);
  Rng b(5);
  Mlp m2({3, 4, 2});
  m2.init_random(b, 0.01);
  const auto p1 = m1.params();
  const auto p2 = m2.params();
  for (size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);

  // A tiny final_scale yields near-uniform categorical outputs.
  Rng c(6);
  Mlp policy({3, 16, 5});
  policy.init_random(c, 1e-4);
  const auto logits = policy.forward(std::vector<double>{0.2, -0.4, 0.9});
  const auto probs = softmax(logits);
  for (double p : probs) CHECK(std::abs(p - 0.2) < 1e-3);
}
