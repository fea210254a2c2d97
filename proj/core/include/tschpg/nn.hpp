#ifndef TSCHPG_NN_HPP
#define TSCHPG_NN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tschpg/rng.hpp"

namespace tschpg {

// Activations recorded during a forward pass: acts[0] is the input, acts[l]
// the post-activation output of layer l.  Required by backward().
struct MlpCache {
  std::vector<std::vector<double>> acts;
};

// Fully connected network, tanh hidden activations, linear output layer.
// Parameters live in one flat 64-bit array: per layer, the (out x in)
// row-major weight block followed by the bias block.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  // Gaussian fan-in initialization; the output layer is additionally scaled
  // by final_scale (small values give a near-uniform initial policy).
  void init_random(Rng& rng, double final_scale = 1.0);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int param_count() const { return static_cast<int>(params_.size()); }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::vector<double> forward(std::span<const double> input,
                              MlpCache* cache = nullptr) const;

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const MlpCache& cache, std::span<const double> output_grad,
                std::span<double> grad) const;

 private:
  std::vector<int> sizes_;
  std::vector<double> params_;
  std::vector<int> weight_offset_;
  std::vector<int> bias_offset_;
};

// Numerically stable log-softmax / softmax (max-subtraction).
void log_softmax(std::span<const double> logits, std::span<double> out);
std::vector<double> softmax(std::span<const double> logits);

struct Categorical {
  int sample = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
  std::vector<double> probs;
};

// Softmax distribution over logits, sampled by inverse CDF on the given
// stream.  Rejects NaN/+inf logits and all-(-inf) logits.
Categorical sample_categorical(std::span<const double> logits, Rng& rng);

// Sum_j p_j ln(p_j / q_j) with 0 ln 0 = 0 and q floored at 1e-12.
double kl_categorical(std::span<const double> p, std::span<const double> q);

struct AdamParams {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over one flat parameter array.
class Adam {
 public:
  Adam(int n_params, AdamParams params);

  // Throws NumericError on non-finite gradients; the update is refused.
  void step(std::span<double> params, std::span<const double> grad);

  int64_t step_count() const { return steps_; }
  const AdamParams& config() const { return config_; }

 private:
  AdamParams config_;
  std::vector<double> m_;
  std::vector<double> v_;
  int64_t steps_ = 0;
};

// Named networks serialized as versioned plain text with a layer-size header
// and hex-float parameters, so checkpoints round-trip bit-exactly.
struct Checkpoint {
  std::vector<std::pair<std::string, Mlp>> nets;

  const Mlp& net(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tschpg

#endif  // TSCHPG_NN_HPP
