#include "tschpg/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "tschpg/errors.hpp"

namespace tschpg {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ConfigError("an MLP needs at least two layer sizes");
  for (int s : sizes_) {
    if (s < 1) throw ConfigError("layer sizes must be positive");
  }
  int offset = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weight_offset_.push_back(offset);
    offset += sizes_[l] * sizes_[l + 1];
    bias_offset_.push_back(offset);
    offset += sizes_[l + 1];
  }
  params_.assign(offset, 0.0);
}

void Mlp::init_random(Rng& rng, double final_scale) {
  const size_t n_layers = sizes_.size() - 1;
  for (size_t l = 0; l < n_layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double scale =
        (l + 1 == n_layers ? final_scale : 1.0) / std::sqrt(static_cast<double>(in));
    double* w = params_.data() + weight_offset_[l];
    for (int i = 0; i < in * out; ++i) w[i] = scale * rng.normal();
    double* b = params_.data() + bias_offset_[l];
    for (int i = 0; i < out; ++i) b[i] = 0.0;
  }
}

std::vector<double> Mlp::forward(std::span<const double> input,
                                 MlpCache* cache) const {
  if (static_cast<int>(input.size()) != sizes_.front()) {
    throw InputError("input length does not match the input layer");
  }
  if (cache) {
    cache->acts.assign(1, std::vector<double>(input.begin(), input.end()));
  }
  std::vector<double> a(input.begin(), input.end());
  std::vector<double> z;
  const size_t n_layers = sizes_.size() - 1;
  for (size_t l = 0; l < n_layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* w = params_.data() + weight_offset_[l];
    const double* b = params_.data() + bias_offset_[l];
    z.assign(out, 0.0);
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<size_t>(o) * in;
      double acc = b[o];
      for (int i = 0; i < in; ++i) acc += row[i] * a[i];
      z[o] = acc;
    }
    if (l + 1 < n_layers) {
      for (int o = 0; o < out; ++o) z[o] = std::tanh(z[o]);
    }
    a.swap(z);
    if (cache) cache->acts.push_back(a);
  }
  return a;
}

void Mlp::backward(const MlpCache& cache, std::span<const double> output_grad,
                   std::span<double> grad) const {
  const size_t n_layers = sizes_.size() - 1;
  if (cache.acts.size() != n_layers + 1) {
    throw InputError("forward cache missing or from a different network");
  }
  for (size_t l = 0; l <= n_layers; ++l) {
    if (static_cast<int>(cache.acts[l].size()) != sizes_[l]) {
      throw InputError("forward cache shape mismatch");
    }
  }
  if (static_cast<int>(output_grad.size()) != sizes_.back() ||
      static_cast<int>(grad.size()) != param_count()) {
    throw InputError("gradient buffer shape mismatch");
  }

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> next_delta;
  for (size_t l = n_layers; l-- > 0;) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const std::vector<double>& a_prev = cache.acts[l];
    const double* w = params_.data() + weight_offset_[l];
    double* dw = grad.data() + weight_offset_[l];
    double* db = grad.data() + bias_offset_[l];
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      double* dw_row = dw + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) dw_row[i] += d * a_prev[i];
      db[o] += d;
    }
    if (l == 0) break;
    next_delta.assign(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) next_delta[i] += row[i] * d;
    }
    // a_prev is the post-tanh activation of layer l, so tanh' = 1 - a^2.
    for (int i = 0; i < in; ++i) next_delta[i] *= 1.0 - a_prev[i] * a_prev[i];
    delta.swap(next_delta);
  }
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  if (logits.empty()) throw InputError("empty logits");
  if (logits.size() != out.size()) throw InputError("output buffer size mismatch");
  double max = -std::numeric_limits<double>::infinity();
  for (double l : logits) {
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw InputError("logits must be finite or -inf");
    }
    max = std::max(max, l);
  }
  if (max == -std::numeric_limits<double>::infinity()) {
    throw InputError("all logits are -inf");
  }
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) sum += std::exp(logits[i] - max);
  const double lse = max + std::log(sum);
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  log_softmax(logits, out);
  for (double& v : out) v = std::exp(v);
  return out;
}

Categorical sample_categorical(std::span<const double> logits, Rng& rng) {
  Categorical result;
  std::vector<double> logp(logits.size());
  log_softmax(logits, logp);
  result.probs.resize(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) result.probs[i] = std::exp(logp[i]);

  // Inverse-CDF draw; fall through to the last index on rounding overflow.
  const double u = rng.uniform();
  double cum = 0.0;
  int sample = static_cast<int>(logits.size()) - 1;
  for (size_t i = 0; i < result.probs.size(); ++i) {
    cum += result.probs[i];
    if (u < cum) {
      sample = static_cast<int>(i);
      break;
    }
  }
  result.sample = sample;
  result.log_prob = logp[sample];
  double entropy = 0.0;
  for (size_t i = 0; i < result.probs.size(); ++i) {
    if (result.probs[i] > 0.0) entropy -= result.probs[i] * logp[i];
  }
  result.entropy = entropy;
  return result;
}

double kl_categorical(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("distribution length mismatch");
  double sum_p = 0.0;
  double sum_q = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) {
      throw InputError("probabilities must be nonnegative");
    }
    sum_p += p[i];
    sum_q += q[i];
  }
  if (std::abs(sum_p - 1.0) > 1e-6 || std::abs(sum_q - 1.0) > 1e-6) {
    throw InputError("inputs must be normalized distributions");
  }
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    kl += p[i] * std::log(p[i] / std::max(q[i], 1e-12));
  }
  return kl;
}

Adam::Adam(int n_params, AdamParams params) : config_(params) {
  if (n_params < 1) throw ConfigError("Adam needs at least one parameter");
  if (!(config_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0,1)");
  }
  if (!(config_.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  m_.assign(n_params, 0.0);
  v_.assign(n_params, 0.0);
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw InputError("Adam parameter/gradient shape mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient; update refused");
  }
  steps_ += 1;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (size_t i = 0; i < m_.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

const Mlp& Checkpoint::net(const std::string& name) const {
  for (const auto& [net_name, net] : nets) {
    if (net_name == name) return net;
  }
  throw InputError("checkpoint has no network named '" + name + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open checkpoint file for writing: " + path);
  out << "tschpg-checkpoint 1\n";
  out << "nets " << checkpoint.nets.size() << "\n";
  char buf[64];
  for (const auto& [name, net] : checkpoint.nets) {
    out << "net " << name << "\nlayers";
    for (int s : net.layer_sizes()) out << ' ' << s;
    out << "\nparams " << net.param_count() << "\n";
    for (double p : net.params()) {
      // %a prints the exact binary value, so reloading is bit-exact.
      std::snprintf(buf, sizeof buf, "%a\n", p);
      out << buf;
    }
  }
  if (!out) throw IoError("failed while writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint file: " + path);
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "tschpg-checkpoint" || version != 1) {
    throw IoError("unrecognized checkpoint header in " + path);
  }
  size_t n_nets = 0;
  if (!(in >> word >> n_nets) || word != "nets") {
    throw IoError("malformed checkpoint (nets count) in " + path);
  }
  Checkpoint checkpoint;
  for (size_t n = 0; n < n_nets; ++n) {
    std::string name;
    if (!(in >> word >> name) || word != "net") {
      throw IoError("malformed checkpoint (net name) in " + path);
    }
    if (!(in >> word) || word != "layers") {
      throw IoError("malformed checkpoint (layer header) in " + path);
    }
    std::string line;
    std::getline(in, line);
    std::istringstream layer_line(line);
    std::vector<int> sizes;
    int s = 0;
    while (layer_line >> s) sizes.push_back(s);
    Mlp net(sizes);
    int count = 0;
    if (!(in >> word >> count) || word != "params" || count != net.param_count()) {
      throw IoError("malformed checkpoint (parameter count) in " + path);
    }
    auto params = net.params();
    for (int i = 0; i < count; ++i) {
      if (!(in >> word)) throw IoError("truncated checkpoint: " + path);
      char* end = nullptr;
      params[i] = std::strtod(word.c_str(), &end);
      if (end == word.c_str()) throw IoError("bad parameter literal in " + path);
    }
    checkpoint.nets.emplace_back(std::move(name), std::move(net));
  }
  return checkpoint;
}

}  // namespace tschpg
