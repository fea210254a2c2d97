#ifndef TSCHPG_RNG_HPP
#define TSCHPG_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace tschpg {

// Deterministic random stream.  All distribution transforms are implemented
// here rather than with std:: distributions, whose output is
// implementation-defined; this keeps every draw reproducible for a given
// seed independent of the standard library in use.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  // Derives an independent substream identified by name.  Streams with
  // distinct names (or distinct parent seeds) are statistically independent.
  Rng stream(std::string_view name) const;
  Rng stream(uint64_t index) const;

  uint64_t seed() const { return seed_; }

  // Raw 64 random bits.
  uint64_t next() { return gen_(); }

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).  Rejection sampling keeps the draw unbiased.
  int uniform_int(int n);

  // Unit-mean exponential variate.
  double exponential() { return -std::log1p(-uniform()); }

  // Standard normal variate (Box-Muller, both halves consumed per call pair).
  double normal();

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Stateless counter-based draws: pure functions of their key.  Used where
// paired experiments must consume identical randomness no matter how the
// surrounding control flow differs (common random numbers), e.g. traffic
// arrivals and fading realizations keyed by (seed, frame, slot, node).
uint64_t mix_bits(uint64_t x);
uint64_t hash_key(uint64_t k0, uint64_t k1, uint64_t k2 = 0, uint64_t k3 = 0);
double keyed_uniform(uint64_t k0, uint64_t k1, uint64_t k2 = 0, uint64_t k3 = 0);
double keyed_exponential(uint64_t k0, uint64_t k1, uint64_t k2 = 0, uint64_t k3 = 0);

}  // namespace tschpg

#endif  // TSCHPG_RNG_HPP
