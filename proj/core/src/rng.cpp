#include "tschpg/rng.hpp"

#include <cmath>

#include "tschpg/errors.hpp"

namespace tschpg {

namespace {

// FNV-1a over the bytes of a string, used to turn stream names into keys.
uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

uint64_t mix_bits(uint64_t x) {
  // splitmix64 finalizer: full-avalanche permutation of the 64-bit input.
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t hash_key(uint64_t k0, uint64_t k1, uint64_t k2, uint64_t k3) {
  uint64_t h = mix_bits(k0);
  h = mix_bits(h ^ k1);
  h = mix_bits(h ^ k2);
  h = mix_bits(h ^ k3);
  return h;
}

double keyed_uniform(uint64_t k0, uint64_t k1, uint64_t k2, uint64_t k3) {
  return static_cast<double>(hash_key(k0, k1, k2, k3) >> 11) * 0x1.0p-53;
}

double keyed_exponential(uint64_t k0, uint64_t k1, uint64_t k2, uint64_t k3) {
  return -std::log1p(-keyed_uniform(k0, k1, k2, k3));
}

Rng Rng::stream(std::string_view name) const {
  return Rng(hash_key(seed_, fnv1a(name)));
}

Rng Rng::stream(uint64_t index) const {
  return Rng(hash_key(seed_, 0x5eedULL, index));
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw InputError("uniform_int requires a positive bound");
  const uint64_t bound = static_cast<uint64_t>(n);
  // Smallest multiple of `bound` close to 2^64; reject draws above it.
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  uint64_t x = next();
  while (x > limit) x = next();
  return static_cast<int>(x % bound);
}

double Rng::normal() {
  if (have_spare_normal_) {
    have_spare_normal_ = false;
    return spare_normal_;
  }
  // Box-Muller; u1 is kept away from zero so the log stays finite.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_normal_ = r * std::sin(a);
  have_spare_normal_ = true;
  return r * std::cos(a);
}

}  // namespace tschpg
