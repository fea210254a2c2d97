#ifndef TSCHPG_BANDIT_HPP
#define TSCHPG_BANDIT_HPP

#include <cstdint>

#include "tschpg/env.hpp"

namespace tschpg {

// Two-armed bandit with deterministic payout (1 for the better arm, 0 for
// the other) and one-step episodes.  The better arm is derived from the
// seed.  Used as a minimal sanity environment for the trainer.
class BanditEnv : public Env {
 public:
  explicit BanditEnv(uint64_t seed);

  int observation_dim() const override { return 1; }
  const std::vector<int>& action_head_sizes() const override { return head_sizes_; }
  std::vector<double> reset() override;
  EnvStep step(std::span<const int> action) override;

  int better_arm() const { return better_arm_; }

 private:
  std::vector<int> head_sizes_{2};
  int better_arm_ = 0;
  bool done_ = true;
};

}  // namespace tschpg

#endif  // TSCHPG_BANDIT_HPP
