#include "tschpg/bandit.hpp"

#include "tschpg/errors.hpp"
#include "tschpg/rng.hpp"

namespace tschpg {

BanditEnv::BanditEnv(uint64_t seed)
    : better_arm_(static_cast<int>(hash_key(seed, 0xba4d17ULL) & 1)) {}

std::vector<double> BanditEnv::reset() {
  done_ = false;
  return {1.0};
}

EnvStep BanditEnv::step(std::span<const int> action) {
  if (done_) throw LifecycleError("episode finished; call reset() first");
  if (action.size() != 1) throw ActionError("bandit expects a single arm index");
  if (action[0] < 0 || action[0] > 1) throw ActionError("arm index out of range");
  EnvStep result;
  result.reward = action[0] == better_arm_ ? 1.0 : 0.0;
  result.utility_value = result.reward;
  result.done = true;
  result.observation = {1.0};
  done_ = true;
  return result;
}

}  // namespace tschpg
