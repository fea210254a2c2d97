#ifndef TSCHPG_SELFTEST_HPP
#define TSCHPG_SELFTEST_HPP

#include <string>
#include <vector>

namespace tschpg {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // worst observed error vs. tolerance, counts, etc.
};

// Fast verification suites, each deterministic and self-seeded.  They check
// implementation outputs against independent oracles: closed-form
// identities, central finite differences, and a direct O(T^2) advantage sum.
CheckResult check_equation_identities();
CheckResult check_gradient_suite();
CheckResult check_gae_oracle();
CheckResult check_constraint_safety();
CheckResult check_sim_conservation();

// All of the above, in order.
std::vector<CheckResult> run_selftests();

}  // namespace tschpg

#endif  // TSCHPG_SELFTEST_HPP
