#ifndef TSCHPG_CONFIG_HPP
#define TSCHPG_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tschpg/env.hpp"
#include "tschpg/ppg.hpp"

namespace tschpg {

// Plain-text hierarchical key-value configuration.  Grammar:
//
//   # comment to end of line
//   [section]          sections group keys; required before any key
//   key = value        scalars: integer, decimal, true/false, word
//   key = a, b, c      lists: comma-separated scalars
//
// Whitespace around tokens is ignored; keys are unique per section.  Every
// key must be consumed by the reader, so unknown (misspelled) keys fail
// loudly instead of silently using a default.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text);       // throws ConfigError
  static ConfigMap parse_file(const std::string& path);  // IoError/ConfigError

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  int64_t get_int(const std::string& section, const std::string& key,
                  int64_t fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<int64_t> get_int_list(const std::string& section,
                                    const std::string& key,
                                    std::vector<int64_t> fallback) const;
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key,
                                      std::vector<double> fallback) const;
  std::vector<std::string> get_string_list(
      const std::string& section, const std::string& key,
      std::vector<std::string> fallback) const;

  // Keys never read by any get_*; nonempty means the file holds entries the
  // program does not understand.
  std::vector<std::string> unread_keys() const;

 private:
  struct Entry {
    std::string value;
    mutable bool read = false;
  };
  const Entry* find(const std::string& section, const std::string& key) const;

  std::map<std::string, Entry> entries_;  // "section.key" -> value
};

// One experiment, fully determined by a config file: the scenario, the
// trainer settings, and the sweep axes.  QoS bounds are uniform across
// nodes so the same file can drive node-count sweeps.
struct ExperimentConfig {
  Scenario scenario;                   // at the base node count
  PpgConfig trainer;
  int qos_deadline_slots = 64;
  double qos_max_drop = 0.25;
  double qos_max_err = 0.5;
  std::vector<int> node_counts = {5, 10, 15};
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<std::string> algorithms = {"ppg", "ppo", "msf", "random",
                                         "round_robin"};
  int eval_episodes = 20;

  static ExperimentConfig from_map(const ConfigMap& map);
  static ExperimentConfig from_string(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);

  // The scenario resized to a sweep point, QoS rebuilt from the uniform
  // bounds.
  Scenario scenario_for(int n_nodes) const;

  void validate() const;  // throws ConfigError
};

}  // namespace tschpg

#endif  // TSCHPG_CONFIG_HPP
