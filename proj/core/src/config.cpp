#include "tschpg/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "tschpg/csv.hpp"
#include "tschpg/errors.hpp"

namespace tschpg {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0;
  size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

int64_t parse_int(const std::string& raw, const std::string& where) {
  int64_t value = 0;
  const char* begin = raw.data();
  const char* end = raw.data() + raw.size();
  const std::from_chars_result res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(where + ": '" + raw + "' is not an integer");
  }
  return value;
}

double parse_double(const std::string& raw, const std::string& where) {
  if (raw.empty()) throw ConfigError(where + ": empty number");
  char* end = nullptr;
  const double value = std::strtod(raw.c_str(), &end);
  if (end != raw.c_str() + raw.size()) {
    throw ConfigError(where + ": '" + raw + "' is not a number");
  }
  return value;
}

bool parse_bool(const std::string& raw, const std::string& where) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  throw ConfigError(where + ": '" + raw + "' is not true/false");
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> items;
  size_t start = 0;
  while (start <= raw.size()) {
    const size_t comma = raw.find(',', start);
    const size_t stop = comma == std::string::npos ? raw.size() : comma;
    items.push_back(trim(raw.substr(start, stop - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    line_no += 1;
    const std::string where = "line " + std::to_string(line_no);
    const size_t comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated [section]");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) {
        throw ConfigError(where + ": invalid section name '" + section + "'");
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_name(key)) {
      throw ConfigError(where + ": invalid key name '" + key + "'");
    }
    if (section.empty()) {
      throw ConfigError(where + ": key '" + key + "' appears before any [section]");
    }
    const std::string path = section + "." + key;
    if (map.entries_.count(path)) {
      throw ConfigError(where + ": duplicate key '" + path + "'");
    }
    map.entries_[path] = Entry{value, false};
  }
  return map;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  return parse(read_text_file(path));
}

const ConfigMap::Entry* ConfigMap::find(const std::string& section,
                                        const std::string& key) const {
  const auto it = entries_.find(section + "." + key);
  if (it == entries_.end()) return nullptr;
  it->second.read = true;
  return &it->second;
}

bool ConfigMap::has(const std::string& section, const std::string& key) const {
  return entries_.count(section + "." + key) != 0;
}

std::string ConfigMap::get_string(const std::string& section,
                                  const std::string& key,
                                  const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

int64_t ConfigMap::get_int(const std::string& section, const std::string& key,
                           int64_t fallback) const {
  const Entry* e = find(section, key);
  return e ? parse_int(e->value, section + "." + key) : fallback;
}

double ConfigMap::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  const Entry* e = find(section, key);
  return e ? parse_double(e->value, section + "." + key) : fallback;
}

bool ConfigMap::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
  const Entry* e = find(section, key);
  return e ? parse_bool(e->value, section + "." + key) : fallback;
}

std::vector<int64_t> ConfigMap::get_int_list(const std::string& section,
                                             const std::string& key,
                                             std::vector<int64_t> fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::vector<int64_t> out;
  for (const std::string& item : split_list(e->value)) {
    out.push_back(parse_int(item, section + "." + key));
  }
  return out;
}

std::vector<double> ConfigMap::get_double_list(const std::string& section,
                                               const std::string& key,
                                               std::vector<double> fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const std::string& item : split_list(e->value)) {
    out.push_back(parse_double(item, section + "." + key));
  }
  return out;
}

std::vector<std::string> ConfigMap::get_string_list(
    const std::string& section, const std::string& key,
    std::vector<std::string> fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  return split_list(e->value);
}

std::vector<std::string> ConfigMap::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [path, entry] : entries_) {
    if (!entry.read) out.push_back(path);
  }
  return out;
}

namespace {

std::vector<int> to_int_vector(const std::vector<int64_t>& xs,
                               const std::string& where) {
  std::vector<int> out;
  for (int64_t x : xs) {
    if (x < INT32_MIN || x > INT32_MAX) {
      throw ConfigError(where + ": value out of range");
    }
    out.push_back(static_cast<int>(x));
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
  ExperimentConfig cfg;
  NetworkConfig& net = cfg.scenario.net;
  net.n_nodes = static_cast<int>(map.get_int("network", "n_nodes", net.n_nodes));
  net.n_channels =
      static_cast<int>(map.get_int("network", "n_channels", net.n_channels));
  net.slotframe_len =
      static_cast<int>(map.get_int("network", "slotframe_len", net.slotframe_len));
  net.noise_floor_mw =
      map.get_double("network", "noise_floor_mw", net.noise_floor_mw);
  net.pathloss_exponent =
      map.get_double("network", "pathloss_exponent", net.pathloss_exponent);
  net.reference_gain =
      map.get_double("network", "reference_gain", net.reference_gain);
  net.sinr_threshold =
      map.get_double("network", "sinr_threshold", net.sinr_threshold);
  net.power_levels_mw = map.get_double_list("network", "power_levels_mw",
                                            net.power_levels_mw);

  SimConfig& sim = cfg.scenario.sim;
  sim.traffic_rate = map.get_double("sim", "traffic_rate", sim.traffic_rate);
  sim.queue_capacity =
      static_cast<int>(map.get_int("sim", "queue_capacity", sim.queue_capacity));
  sim.max_hops = static_cast<int>(map.get_int("sim", "max_hops", sim.max_hops));
  sim.area_side_m = map.get_double("sim", "area_side_m", sim.area_side_m);
  sim.rayleigh_fading =
      map.get_bool("sim", "rayleigh_fading", sim.rayleigh_fading);

  cfg.qos_deadline_slots = static_cast<int>(
      map.get_int("qos", "deadline_slots", cfg.qos_deadline_slots));
  cfg.qos_max_drop = map.get_double("qos", "max_drop", cfg.qos_max_drop);
  cfg.qos_max_err = map.get_double("qos", "max_err", cfg.qos_max_err);

  UtilityWeights& w = cfg.scenario.weights;
  w.w_throughput = map.get_double("weights", "w_throughput", w.w_throughput);
  w.w_efficiency = map.get_double("weights", "w_efficiency", w.w_efficiency);

  cfg.scenario.episode_len = static_cast<int>(
      map.get_int("env", "episode_len", cfg.scenario.episode_len));
  cfg.scenario.qos_penalty =
      map.get_double("env", "qos_penalty", cfg.scenario.qos_penalty);

  PpgConfig& tr = cfg.trainer;
  const std::string mode = map.get_string("trainer", "mode", "ppg");
  if (mode == "ppg") {
    tr.mode = PpgConfig::Mode::kPpg;
  } else if (mode == "ppo") {
    tr.mode = PpgConfig::Mode::kPpo;
  } else {
    throw ConfigError("trainer.mode: expected ppg or ppo, got '" + mode + "'");
  }
  tr.clip = map.get_double("trainer", "clip", tr.clip);
  tr.kl_coeff = map.get_double("trainer", "kl_coeff", tr.kl_coeff);
  tr.clone_coeff = map.get_double("trainer", "clone_coeff", tr.clone_coeff);
  tr.discount = map.get_double("trainer", "discount", tr.discount);
  tr.gae_lambda = map.get_double("trainer", "gae_lambda", tr.gae_lambda);
  tr.n_policy_iters = static_cast<int>(
      map.get_int("trainer", "n_policy_iters", tr.n_policy_iters));
  tr.policy_epochs =
      static_cast<int>(map.get_int("trainer", "policy_epochs", tr.policy_epochs));
  tr.value_epochs =
      static_cast<int>(map.get_int("trainer", "value_epochs", tr.value_epochs));
  tr.aux_epochs =
      static_cast<int>(map.get_int("trainer", "aux_epochs", tr.aux_epochs));
  tr.rollout_len =
      static_cast<int>(map.get_int("trainer", "rollout_len", tr.rollout_len));
  tr.minibatch_size =
      static_cast<int>(map.get_int("trainer", "minibatch_size", tr.minibatch_size));
  tr.total_steps = map.get_int("trainer", "total_steps", tr.total_steps);
  tr.learning_rate =
      map.get_double("trainer", "learning_rate", tr.learning_rate);
  tr.hidden_sizes = to_int_vector(
      map.get_int_list("trainer", "hidden_sizes",
                       {tr.hidden_sizes.begin(), tr.hidden_sizes.end()}),
      "trainer.hidden_sizes");

  cfg.node_counts = to_int_vector(
      map.get_int_list("sweep", "node_counts",
                       {cfg.node_counts.begin(), cfg.node_counts.end()}),
      "sweep.node_counts");
  std::vector<int64_t> default_seeds;
  for (uint64_t s : cfg.seeds) default_seeds.push_back(static_cast<int64_t>(s));
  cfg.seeds.clear();
  for (int64_t s : map.get_int_list("sweep", "seeds", default_seeds)) {
    if (s < 0) throw ConfigError("sweep.seeds: seeds must be nonnegative");
    cfg.seeds.push_back(static_cast<uint64_t>(s));
  }
  cfg.algorithms = map.get_string_list("sweep", "algorithms", cfg.algorithms);

  cfg.eval_episodes =
      static_cast<int>(map.get_int("eval", "episodes", cfg.eval_episodes));

  const std::vector<std::string> unread = map.unread_keys();
  if (!unread.empty()) {
    std::string msg = "unknown config keys:";
    for (const std::string& k : unread) msg += " " + k;
    throw ConfigError(msg);
  }

  cfg.scenario.qos = QosSpec::uniform(cfg.scenario.net.n_nodes,
                                      cfg.qos_deadline_slots, cfg.qos_max_drop,
                                      cfg.qos_max_err);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  return from_map(ConfigMap::parse(text));
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_map(ConfigMap::parse_file(path));
}

Scenario ExperimentConfig::scenario_for(int n_nodes) const {
  Scenario s = scenario;
  s.net.n_nodes = n_nodes;
  s.qos = QosSpec::uniform(n_nodes, qos_deadline_slots, qos_max_drop,
                           qos_max_err);
  s.validate();
  return s;
}

void ExperimentConfig::validate() const {
  scenario.validate();
  trainer.validate();
  if (seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
  if (node_counts.empty()) {
    throw ConfigError("sweep.node_counts must not be empty");
  }
  for (int n : node_counts) {
    if (n < 1) throw ConfigError("sweep.node_counts entries must be >= 1");
  }
  if (algorithms.empty()) {
    throw ConfigError("sweep.algorithms must not be empty");
  }
  for (const std::string& a : algorithms) {
    if (a != "ppg" && a != "ppo" && a != "msf" && a != "random" &&
        a != "round_robin") {
      throw ConfigError("unknown algorithm '" + a + "'");
    }
  }
  if (eval_episodes < 1) throw ConfigError("eval.episodes must be >= 1");
}

}  // namespace tschpg
