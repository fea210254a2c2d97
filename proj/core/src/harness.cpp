#include "tschpg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <utility>

#include "tschpg/baselines.hpp"
#include "tschpg/csv.hpp"
#include "tschpg/errors.hpp"
#include "tschpg/svg.hpp"

namespace tschpg {

double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) throw InputError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("percentile p must lie in [0,1]");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

void offset_seeds(ExperimentConfig& config, uint64_t offset) {
  for (uint64_t& s : config.seeds) s += offset;
}

uint64_t eval_seed(uint64_t run_seed) { return hash_key(run_seed, 0x5eedULL); }

namespace {

bool is_learner(const std::string& algorithm) {
  return algorithm == "ppg" || algorithm == "ppo";
}

EnvFactory factory_for(const Scenario& scenario) {
  return [scenario](uint64_t seed) {
    return std::make_unique<TschEnv>(scenario, seed);
  };
}

void ensure_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " +
                        ec.message());
}

std::string join(const std::string& out_dir, const std::string& name) {
  return (std::filesystem::path(out_dir) / name).string();
}

WarnSink log_warnings(std::ostream& log) {
  return [&log](const std::string& msg) { log << "warning: " << msg << "\n"; };
}

}  // namespace

TrainReport train_algorithm(const ExperimentConfig& config,
                            const Scenario& scenario,
                            const std::string& algorithm, uint64_t seed) {
  if (!is_learner(algorithm)) {
    throw ConfigError("'" + algorithm + "' is not a trainable algorithm");
  }
  PpgConfig trainer = config.trainer;
  trainer.mode =
      algorithm == "ppg" ? PpgConfig::Mode::kPpg : PpgConfig::Mode::kPpo;
  return train(factory_for(scenario), trainer, seed);
}

EvalSummary evaluate_algorithm(const ExperimentConfig& config,
                               const Scenario& scenario,
                               const std::string& algorithm, uint64_t seed,
                               std::ostream& log) {
  if (is_learner(algorithm)) {
    const TrainReport report =
        train_algorithm(config, scenario, algorithm, seed);
    return evaluate(report.checkpoint, factory_for(scenario),
                    config.eval_episodes, eval_seed(seed));
  }
  const std::unique_ptr<Scheduler> scheduler =
      make_scheduler(algorithm, log_warnings(log));
  return evaluate_scheduler(*scheduler, scenario, config.eval_episodes,
                            eval_seed(seed));
}

void run_convergence(const ExperimentConfig& config, const std::string& out_dir,
                     std::ostream& log) {
  std::vector<std::string> learners;
  for (const std::string& a : config.algorithms) {
    if (is_learner(a)) learners.push_back(a);
  }
  if (learners.empty()) {
    throw ConfigError(
        "convergence needs at least one learner (ppg or ppo) in "
        "sweep.algorithms");
  }
  ensure_dir(out_dir);

  CsvTable combined({"algorithm", "seed", "iteration", "env_steps",
                     "mean_reward", "policy_loss", "value_loss", "aux_loss",
                     "kl", "clip_fraction"});
  // reward curves per algorithm: rows[iteration][seed]
  std::map<std::string, std::vector<std::vector<double>>> curves;
  std::map<std::string, std::vector<int64_t>> curve_steps;

  for (const std::string& algorithm : learners) {
    for (const uint64_t seed : config.seeds) {
      log << "convergence: training " << algorithm << " seed " << seed << "\n";
      const TrainReport report =
          train_algorithm(config, config.scenario, algorithm, seed);
      const std::string tag =
          algorithm + "_seed" + std::to_string(seed);
      write_text_file(join(out_dir, "curve_" + tag + ".csv"),
                      train_report_csv(report));
      save_checkpoint(join(out_dir, "checkpoint_" + tag + ".txt"),
                      report.checkpoint);
      auto& curve = curves[algorithm];
      auto& steps = curve_steps[algorithm];
      if (curve.empty()) {
        curve.resize(report.rows.size());
        for (const IterationRow& row : report.rows) {
          steps.push_back(row.env_steps);
        }
      }
      if (curve.size() != report.rows.size()) {
        throw ModelError("iteration counts differ across seeds");
      }
      for (size_t i = 0; i < report.rows.size(); ++i) {
        const IterationRow& row = report.rows[i];
        curve[i].push_back(row.mean_reward);
        combined.add_row({algorithm, format_int(static_cast<int64_t>(seed)),
                          format_int(row.iteration), format_int(row.env_steps),
                          format_double(row.mean_reward),
                          format_double(row.losses.policy_loss),
                          format_double(row.losses.value_loss),
                          format_double(row.losses.aux_loss),
                          format_double(row.losses.kl),
                          format_double(row.losses.clip_fraction)});
      }
    }
  }
  write_text_file(join(out_dir, "convergence.csv"), combined.to_string());

  CsvTable summary({"algorithm", "iteration", "env_steps", "median_reward",
                    "p25_reward", "p75_reward"});
  std::vector<Series> series;
  for (const std::string& algorithm : learners) {
    Series s;
    s.label = algorithm;
    const auto& curve = curves[algorithm];
    const auto& steps = curve_steps[algorithm];
    for (size_t i = 0; i < curve.size(); ++i) {
      const double median = percentile(curve[i], 0.5);
      summary.add_row({algorithm, format_int(static_cast<int64_t>(i) + 1),
                       format_int(steps[i]), format_double(median),
                       format_double(percentile(curve[i], 0.25)),
                       format_double(percentile(curve[i], 0.75))});
      s.x.push_back(static_cast<double>(steps[i]));
      s.y.push_back(median);
    }
    if (!s.x.empty()) series.push_back(std::move(s));
  }
  write_text_file(join(out_dir, "convergence_summary.csv"), summary.to_string());
  if (!series.empty()) {
    PlotSpec spec;
    spec.title = "Training reward";
    spec.x_label = "environment steps";
    spec.y_label = "median rollout reward";
    spec.source_csv = "convergence_summary.csv";
    write_text_file(join(out_dir, "convergence.svg"),
                    render_line_chart(series, spec));
  }
  log << "convergence: wrote " << join(out_dir, "convergence.csv") << "\n";
}

void run_scaling(const ExperimentConfig& config, const std::string& out_dir,
                 std::ostream& log) {
  ensure_dir(out_dir);
  CsvTable table({"algorithm", "n_nodes", "seed", "mean_throughput", "ci_lo",
                  "ci_hi", "mean_utility", "violations"});
  // per (algorithm, n_nodes): per-seed evaluation means
  std::map<std::string, std::map<int, std::vector<double>>> th_samples;
  std::map<std::string, std::map<int, std::vector<double>>> util_samples;

  for (const int n_nodes : config.node_counts) {
    const Scenario scenario = config.scenario_for(n_nodes);
    for (const std::string& algorithm : config.algorithms) {
      for (const uint64_t seed : config.seeds) {
        log << "scaling: " << algorithm << " N=" << n_nodes << " seed " << seed
            << "\n";
        const EvalSummary summary =
            evaluate_algorithm(config, scenario, algorithm, seed, log);
        const double half_width =
            1.96 * summary.std_throughput /
            std::sqrt(static_cast<double>(summary.n_episodes));
        table.add_row({algorithm, format_int(n_nodes),
                       format_int(static_cast<int64_t>(seed)),
                       format_double(summary.mean_throughput),
                       format_double(summary.mean_throughput - half_width),
                       format_double(summary.mean_throughput + half_width),
                       format_double(summary.mean_utility),
                       format_double(summary.mean_violations)});
        th_samples[algorithm][n_nodes].push_back(summary.mean_throughput);
        util_samples[algorithm][n_nodes].push_back(summary.mean_utility);
      }
    }
  }
  write_text_file(join(out_dir, "scaling.csv"), table.to_string());

  CsvTable summary({"algorithm", "n_nodes", "median_throughput",
                    "p25_throughput", "p75_throughput", "median_utility"});
  std::vector<Series> series;
  for (const std::string& algorithm : config.algorithms) {
    Series s;
    s.label = algorithm;
    for (const int n_nodes : config.node_counts) {
      const auto& th = th_samples[algorithm][n_nodes];
      const double median = percentile(th, 0.5);
      summary.add_row({algorithm, format_int(n_nodes), format_double(median),
                       format_double(percentile(th, 0.25)),
                       format_double(percentile(th, 0.75)),
                       format_double(
                           percentile(util_samples[algorithm][n_nodes], 0.5))});
      s.x.push_back(static_cast<double>(n_nodes));
      s.y.push_back(median);
    }
    series.push_back(std::move(s));
  }
  write_text_file(join(out_dir, "scaling_summary.csv"), summary.to_string());
  PlotSpec spec;
  spec.title = "Evaluated throughput vs. network size";
  spec.x_label = "number of nodes";
  spec.y_label = "median throughput";
  spec.source_csv = "scaling_summary.csv";
  write_text_file(join(out_dir, "scaling.svg"), render_line_chart(series, spec));
  log << "scaling: wrote " << join(out_dir, "scaling.csv") << "\n";
}

namespace {

class TraceWriter {
 public:
  TraceWriter()
      : table_({"slot", "node", "channel", "power_mw", "sinr", "outcome"}) {}

  TraceSink sink() {
    return [this](const TraceEvent& e) {
      table_.add_row({format_int(e.slot), format_int(e.node),
                      format_int(e.channel), format_double(e.power_mw),
                      format_double(e.sinr), e.success ? "ok" : "err"});
    };
  }

  void save(const std::string& path) const {
    write_text_file(path, table_.to_string());
  }

 private:
  CsvTable table_;
};

}  // namespace

void run_evaluate(const ExperimentConfig& config,
                  const EvaluateOptions& options, const std::string& out_dir,
                  std::ostream& log) {
  const bool have_checkpoint = !options.checkpoint_path.empty();
  const bool have_algorithm = !options.algorithm.empty();
  if (have_checkpoint == have_algorithm) {
    throw ConfigError("evaluate needs exactly one of --checkpoint/--algorithm");
  }
  const int episodes =
      options.episodes > 0 ? options.episodes : config.eval_episodes;
  const uint64_t seed = config.seeds.front();
  ensure_dir(out_dir);

  TraceWriter trace;
  const bool want_trace = !options.trace_path.empty();

  EvalSummary summary;
  std::string label;
  if (have_checkpoint) {
    label = options.checkpoint_path;
    const Checkpoint checkpoint = load_checkpoint(options.checkpoint_path);
    const Scenario scenario = config.scenario;
    auto factory = [&](uint64_t s) {
      auto env = std::make_unique<TschEnv>(scenario, s);
      if (want_trace) env->set_trace_sink(trace.sink());
      return env;
    };
    summary = evaluate(checkpoint, factory, episodes, eval_seed(seed));
  } else {
    label = options.algorithm;
    if (is_learner(options.algorithm)) {
      log << "evaluate: training " << options.algorithm << " seed " << seed
          << "\n";
      const TrainReport report =
          train_algorithm(config, config.scenario, options.algorithm, seed);
      save_checkpoint(join(out_dir, "checkpoint_" + options.algorithm +
                                        "_seed" + std::to_string(seed) +
                                        ".txt"),
                      report.checkpoint);
      auto factory = [&](uint64_t s) {
        auto env = std::make_unique<TschEnv>(config.scenario, s);
        if (want_trace) env->set_trace_sink(trace.sink());
        return env;
      };
      summary = evaluate(report.checkpoint, factory, episodes, eval_seed(seed));
    } else {
      const std::unique_ptr<Scheduler> scheduler =
          make_scheduler(options.algorithm, log_warnings(log));
      summary = evaluate_scheduler(*scheduler, config.scenario, episodes,
                                   eval_seed(seed),
                                   want_trace ? trace.sink() : TraceSink{});
    }
  }

  CsvTable episodes_table({"episode", "utility", "throughput"});
  for (size_t i = 0; i < summary.episode_utility.size(); ++i) {
    episodes_table.add_row({format_int(static_cast<int64_t>(i)),
                            format_double(summary.episode_utility[i]),
                            format_double(summary.episode_throughput[i])});
  }
  write_text_file(join(out_dir, "evaluation.csv"), episodes_table.to_string());

  CsvTable stats({"metric", "mean", "stddev"});
  stats.add_row({"utility", format_double(summary.mean_utility),
                 format_double(summary.std_utility)});
  stats.add_row({"throughput", format_double(summary.mean_throughput),
                 format_double(summary.std_throughput)});
  stats.add_row({"efficiency", format_double(summary.mean_efficiency),
                 format_double(summary.std_efficiency)});
  stats.add_row({"violations", format_double(summary.mean_violations),
                 format_double(summary.std_violations)});
  stats.add_row({"reward", format_double(summary.mean_reward),
                 format_double(summary.std_reward)});
  write_text_file(join(out_dir, "evaluation_summary.csv"), stats.to_string());

  if (want_trace) {
    // Relative trace paths land next to the other outputs.
    const std::filesystem::path p(options.trace_path);
    trace.save(p.is_absolute() ? options.trace_path
                               : join(out_dir, options.trace_path));
  }

  log << "evaluate " << label << ": utility " << summary.mean_utility
      << " +- " << summary.std_utility << ", throughput "
      << summary.mean_throughput << " +- " << summary.std_throughput
      << " over " << summary.n_episodes << " episodes\n";
}

}  // namespace tschpg
