#include "glider_assim_cli/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "glider_assim/csv_output.hpp"
#include "glider_assim/experiment_config.hpp"
#include "glider_assim/strategy_sim.hpp"
#include "glider_assim/sweep.hpp"

namespace glider_assim::cli {
namespace {

constexpr const char* kEnvPrefix = "GLIDER_ASSIM_";

struct CommonFlags {
  std::string config;
  std::optional<std::string> obs;
  std::optional<std::string> dt;
  std::optional<std::string> umax;
  std::optional<std::string> noise_var;
  std::optional<std::string> prior_var;
  std::optional<std::string> out;
  bool debug_solver = false;
};

struct RunFlags {
  CommonFlags common;
  std::optional<std::string> flow;
  std::optional<std::string> gliders;
  std::optional<std::string> strategy;
  std::optional<std::string> seed;
};

struct SweepFlags {
  CommonFlags common;
  std::vector<std::string> flows;
  std::vector<int> gliders;
  std::vector<std::string> strategies;
  int seeds = 10;
  int threads = 0;
};

void add_common(CLI::App* app, CommonFlags& flags) {
  app->add_option("--config", flags.config, "JSON config file (flat keys)");
  app->add_option("--obs", flags.obs, "number of observations");
  app->add_option("--dt", flags.dt, "observation interval");
  app->add_option("--umax", flags.umax, "glider speed");
  app->add_option("--noise-var", flags.noise_var, "observation noise variance");
  app->add_option("--prior-var", flags.prior_var, "prior parameter variance");
  app->add_option("--out", flags.out, "output directory");
  app->add_flag("--debug-solver", flags.debug_solver,
                "dump per-window solver diagnostics");
}

std::string env_name(const std::string& key) {
  std::string name = kEnvPrefix;
  for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

/// defaults < config file < environment < flags
ExperimentConfig resolve_common(const CommonFlags& flags,
                                ExperimentConfig config) {
  const char* env_config = std::getenv("GLIDER_ASSIM_CONFIG");
  std::string config_path = flags.config;
  if (config_path.empty() && env_config != nullptr) config_path = env_config;
  if (!config_path.empty()) config = load_config_file(config_path, config);

  for (const std::string& key : config_keys()) {
    if (const char* value = std::getenv(env_name(key).c_str())) {
      try {
        apply_config_value(config, key, value);
      } catch (const ConfigError& e) {
        throw ConfigError(e.field(), std::string(e.what()) + " (from " +
                                         env_name(key) + ")");
      }
    }
  }

  const std::pair<const char*, const std::optional<std::string>*> overrides[] = {
      {"n_obs", &flags.obs},          {"dt", &flags.dt},
      {"u_max", &flags.umax},         {"noise_var", &flags.noise_var},
      {"prior_var", &flags.prior_var}, {"out", &flags.out},
  };
  for (const auto& [key, value] : overrides) {
    if (*value) apply_config_value(config, key, **value);
  }
  if (flags.debug_solver) config.debug_solver = true;
  return config;
}

int do_run(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  config.out_dir = "out";
  try {
    config = resolve_common(flags.common, config);
    const std::pair<const char*, const std::optional<std::string>*> overrides[] = {
        {"flow", &flags.flow},
        {"gliders", &flags.gliders},
        {"strategy", &flags.strategy},
        {"seed", &flags.seed},
    };
    for (const auto& [key, value] : overrides) {
      if (*value) apply_config_value(config, key, **value);
    }
    config.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const RunRecord record = run_experiment(config);
    write_run_outputs(config.out_dir, record);
    std::size_t retries = 0;
    std::size_t fallbacks = 0;
    for (const EventLog& e : record.events) {
      if (e.event.kind == SolverEvent::Kind::regularized_retry) ++retries;
      if (e.event.kind == SolverEvent::Kind::regularization_failed) ++fallbacks;
    }
    out << to_string(config.flow) << " K=" << config.gliders << ' '
        << to_string(config.strategy) << " seed=" << config.seed
        << ": final trace " << format_number(record.final_state.trace())
        << ", rms " << format_number(record.rows.back().rms) << ", "
        << retries << " regularized retries, " << fallbacks
        << " zero-control fallbacks -> " << config.out_dir << '\n';
  } catch (const NumericalAbort& e) {
    err << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

int do_sweep(const SweepFlags& flags, std::ostream& out, std::ostream& err) {
  SweepOptions options;
  try {
    ExperimentConfig base;
    base.out_dir = "sweep_out";
    base = resolve_common(flags.common, base);
    base.validate();
    options.base = base;
    options.out_dir = base.out_dir;
    if (!flags.flows.empty()) {
      options.flows.clear();
      for (const std::string& tag : flags.flows) {
        const auto flow = parse_flow_case(tag);
        if (!flow) throw ConfigError("flow", "unrecognized value '" + tag + "'");
        options.flows.push_back(*flow);
      }
    }
    if (!flags.gliders.empty()) {
      for (int k : flags.gliders) {
        if (k < 1) throw ConfigError("gliders", "cohort size must be >= 1");
      }
      options.cohorts = flags.gliders;
    }
    if (!flags.strategies.empty()) {
      options.strategies.clear();
      for (const std::string& tag : flags.strategies) {
        const auto strategy = parse_strategy(tag);
        if (!strategy) {
          throw ConfigError("strategy", "unrecognized value '" + tag + "'");
        }
        options.strategies.push_back(*strategy);
      }
    }
    if (flags.seeds < 1) throw ConfigError("seeds", "must be >= 1");
    if (flags.threads < 0) throw ConfigError("threads", "must be >= 0");
    options.seeds = flags.seeds;
    options.threads = flags.threads;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::size_t total = sweep_grid(options).size();
  std::size_t next_report = 0;
  options.progress = [&](std::size_t done, std::size_t count) {
    if (done >= next_report || done == count) {
      err << "sweep: " << done << '/' << count << " runs finished\n";
      next_report = done + std::max<std::size_t>(1, count / 10);
    }
  };

  const SweepResult result = run_sweep(options);
  const std::size_t failures = result.failures();
  out << "sweep: " << total << " runs, " << failures << " aborted -> "
      << options.out_dir.string() << '\n';
  for (const SweepRun& run : result.runs) {
    if (!run.ok) err << "aborted " << run_directory_name(run.config) << ": " << run.error << '\n';
  }
  return failures == 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Glider Lagrangian data assimilation simulator"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common(run, run_flags.common);
  run->add_option("--flow", run_flags.flow,
                  "center | unstable-node | saddle | stable-node");
  run->add_option("--gliders", run_flags.gliders, "cohort size K");
  run->add_option("--strategy", run_flags.strategy, "optimal | none | random");
  run->add_option("--seed", run_flags.seed, "master seed");

  SweepFlags sweep_flags;
  CLI::App* sweep = app.add_subcommand("sweep", "run the flow x cohort x strategy x seed grid");
  add_common(sweep, sweep_flags.common);
  sweep->add_option("--flow", sweep_flags.flows, "restrict flows (comma list)")
      ->delimiter(',');
  sweep->add_option("--gliders", sweep_flags.gliders, "restrict cohort sizes (comma list)")
      ->delimiter(',');
  sweep->add_option("--strategy", sweep_flags.strategies, "restrict strategies (comma list)")
      ->delimiter(',');
  sweep->add_option("--seeds", sweep_flags.seeds, "seeds 0..S-1 per cell");
  sweep->add_option("--threads", sweep_flags.threads, "worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (run->parsed()) return do_run(run_flags, out, err);
  return do_sweep(sweep_flags, out, err);
}

}  // namespace glider_assim::cli
