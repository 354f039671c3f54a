// Command-line driver for the QUICSORT experiments.
//
//   quicsort converge   [--dataset FILE] [--levels 3-9] [--paths 256] ...
//   quicsort sample     [--method quicsort|ubu|euler] [--chains N] ...
//   quicsort compare    QUICSORT at h against UBU at h/2 on equal gradient budgets
//   quicsort contract   coupled-chain contraction on a quadratic potential
//   quicsort stationary long-run moments on a quadratic potential
//
// Every subcommand accepts --config FILE with `key = value` lines; flags win over the file.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "quicsort/config.hpp"
#include "quicsort/harness.hpp"
#include "quicsort/report.hpp"

namespace {

using namespace quicsort;

constexpr int kExitRuntime = 1;
constexpr int kExitInvalidInput = 2;
constexpr int kExitNumerical = 3;

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::unique_ptr<Potential> build_potential(const RunConfig& cfg, std::optional<LogisticDataset>& data) {
  if (cfg.uses_dataset()) {
    if (cfg.dataset) {
      DatasetOptions opts;
      opts.label_column = cfg.label_col;
      opts.delimiter = cfg.delimiter;
      opts.skip_header = cfg.skip_header;
      opts.standardize = cfg.standardize;
      try {
        data = load_dataset(*cfg.dataset, opts);
      } catch (const std::runtime_error& e) {
        throw InvalidInput(e.what());
      }
    } else {
      data = synthetic_logistic_dataset(cfg.rows, cfg.features, cfg.data_seed);
    }
    return std::make_unique<LogisticPotential>(*data);
  }
  return std::make_unique<QuadraticPotential>(QuadraticPotential::isotropic(cfg.dim, cfg.curvature));
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << contents;
}

int run(Experiment experiment, const RawSettings& flags, const std::string& config_path) {
  std::vector<Diagnostic> diagnostics;
  RawSettings settings;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config file '" << config_path << "'\n";
      return kExitInvalidInput;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    settings = parse_config_text(buf.str(), config_path, diagnostics);
  }
  settings = merge_settings(std::move(settings), flags);
  RunConfig cfg = resolve_config(experiment, settings, diagnostics);
  for (auto& d : validate(cfg)) {
    if (settings.count(d.key)) {
      d.source = settings.at(d.key).source;
      d.line = settings.at(d.key).line;
    }
    diagnostics.push_back(std::move(d));
  }
  bool failed = false;
  for (const auto& d : diagnostics) {
    std::cerr << d.to_string() << '\n';
    failed = failed || d.is_error();
  }
  if (failed) return kExitInvalidInput;

  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

  std::optional<LogisticDataset> data;
  const std::unique_ptr<Potential> pot = build_potential(cfg, data);
  const PotentialMeta& meta = pot->meta();
  const double u = cfg.u.value_or(1.0 / meta.M1);
  const double gamma = cfg.gamma.value_or(std::max(2.0 * std::sqrt(u * meta.M1), 1.0));
  const SolverConfig solver(gamma, u);
  const PositionSampler sampler = data ? prior_sampler(*data) : gaussian_sampler(meta.d);

  nlohmann::json doc;
  doc["config"] = cfg.to_json();
  doc["config"]["gamma"] = gamma;
  doc["config"]["u"] = u;
  doc["potential"] = {{"d", meta.d}, {"m", meta.m}, {"M1", meta.M1},
                      {"kind", data ? "logistic" : "quadratic"}};
  std::ostringstream csv;
  const std::string name = experiment_name(experiment);

  switch (experiment) {
    case Experiment::Converge: {
      StrongErrorSettings s;
      s.horizon = cfg.horizon;
      s.paths = cfg.paths;
      s.levels = cfg.levels;
      s.fine_level = cfg.fine_level;
      s.seed = cfg.seed;
      s.threads = cfg.threads;
      const ConvergenceReport report = strong_error_study(solver, *pot, sampler, s);
      write_convergence_csv(csv, report);
      doc["report"] = to_json(report);
      std::cout << std::left << std::setw(10) << "method" << "slope\n";
      for (const auto& mc : report.methods) {
        std::cout << std::setw(10) << method_name(mc.method) << std::fixed << std::setprecision(3)
                  << mc.fit.order() << '\n';
      }
      break;
    }
    case Experiment::Sample:
    case Experiment::Compare: {
      const EmpiricalDistribution truth =
          long_run_ground_truth(solver, *pot, sampler, cfg.ground_truth_samples, cfg.ground_truth_h,
                                cfg.ground_truth_steps, cfg.seed + 1, cfg.threads);
      MixingSettings s;
      s.method = cfg.method;
      s.h = cfg.step_size();
      s.chains = cfg.chain_count();
      s.checkpoints = cfg.checkpoints;
      s.w2_subsample = cfg.w2_subsample;
      s.seed = cfg.seed;
      s.threads = cfg.threads;
      std::vector<MixingReport> reports;
      if (experiment == Experiment::Compare) {
        s.method = Method::Quicsort;
        reports.push_back(mixing_study(solver, *pot, sampler, truth, s));
        s.method = Method::Ubu;
        s.h = cfg.step_size() / 2.0;
        reports.push_back(mixing_study(solver, *pot, sampler, truth, s));
      } else {
        reports.push_back(mixing_study(solver, *pot, sampler, truth, s));
      }
      write_mixing_csv(csv, reports, name);
      doc["report"] = nlohmann::json::array();
      for (const auto& r : reports) doc["report"].push_back(to_json(r));
      std::cout << std::left << std::setw(10) << "method" << std::setw(12) << "grad_evals"
                << std::setw(16) << "energy_dist" << "w2\n";
      for (const auto& r : reports) {
        for (const auto& row : r.rows) {
          std::cout << std::setw(10) << method_name(r.method) << std::setw(12)
                    << row.gradient_evaluations << std::setw(16) << std::setprecision(6)
                    << row.energy_distance << row.wasserstein2 << '\n';
        }
      }
      break;
    }
    case Experiment::Contract: {
      ContractivitySettings s;
      s.h = cfg.step_size();
      s.steps = cfg.steps;
      s.pairs = cfg.pairs;
      s.seed = cfg.seed;
      s.threads = cfg.threads;
      const auto dist = contractivity_study(solver, *pot, s);
      write_contractivity_csv(csv, dist);
      doc["report"] = {{"distances", dist}};
      std::size_t decreasing = 0;
      for (std::size_t n = 1; n < dist.size(); ++n) decreasing += dist[n] < dist[n - 1] ? 1 : 0;
      std::cout << "steps " << dist.size() - 1 << ", strictly decreasing steps " << decreasing
                << ", initial " << dist.front() << ", final " << dist.back() << '\n';
      break;
    }
    case Experiment::Stationary: {
      StationaritySettings s;
      s.h = cfg.step_size();
      s.burn_in = cfg.burn_in;
      s.kept = cfg.kept;
      s.chains = cfg.chain_count();
      s.seed = cfg.seed;
      s.threads = cfg.threads;
      const StationarityReport report = stationarity_study(solver, *pot, sampler, s);
      write_stationarity_csv(csv, report);
      doc["report"] = to_json(report);
      std::cout << "E|v|^2 = " << report.velocity.mean_sq << " (u d = " << u * static_cast<double>(meta.d)
                << ")\nE|x|^2 = " << report.position.mean_sq << "\n|v|_L4 = " << report.velocity.l4
                << '\n';
      break;
    }
  }

  const std::filesystem::path out_dir(cfg.out);
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / (name + ".csv"), csv.str());
  write_file(out_dir / (name + ".json"), doc.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QUICSORT underdamped Langevin integrators and experiments"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help message and exit");

  struct Sub {
    quicsort::Experiment experiment;
    CLI::App* app;
    std::map<std::string, std::string> values;
    std::string config;
    bool standardize = false;
    bool skip_header = false;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  const std::vector<std::pair<quicsort::Experiment, std::string>> commands{
      {quicsort::Experiment::Converge, "strong-convergence study against a fine QUICSORT reference"},
      {quicsort::Experiment::Sample, "MCMC mixing of one method against a ground-truth sample"},
      {quicsort::Experiment::Contract, "contraction of synchronously coupled QUICSORT chains"},
      {quicsort::Experiment::Stationary, "stationary moments of long QUICSORT runs"},
      {quicsort::Experiment::Compare, "QUICSORT at h against UBU at h/2 on equal gradient budgets"}};
  for (const auto& [exp, help] : commands) {
    auto sub = std::make_unique<Sub>();
    sub->experiment = exp;
    sub->app = app.add_subcommand(quicsort::experiment_name(exp), help);
    sub->app->set_help_flag("--help", "print this help message and exit");
    sub->app->add_option("--config", sub->config, "key = value settings file");
    for (const auto& key : quicsort::known_keys()) {
      if (key == "standardize" || key == "skip-header") continue;
      sub->app->add_option("--" + key, sub->values[key])->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
    sub->app->add_flag("--standardize", sub->standardize, "standardize feature columns");
    sub->app->add_flag("--skip-header", sub->skip_header, "skip the first data line");
    subs.push_back(std::move(sub));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalidInput;
  }

  for (const auto& sub : subs) {
    if (!sub->app->parsed()) continue;
    quicsort::RawSettings flags;
    for (const auto& [key, value] : sub->values) {
      if (sub->app->count("--" + key) > 0) flags[key] = {value, "command line", 0};
    }
    if (sub->standardize) flags["standardize"] = {"true", "command line", 0};
    if (sub->skip_header) flags["skip-header"] = {"true", "command line", 0};
    try {
      return run(sub->experiment, flags, sub->config);
    } catch (const quicsort::NumericalFailure& e) {
      std::cerr << "numerical failure: " << e.what() << '\n';
      return kExitNumerical;
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitInvalidInput;
    } catch (const InvalidInput& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitInvalidInput;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitRuntime;
    }
  }
  return kExitRuntime;
}
