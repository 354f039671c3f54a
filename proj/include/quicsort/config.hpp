#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quicsort/integrators.hpp"

namespace quicsort {

enum class Experiment { Converge, Sample, Contract, Stationary, Compare };

std::string experiment_name(Experiment e);
std::optional<Experiment> parse_experiment(const std::string& name);

/// One raw `key = value` setting and where it came from (line 0 = command-line flag).
struct RawSetting {
  std::string value;
  std::string source;
  std::size_t line = 0;
};
using RawSettings = std::map<std::string, RawSetting>;

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  std::string key;
  std::string message;
  std::string source;
  std::size_t line = 0;

  bool is_error() const { return severity == Severity::Error; }
  std::string to_string() const;
};

/// Resolved, typed configuration of one run. Unset optionals take per-experiment defaults.
struct RunConfig {
  Experiment experiment = Experiment::Converge;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out = ".";

  // potential
  std::optional<std::string> dataset;
  int label_col = 0;
  bool standardize = false;
  bool skip_header = false;
  char delimiter = ',';
  std::size_t rows = 200;      // synthetic dataset
  std::size_t features = 4;    // synthetic dataset
  std::uint64_t data_seed = 2024;
  std::size_t dim = 10;        // quadratic experiments
  double curvature = 1.0;

  // solver
  std::optional<double> gamma;  // unset: max(2 sqrt(u M1), 1)
  std::optional<double> u = 1.0;  // unset: 1 / M1
  std::optional<double> h;
  Method method = Method::Quicsort;

  // converge
  std::vector<int> levels{3, 4, 5, 6, 7, 8, 9};
  int fine_level = 14;
  std::size_t paths = 256;
  double horizon = 10.0;

  // contract / stationary
  std::size_t steps = 200;
  std::size_t pairs = 1000;
  std::size_t burn_in = 10000;
  std::size_t kept = 100000;

  // sample / compare / stationary
  std::optional<std::size_t> chains;
  std::vector<std::size_t> checkpoints{0, 20, 40, 80, 160, 320};
  std::size_t w2_subsample = 2048;
  std::size_t ground_truth_samples = 1024;
  std::size_t ground_truth_steps = 4000;
  double ground_truth_h = 0.0125;

  bool uses_dataset() const;
  double step_size() const;
  std::size_t chain_count() const;
  nlohmann::json to_json() const;
};

/// Every key accepted in config files and as --flags.
const std::vector<std::string>& known_keys();

/// Parses `key = value` lines; blank lines and '#' comments are ignored.
RawSettings parse_config_text(const std::string& text, const std::string& source,
                              std::vector<Diagnostic>& diagnostics);

/// Applies `overrides` on top of `base` (flags win over the file).
RawSettings merge_settings(RawSettings base, const RawSettings& overrides);

/// Converts raw settings into a RunConfig, reporting every unparsable or unknown key.
RunConfig resolve_config(Experiment experiment, const RawSettings& settings,
                         std::vector<Diagnostic>& diagnostics);

/// All violations of a resolved config; empty means runnable. Warnings do not block a run.
std::vector<Diagnostic> validate(const RunConfig& config);

}  // namespace quicsort
