#include "quicsort/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <tuple>

#include "quicsort/metrics.hpp"

namespace quicsort {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
bool parse_integer(const std::string& text, T& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_real(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_bool(const std::string& text, bool& out) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") {
    out = true;
    return true;
  }
  if (text == "0" || text == "false" || text == "no" || text == "off") {
    out = false;
    return true;
  }
  return false;
}

// "3-9", "3:9" or "3,4,5"
template <class T>
bool parse_list(const std::string& text, std::vector<T>& out) {
  out.clear();
  for (char sep : {'-', ':'}) {
    const auto pos = text.find(sep);
    if (pos != std::string::npos && pos > 0) {
      T lo{}, hi{};
      if (!parse_integer(trim(text.substr(0, pos)), lo) || !parse_integer(trim(text.substr(pos + 1)), hi) ||
          hi < lo) {
        return false;
      }
      for (T v = lo; v <= hi; ++v) out.push_back(v);
      return true;
    }
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    T v{};
    if (!parse_integer(trim(item), v)) return false;
    out.push_back(v);
  }
  return !out.empty();
}

Diagnostic make_error(const std::string& key, const std::string& message, const RawSetting* at) {
  Diagnostic d;
  d.key = key;
  d.message = message;
  if (at) {
    d.source = at->source;
    d.line = at->line;
  }
  return d;
}

}  // namespace

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Converge: return "converge";
    case Experiment::Sample: return "sample";
    case Experiment::Contract: return "contract";
    case Experiment::Stationary: return "stationary";
    case Experiment::Compare: return "compare";
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(const std::string& name) {
  for (auto e : {Experiment::Converge, Experiment::Sample, Experiment::Contract,
                 Experiment::Stationary, Experiment::Compare}) {
    if (experiment_name(e) == name) return e;
  }
  return std::nullopt;
}

std::string Diagnostic::to_string() const {
  std::string where;
  if (!source.empty()) where = source + (line > 0 ? ":" + std::to_string(line) : "") + ": ";
  const char* sev = severity == Severity::Error ? "error" : "warning";
  return where + sev + ": " + (key.empty() ? "" : key + ": ") + message;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "seed",       "threads",   "out",         "dataset",   "label-col",
      "standardize", "skip-header", "delimiter", "rows",      "features",
      "data-seed",  "dim",       "curvature",   "gamma",     "u",
      "h",          "method",    "levels",      "fine-level", "paths",
      "horizon",    "steps",     "pairs",       "burn-in",   "kept",
      "chains",     "checkpoints", "w2-subsample", "ground-truth-samples",
      "ground-truth-steps", "ground-truth-h"};
  return keys;
}

bool RunConfig::uses_dataset() const {
  return experiment == Experiment::Converge || experiment == Experiment::Sample ||
         experiment == Experiment::Compare;
}

double RunConfig::step_size() const {
  if (h) return *h;
  switch (experiment) {
    case Experiment::Contract:
    case Experiment::Stationary: return 0.05;
    case Experiment::Sample:
    case Experiment::Compare: return 0.2;
    case Experiment::Converge: return horizon / static_cast<double>(std::size_t{1} << fine_level);
  }
  return 0.05;
}

std::size_t RunConfig::chain_count() const {
  if (chains) return *chains;
  return experiment == Experiment::Stationary ? 64 : 1024;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j{{"experiment", experiment_name(experiment)},
                   {"seed", seed},
                   {"threads", threads},
                   {"out", out},
                   {"method", method_name(method)}};
  if (gamma) j["gamma"] = *gamma;
  if (u) j["u"] = *u;
  j["h"] = step_size();
  if (uses_dataset()) {
    if (dataset) {
      j["dataset"] = *dataset;
      j["label-col"] = label_col;
      j["standardize"] = standardize;
      j["skip-header"] = skip_header;
      j["delimiter"] = std::string(1, delimiter);
    } else {
      j["synthetic"] = {{"rows", rows}, {"features", features}, {"data-seed", data_seed}};
    }
  } else {
    j["dim"] = dim;
    j["curvature"] = curvature;
  }
  switch (experiment) {
    case Experiment::Converge:
      j["levels"] = levels;
      j["fine-level"] = fine_level;
      j["paths"] = paths;
      j["horizon"] = horizon;
      break;
    case Experiment::Contract:
      j["steps"] = steps;
      j["pairs"] = pairs;
      break;
    case Experiment::Stationary:
      j["burn-in"] = burn_in;
      j["kept"] = kept;
      j["chains"] = chain_count();
      break;
    case Experiment::Sample:
    case Experiment::Compare:
      j["chains"] = chain_count();
      j["checkpoints"] = checkpoints;
      j["w2-subsample"] = w2_subsample;
      j["ground-truth-samples"] = ground_truth_samples;
      j["ground-truth-steps"] = ground_truth_steps;
      j["ground-truth-h"] = ground_truth_h;
      break;
  }
  return j;
}

RawSettings parse_config_text(const std::string& text, const std::string& source,
                              std::vector<Diagnostic>& diagnostics) {
  RawSettings out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    RawSetting at{"", source, line_no};
    if (eq == std::string::npos) {
      diagnostics.push_back(make_error("", "expected 'key = value'", &at));
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    at.value = trim(line.substr(eq + 1));
    if (key.empty()) {
      diagnostics.push_back(make_error("", "missing key before '='", &at));
      continue;
    }
    out[key] = at;
  }
  return out;
}

RawSettings merge_settings(RawSettings base, const RawSettings& overrides) {
  for (const auto& [k, v] : overrides) base[k] = v;
  return base;
}

RunConfig resolve_config(Experiment experiment, const RawSettings& settings,
                         std::vector<Diagnostic>& diagnostics) {
  RunConfig cfg;
  cfg.experiment = experiment;
  const std::size_t first_diagnostic = diagnostics.size();
  if (experiment == Experiment::Contract || experiment == Experiment::Stationary) cfg.gamma = 2.0;
  if (experiment == Experiment::Converge) {
    cfg.gamma = 1.0;
    cfg.u.reset();
  }

  const auto& keys = known_keys();
  for (const auto& [key, raw] : settings) {
    const std::string& v = raw.value;
    auto bad = [&](const std::string& what) {
      diagnostics.push_back(make_error(key, "cannot parse '" + v + "' as " + what, &raw));
    };
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      diagnostics.push_back(make_error(key, "unknown setting", &raw));
      continue;
    }
    double real = 0.0;
    std::size_t count = 0;
    bool flag = false;
    if (key == "seed") {
      if (!parse_integer(v, cfg.seed)) bad("an unsigned 64-bit integer");
    } else if (key == "threads") {
      if (!parse_integer(v, cfg.threads)) bad("an integer");
    } else if (key == "out") {
      cfg.out = v;
    } else if (key == "dataset") {
      cfg.dataset = v;
    } else if (key == "label-col") {
      if (!parse_integer(v, cfg.label_col)) bad("an integer");
    } else if (key == "standardize") {
      if (!parse_bool(v, flag)) bad("a boolean"); else cfg.standardize = flag;
    } else if (key == "skip-header") {
      if (!parse_bool(v, flag)) bad("a boolean"); else cfg.skip_header = flag;
    } else if (key == "delimiter") {
      if (v == "comma" || v == ",") cfg.delimiter = ',';
      else if (v == "whitespace" || v == "space") cfg.delimiter = ' ';
      else if (v == "tab") cfg.delimiter = '\t';
      else if (v == "semicolon" || v == ";") cfg.delimiter = ';';
      else bad("a delimiter (comma, whitespace, tab, semicolon)");
    } else if (key == "rows") {
      if (!parse_integer(v, cfg.rows)) bad("a count");
    } else if (key == "features") {
      if (!parse_integer(v, cfg.features)) bad("a count");
    } else if (key == "data-seed") {
      if (!parse_integer(v, cfg.data_seed)) bad("an unsigned 64-bit integer");
    } else if (key == "dim") {
      if (!parse_integer(v, cfg.dim)) bad("a count");
    } else if (key == "curvature") {
      if (!parse_real(v, cfg.curvature)) bad("a number");
    } else if (key == "gamma") {
      if (v == "auto") cfg.gamma.reset();
      else if (!parse_real(v, real)) bad("a number or 'auto'");
      else cfg.gamma = real;
    } else if (key == "u") {
      if (v == "auto") cfg.u.reset();
      else if (!parse_real(v, real)) bad("a number or 'auto'");
      else cfg.u = real;
    } else if (key == "h") {
      if (!parse_real(v, real)) bad("a number"); else cfg.h = real;
    } else if (key == "method") {
      try {
        cfg.method = parse_method(v);
      } catch (const std::invalid_argument&) {
        bad("a method (quicsort, ubu, euler)");
      }
    } else if (key == "levels") {
      if (!parse_list(v, cfg.levels)) bad("a level list such as 3-9 or 3,4,5");
    } else if (key == "fine-level") {
      if (!parse_integer(v, cfg.fine_level)) bad("an integer");
    } else if (key == "paths") {
      if (!parse_integer(v, cfg.paths)) bad("a count");
    } else if (key == "horizon") {
      if (!parse_real(v, cfg.horizon)) bad("a number");
    } else if (key == "steps") {
      if (!parse_integer(v, cfg.steps)) bad("a count");
    } else if (key == "pairs") {
      if (!parse_integer(v, cfg.pairs)) bad("a count");
    } else if (key == "burn-in") {
      if (!parse_integer(v, cfg.burn_in)) bad("a count");
    } else if (key == "kept") {
      if (!parse_integer(v, cfg.kept)) bad("a count");
    } else if (key == "chains") {
      if (!parse_integer(v, count)) bad("a count"); else cfg.chains = count;
    } else if (key == "checkpoints") {
      if (!parse_list(v, cfg.checkpoints)) bad("a list of gradient-evaluation budgets");
    } else if (key == "w2-subsample") {
      if (!parse_integer(v, cfg.w2_subsample)) bad("a count");
    } else if (key == "ground-truth-samples") {
      if (!parse_integer(v, cfg.ground_truth_samples)) bad("a count");
    } else if (key == "ground-truth-steps") {
      if (!parse_integer(v, cfg.ground_truth_steps)) bad("a count");
    } else if (key == "ground-truth-h") {
      if (!parse_real(v, cfg.ground_truth_h)) bad("a number");
    }
  }
  // report in file order rather than key order
  std::stable_sort(diagnostics.begin() + static_cast<std::ptrdiff_t>(first_diagnostic), diagnostics.end(),
                   [](const Diagnostic& a, const Diagnostic& b) {
                     return std::tie(a.source, a.line) < std::tie(b.source, b.line);
                   });
  return cfg;
}

std::vector<Diagnostic> validate(const RunConfig& c) {
  std::vector<Diagnostic> out;
  auto error = [&](const std::string& key, const std::string& msg) {
    out.push_back(Diagnostic{Diagnostic::Severity::Error, key, msg, "", 0});
  };
  auto warning = [&](const std::string& key, const std::string& msg) {
    out.push_back(Diagnostic{Diagnostic::Severity::Warning, key, msg, "", 0});
  };

  if (c.h && !(*c.h > 0.0)) error("h", "step size must be positive");
  if (c.gamma && !(*c.gamma > 0.0)) error("gamma", "friction gamma must be positive");
  if (c.u && !(*c.u > 0.0)) error("u", "u must be positive");
  if (c.threads < 0) error("threads", "thread count must be nonnegative");

  if (c.uses_dataset()) {
    if (c.dataset) {
      if (!std::filesystem::exists(*c.dataset)) error("dataset", "dataset file '" + *c.dataset + "' does not exist");
    } else {
      if (c.rows == 0) error("rows", "synthetic dataset needs at least one row");
      if (c.features == 0) error("features", "synthetic dataset needs at least one feature");
    }
  } else {
    if (c.dim == 0) error("dim", "dimension must be at least 1");
    if (!(c.curvature > 0.0)) error("curvature", "curvature must be positive");
  }

  switch (c.experiment) {
    case Experiment::Converge: {
      if (!(c.horizon > 0.0)) error("horizon", "time horizon must be positive");
      if (c.paths < 2) error("paths", "need at least 2 Brownian paths");
      if (c.levels.size() < 3) error("levels", "need at least 3 levels to fit an order");
      const bool increasing = std::adjacent_find(c.levels.begin(), c.levels.end(),
                                                 [](int a, int b) { return b <= a; }) == c.levels.end();
      if (!increasing) error("levels", "levels must be strictly increasing");
      if (!c.levels.empty() && c.levels.front() < 0) error("levels", "levels must be nonnegative");
      if (c.fine_level >= BrownianTree::kMaxLevel) error("fine-level", "fine level too large");
      if (!c.levels.empty() && c.levels.back() >= c.fine_level) {
        error("fine-level", "fine level must be finer than every coarse level");
      }
      break;
    }
    case Experiment::Contract: {
      if (c.pairs == 0) error("pairs", "need at least one coupled pair");
      const double gamma = c.gamma.value_or(2.0);
      const double m1 = c.curvature;
      const double u = c.u.value_or(1.0 / m1);
      if (gamma > 0.0 && u > 0.0 && gamma < 2.0 * std::sqrt(u * m1)) {
        warning("gamma", "gamma = " + std::to_string(gamma) +
                             " is below 2 sqrt(u M1) = " + std::to_string(2.0 * std::sqrt(u * m1)) +
                             "; the contractivity precondition gamma >= 2 sqrt(u M1) does not hold");
      }
      if (gamma > 0.0 && c.step_size() > 0.1 / gamma * (1.0 + 1e-12)) {
        error("h", "contraction experiment requires h <= 0.1 / gamma");
      }
      break;
    }
    case Experiment::Stationary:
      if (c.chain_count() == 0) error("chains", "need at least one chain");
      if (c.kept == 0) error("kept", "need at least one kept step");
      break;
    case Experiment::Sample:
    case Experiment::Compare:
      if (c.chain_count() == 0) error("chains", "need at least one chain");
      if (c.checkpoints.empty()) error("checkpoints", "need at least one checkpoint");
      if (!std::is_sorted(c.checkpoints.begin(), c.checkpoints.end())) {
        error("checkpoints", "checkpoints must be nondecreasing");
      }
      if (c.ground_truth_samples == 0) error("ground-truth-samples", "need ground-truth samples");
      if (!(c.ground_truth_h > 0.0)) error("ground-truth-h", "ground-truth step size must be positive");
      if (c.w2_subsample == 0 || c.w2_subsample > kMaxAssignmentSize) {
        error("w2-subsample", "subsample size must be in [1, " + std::to_string(kMaxAssignmentSize) + "]");
      }
      break;
  }
  return out;
}

}  // namespace quicsort
