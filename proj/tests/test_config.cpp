#include <doctest.h>

#include "quicsort/config.hpp"

using namespace quicsort;

namespace {

bool has(const std::vector<Diagnostic>& diags, const std::string& key, bool error) {
  for (const auto& d : diags)
    if (d.key == key && d.is_error() == error) return true;
  return false;
}

}  // namespace

TEST_CASE("experiment names round-trip") {
  for (auto e : {Experiment::Converge, Experiment::Sample, Experiment::Contract, Experiment::Stationary,
                 Experiment::Compare}) {
    CHECK(parse_experiment(experiment_name(e)) == e);
  }
  CHECK_FALSE(parse_experiment("bogus").has_value());
}

TEST_CASE("defaults resolve and validate cleanly") {
  for (auto e : {Experiment::Converge, Experiment::Sample, Experiment::Contract, Experiment::Stationary,
                 Experiment::Compare}) {
    std::vector<Diagnostic> diags;
    const RunConfig cfg = resolve_config(e, {}, diags);
    CHECK(diags.empty());
    CHECK(validate(cfg).empty());
  }
  std::vector<Diagnostic> diags;
  const auto conv = resolve_config(Experiment::Converge, {}, diags);
  CHECK(conv.gamma == 1.0);
  CHECK_FALSE(conv.u.has_value());
  CHECK(conv.levels == std::vector<int>{3, 4, 5, 6, 7, 8, 9});
  CHECK(conv.paths == 256);
  CHECK(conv.fine_level == 14);
  const auto stat = resolve_config(Experiment::Stationary, {}, diags);
  CHECK(stat.gamma == 2.0);
  CHECK(stat.step_size() == 0.05);
  CHECK(stat.chain_count() == 64);
  const auto samp = resolve_config(Experiment::Sample, {}, diags);
  CHECK_FALSE(samp.gamma.has_value());
  CHECK(samp.u == 1.0);
}

TEST_CASE("config text parsing carries line numbers") {
  std::vector<Diagnostic> diags;
  const auto raw = parse_config_text("# comment\n\nseed = 7\nlevels = 3:6  # trailing\nbroken line\n", "run.cfg", diags);
  REQUIRE(raw.count("seed"));
  CHECK(raw.at("seed").value == "7");
  CHECK(raw.at("seed").line == 3);
  CHECK(raw.at("levels").value == "3:6");
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].line == 5);
  CHECK(diags[0].to_string().rfind("run.cfg:5: error:", 0) == 0);
}

TEST_CASE("flags override the config file") {
  std::vector<Diagnostic> diags;
  auto file = parse_config_text("seed = 1\npaths = 8\n", "a.cfg", diags);
  RawSettings flags{{"seed", {"5", "command line", 0}}};
  const auto merged = merge_settings(file, flags);
  const auto cfg = resolve_config(Experiment::Converge, merged, diags);
  CHECK(diags.empty());
  CHECK(cfg.seed == 5);
  CHECK(cfg.paths == 8);
}

TEST_CASE("invalid values produce line-precise diagnostics") {
  std::vector<Diagnostic> diags;
  auto raw = parse_config_text("paths = many\nfoo = 1\nlevels = 3,x\n", "bad.cfg", diags);
  resolve_config(Experiment::Converge, raw, diags);
  REQUIRE(diags.size() == 3);
  CHECK(diags[0].line == 1);
  CHECK(diags[0].key == "paths");
  CHECK(diags[1].line == 2);
  CHECK(diags[2].line == 3);
}

TEST_CASE("validation") {
  std::vector<Diagnostic> diags;
  auto cfg = resolve_config(Experiment::Stationary, {{"h", {"0", "x", 1}}}, diags);
  const auto v = validate(cfg);
  REQUIRE(v.size() == 1);
  CHECK(v[0].key == "h");
  CHECK(v[0].is_error());

  cfg = resolve_config(Experiment::Converge, {{"levels", {"3-5", "x", 1}}, {"fine-level", {"5", "x", 2}}}, diags);
  CHECK(has(validate(cfg), "fine-level", true));
  cfg = resolve_config(Experiment::Converge, {{"levels", {"3,4", "x", 1}}}, diags);
  CHECK(has(validate(cfg), "levels", true));
  cfg = resolve_config(Experiment::Sample, {{"dataset", {"/no/such/file.csv", "x", 1}}}, diags);
  CHECK(has(validate(cfg), "dataset", true));

  // contraction precondition: gamma below 2 sqrt(u M1) warns, oversized h is an error
  cfg = resolve_config(Experiment::Contract, {{"gamma", {"1", "x", 1}}}, diags);
  const auto c = validate(cfg);
  CHECK(has(c, "gamma", false));
  cfg = resolve_config(Experiment::Contract, {{"h", {"0.1", "x", 1}}}, diags);
  CHECK(has(validate(cfg), "h", true));
  CHECK(diags.empty());
}

TEST_CASE("resolved config serializes every setting") {
  std::vector<Diagnostic> diags;
  const auto cfg = resolve_config(Experiment::Compare, {{"seed", {"11", "x", 1}}}, diags);
  const auto j = cfg.to_json();
  CHECK(j.at("seed") == 11);
  CHECK(j.at("experiment") == "compare");
  CHECK(j.contains("checkpoints"));
  CHECK(j.contains("h"));
}
