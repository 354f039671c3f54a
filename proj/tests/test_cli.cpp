#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(QUICSORT_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Result run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(QUICSORT_CLI_PATH) + " " + args + " > '" + out.string() + "' 2> '" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

const std::string kSmallConverge = "--paths 8 --levels 3-6 --fine-level 9 --horizon 2";
const std::string kSmallSample =
    "--chains 32 --checkpoints 0,10,20 --w2-subsample 32 --ground-truth-samples 32 --ground-truth-steps 200 "
    "--ground-truth-h 0.05 --rows 40";

}  // namespace

TEST_CASE("converge writes versioned CSV and JSON reports") {
  const auto dir = scratch("converge");
  const auto r = run("converge " + kSmallConverge + " --seed 4 --out '" + dir.string() + "'", dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("quicsort") != std::string::npos);
  CHECK(r.out.find("ubu") != std::string::npos);
  CHECK(r.out.find("euler") != std::string::npos);
  const std::string csv = slurp(dir / "converge.csv");
  CHECK(csv.rfind("# quicsort-report v1 converge\nmethod,N,rms_error\n", 0) == 0);
  CHECK(csv.find("\nubu,16,") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir / "converge.json"));
  CHECK(j.at("config").at("seed") == 4);
  CHECK(j.at("config").at("paths") == 8);
  CHECK(j.at("config").contains("u"));
  CHECK(j.at("report").at("methods").size() == 3);
}

TEST_CASE("converge on the bundled dataset file") {
  const auto dir = scratch("bundled");
  const auto r = run("converge " + kSmallConverge + " --dataset '" QUICSORT_DATA_DIR
                     "/synthetic_logistic.csv' --out '" + dir.string() + "'",
                     dir);
  REQUIRE(r.code == 0);
  const auto dir2 = scratch("builtin");
  REQUIRE(run("converge " + kSmallConverge + " --out '" + dir2.string() + "'", dir2).code == 0);
  CHECK(slurp(dir / "converge.csv") == slurp(dir2 / "converge.csv"));
}

TEST_CASE("missing dataset exits with code 2 and names the path") {
  const auto dir = scratch("missing");
  const auto r = run("sample --dataset /no/such/data.csv --out '" + dir.string() + "'", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("/no/such/data.csv") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "sample.csv"));
}

TEST_CASE("invalid config exits nonzero with line-precise diagnostics") {
  const auto dir = scratch("badcfg");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# settings\nseed = 3\nh = 0\nbogus = 1\n";
  }
  const auto r = run("stationary --config '" + (dir / "run.cfg").string() + "'", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("run.cfg:3: error: h:") != std::string::npos);
  CHECK(r.err.find("run.cfg:4: error: bogus:") != std::string::npos);

  const auto bad_flag = run("converge --paths lots", dir);
  CHECK(bad_flag.code == 2);
  CHECK(bad_flag.err.find("paths") != std::string::npos);
  CHECK(run("", dir).code == 2);
  CHECK(run("frobnicate", dir).code == 2);
  CHECK(run("--help", dir).code == 0);
}

TEST_CASE("contraction precondition warning is printed") {
  const auto dir = scratch("warn");
  const auto r = run("contract --gamma 1 --h 0.05 --pairs 10 --steps 5 --out '" + dir.string() + "'", dir);
  CHECK(r.code == 2);  // the harness itself refuses gamma < 2 sqrt(u M1)
  CHECK(r.err.find("warning: gamma") != std::string::npos);
}

TEST_CASE("non-finite states exit with code 3 naming method and step") {
  const auto dir = scratch("blowup");
  const auto r = run("sample " + kSmallSample + " --method euler --u 1 --gamma 1 --h 30 --checkpoints 0,400" +
                         " --out '" + dir.string() + "'",
                     dir);
  CHECK(r.code == 3);
  CHECK(r.err.find("euler") != std::string::npos);
  CHECK(r.err.find("step") != std::string::npos);
}

TEST_CASE("every experiment is byte-identical when re-run with the same seed") {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"converge", kSmallConverge},
      {"sample", kSmallSample},
      {"compare", kSmallSample},
      {"contract", "--pairs 20 --steps 30"},
      {"stationary", "--chains 4 --burn-in 50 --kept 200"}};
  for (const auto& [cmd, args] : cases) {
    INFO(cmd);
    const auto a = scratch(cmd + "_a"), b = scratch(cmd + "_b"), c = scratch(cmd + "_c");
    REQUIRE(run(cmd + " " + args + " --seed 21 --out '" + a.string() + "'", a).code == 0);
    REQUIRE(run(cmd + " " + args + " --seed 21 --threads 2 --out '" + b.string() + "'", b).code == 0);
    REQUIRE(run(cmd + " " + args + " --seed 22 --out '" + c.string() + "'", c).code == 0);
    const std::string ca = slurp(a / (cmd + ".csv"));
    CHECK(ca.rfind("# quicsort-report v1 " + cmd + "\n", 0) == 0);
    CHECK(ca == slurp(b / (cmd + ".csv")));
    CHECK(ca != slurp(c / (cmd + ".csv")));
  }
}

TEST_CASE("sample and compare CSV columns") {
  const auto dir = scratch("compare_cols");
  REQUIRE(run("compare " + kSmallSample + " --out '" + dir.string() + "'", dir).code == 0);
  const std::string csv = slurp(dir / "compare.csv");
  CHECK(csv.find("\nmethod,grad_evals,energy_dist,w2\n") != std::string::npos);
  CHECK(csv.find("\nquicsort,20,") != std::string::npos);
  CHECK(csv.find("\nubu,20,") != std::string::npos);
}
