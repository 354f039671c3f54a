// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run all criteria
//   acceptance 2 5        run a subset
//
// Exit status is the number of failed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "quicsort/harness.hpp"

using namespace quicsort;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

// 1 -------------------------------------------------------------------------
Outcome convergence_orders() {
  const LogisticDataset data = synthetic_logistic_dataset(200, 4, 2024);
  const LogisticPotential pot(data);
  const SolverConfig cfg(1.0, 1.0 / pot.meta().M1);
  StrongErrorSettings s;  // T = 10, J = 256, N = 8..512, fine 2^14
  s.seed = 0;
  const ConvergenceReport r = strong_error_study(cfg, pot, prior_sampler(data), s);
  Outcome o;
  const double lo[3] = {2.65, 1.7, 0.8}, hi[3] = {3.35, 2.3, 1.2};
  for (std::size_t m = 0; m < 3; ++m) {
    const double order = r.methods[m].fit.order();
    o.require(order >= lo[m] && order <= hi[m], std::string(method_name(r.methods[m].method)) + " slope " +
                                                    fmt(order, 3) + " in [" + fmt(lo[m]) + ", " + fmt(hi[m]) + "]");
  }
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome coefficient_law() {
  const std::size_t n = 1000000;
  CounterRng rng(20240601, 0, 0, stream_tag(StreamKind::Increment));
  double s[3] = {}, ss[3] = {}, cross[3] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const auto inc = sample_increment(rng, 1.0, 1);
    const double v[3] = {inc.W[0], inc.H[0], inc.K[0]};
    for (int k = 0; k < 3; ++k) {
      s[k] += v[k];
      ss[k] += v[k] * v[k];
    }
    cross[0] += v[0] * v[1];
    cross[1] += v[0] * v[2];
    cross[2] += v[1] * v[2];
  }
  Outcome o;
  const double target[3] = {1.0, 1.0 / 12.0, 1.0 / 720.0};
  const char* name[3] = {"W", "H", "K"};
  double var[3];
  for (int k = 0; k < 3; ++k) {
    const double mean = s[k] / n;
    var[k] = ss[k] / n - mean * mean;
    o.require(within(var[k], target[k], 0.02), std::string("Var ") + name[k] + " = " + fmt(var[k] / target[k], 5) + " x target");
  }
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  double worst = 0.0;
  for (int p = 0; p < 3; ++p) {
    const int a = pairs[p][0], b = pairs[p][1];
    const double cov = cross[p] / n - (s[a] / n) * (s[b] / n);
    worst = std::max(worst, std::abs(cov / std::sqrt(var[a] * var[b])));
  }
  o.require(worst < 0.005, "max |rho| = " + fmt(worst, 3));
  return o;
}

// 3 -------------------------------------------------------------------------
double rel_gap(const BrownianIncrement& a, const BrownianIncrement& b) {
  double num = 0.0, den = 0.0;
  for (const auto [x, y] : {std::pair{&a.W, &b.W}, std::pair{&a.H, &b.H}, std::pair{&a.K, &b.K}}) {
    for (std::size_t i = 0; i < x->size(); ++i) {
      num = std::max(num, std::abs((*x)[i] - (*y)[i]));
      den = std::max(den, std::abs((*y)[i]));
    }
  }
  return num / den;
}

// Recursively refine to a random dyadic partition of depth at most 8; every leaf at depth 8
// when `full` is set.
void random_leaves(const BrownianIncrement& inc, int depth, bool full, std::mt19937_64& coin,
                   std::uint64_t seed, std::uint32_t index, std::vector<BrownianIncrement>& leaves) {
  if (depth == 8 || (!full && depth > 0 && coin() % 3 == 0)) {
    leaves.push_back(inc);
    return;
  }
  CounterRng rng(seed, index, static_cast<std::uint32_t>(depth), stream_tag(StreamKind::Bridge, depth));
  const auto [l, r] = refine(inc, rng);
  random_leaves(l, depth + 1, full, coin, seed, 2 * index, leaves);
  random_leaves(r, depth + 1, full, coin, seed, 2 * index + 1, leaves);
}

Outcome composition_exactness() {
  double fold_gap = 0.0, round_trip = 0.0;
  std::size_t trees = 0;
  std::mt19937_64 coin(7);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    CounterRng root_rng(seed, 0, 0, stream_tag(StreamKind::TreeRoot));
    const auto root = sample_increment(root_rng, 0.5 + 0.1 * static_cast<double>(seed % 7), 3);
    for (bool full : {true, false}) {
      std::vector<BrownianIncrement> leaves;
      random_leaves(root, 0, full, coin, seed, 0, leaves);
      BrownianIncrement acc = leaves.front();
      for (std::size_t i = 1; i < leaves.size(); ++i) acc = combine(acc, leaves[i]);
      fold_gap = std::max(fold_gap, rel_gap(acc, root));
      ++trees;
    }
    const BrownianTree tree(seed, 0, 10.0, 3);
    std::optional<BrownianIncrement> acc;
    tree.for_each_at_level(8, [&](std::uint64_t, const BrownianIncrement& inc) {
      acc = acc ? combine(*acc, inc) : inc;
    });
    fold_gap = std::max(fold_gap, rel_gap(*acc, tree.root()));
    ++trees;
    for (std::uint32_t k = 0; k < 64; ++k) {
      const auto node = tree.node(6, k);
      CounterRng rng(seed, k, 1, stream_tag(StreamKind::Bridge));
      const auto [l, r] = refine(node, rng);
      round_trip = std::max(round_trip, rel_gap(combine(l, r), node));
    }
  }
  Outcome o;
  o.require(fold_gap <= 1e-12, std::to_string(trees) + " depth-8 trees, fold vs root " + fmt(fold_gap, 2));
  o.require(round_trip <= 1e-13, "refine+combine round trip " + fmt(round_trip, 2));
  return o;
}

// 4 -------------------------------------------------------------------------
Outcome stationary_moments() {
  const std::size_t d = 10;
  const auto q = QuadraticPotential::isotropic(d);
  const SolverConfig cfg(2.0, 1.0);
  StationaritySettings s;  // h = 0.05, 1e4 burn-in, 1e5 kept, 64 chains
  s.seed = 0;
  const auto r = stationarity_study(cfg, q, gaussian_sampler(d), s);
  Outcome o;
  o.require(within(r.velocity.mean_sq, 10.0, 0.03), "E|v|^2 = " + fmt(r.velocity.mean_sq, 5));
  o.require(within(r.position.mean_sq, 10.0, 0.03), "E|x|^2 = " + fmt(r.position.mean_sq, 5));
  const double target = std::pow(3.0, 0.25) * std::sqrt(10.0);
  const double gaussian = std::pow(static_cast<double>(d * d + 2 * d), 0.25);
  o.require(within(r.velocity.l4, target, 0.03),
            "|v|_L4 = " + fmt(r.velocity.l4, 5) + " vs target " + fmt(target, 5) +
                " (exact stationary value (d^2+2d)^(1/4) sqrt(u) = " + fmt(gaussian, 5) +
                "; the target is an upper bound attained only for d = 1)");
  return o;
}

// 5 -------------------------------------------------------------------------
Outcome contractivity() {
  const auto q = QuadraticPotential::isotropic(10);
  const SolverConfig cfg(2.0, 1.0);
  ContractivitySettings s;  // h = 0.05, 200 steps, 1000 pairs
  s.seed = 0;
  const auto dist = contractivity_study(cfg, q, s);
  std::size_t decreasing = 0;
  for (std::size_t n = 1; n < dist.size(); ++n) decreasing += dist[n] < dist[n - 1] ? 1 : 0;
  Outcome o;
  o.require(dist.size() == 201 && decreasing == 200,
            std::to_string(decreasing) + "/200 steps strictly decreasing, " + fmt(dist.front()) + " -> " +
                fmt(dist.back()));
  return o;
}

// 6 -------------------------------------------------------------------------
Outcome gradient_accounting() {
  const LogisticDataset data = synthetic_logistic_dataset(200, 4, 2024);
  const LogisticPotential pot(data);
  CountingPotential counted(pot);
  const SolverConfig cfg(1.0, 1.0 / pot.meta().M1);
  const BrownianTree tree(3, 0, 10.0, pot.dim());
  const PhaseState init = initial_state(prior_sampler(data), cfg, 3, 0);
  Outcome o;
  for (Method m : {Method::Quicsort, Method::Ubu}) {
    std::vector<std::uint64_t> per_step;
    SimulateOptions opts;
    std::uint64_t last = 0;
    opts.observer = [&](std::size_t, const BrownianIncrement&) {
      per_step.push_back(counted.calls() - last);
      last = counted.calls();
    };
    counted.reset();
    simulate(cfg, counted, init, tree, 7, m, opts);
    per_step.push_back(counted.calls() - last);
    per_step.erase(per_step.begin());  // calls before the first step
    const std::uint64_t want = m == Method::Quicsort ? 2 : 1;
    const bool exact = per_step.size() == 128 &&
                       std::all_of(per_step.begin(), per_step.end(), [&](auto c) { return c == want; });
    o.require(exact, std::string(method_name(m)) + " " + std::to_string(counted.calls()) + " calls over 128 steps");
  }
  return o;
}

// 7 -------------------------------------------------------------------------
EmpiricalDistribution cloud(std::size_t n, std::size_t d, std::uint64_t seed, double shift) {
  CounterRng rng(seed, 0, 0, 0);
  std::vector<double> s(n * d);
  rng.fill_normal(s, 1.0);
  for (double& v : s) v += shift;
  return {d, std::move(s)};
}

long double pair_dist(std::span<const double> a, std::span<const double> b) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) s += (static_cast<long double>(a[k]) - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

Outcome metric_oracles() {
  Outcome o;
  double energy_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto mu = cloud(64, 3, 100 + seed, 0.0), nu = cloud(64, 3, 200 + seed, 0.4);
    auto mean = [](const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) s += pair_dist(p.point(i), q.point(j));
      return s / (p.size() * q.size());
    };
    const double brute = static_cast<double>(2.0L * mean(mu, nu) - mean(mu, mu) - mean(nu, nu));
    energy_gap = std::max(energy_gap, std::abs(energy_distance_sq(mu, nu) - brute));
  }
  o.require(energy_gap <= 1e-12, "energy distance vs brute force " + fmt(energy_gap, 2));

  double perm_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto mu = cloud(6, 2, 300 + seed, 0.0), nu = cloud(6, 2, 400 + seed, 0.5);
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    long double best = INFINITY;
    do {
      long double c = 0.0L;
      for (std::size_t i = 0; i < 6; ++i) c += std::pow(pair_dist(mu.point(i), nu.point(perm[i])), 2);
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    perm_gap = std::max(perm_gap, std::abs(wasserstein2(mu, nu) - static_cast<double>(std::sqrt(best / 6))));
  }
  o.require(perm_gap <= 1e-12, "W2 vs 720 permutations " + fmt(perm_gap, 2));

  const auto x = cloud(1000, 1, 500, 0.0), y = cloud(1000, 1, 600, 0.7);
  std::vector<double> a = x.samples(), b = y.samples();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  const double sorted = std::sqrt(ss / a.size());
  const double gap = std::abs(wasserstein2(x, y) - sorted);
  o.require(gap <= 1e-12, "1-d W2 vs sorted matching (n=1000) " + fmt(gap, 2));
  return o;
}

// 8 -------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QUICSORT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  const std::vector<std::pair<std::string, std::string>> runs{
      {"converge", "--paths 64"},
      {"sample", "--chains 256 --ground-truth-samples 256"},
      {"compare", "--chains 256 --ground-truth-samples 256"},
      {"contract", ""},
      {"stationary", "--kept 20000"}};
  Outcome o;
  for (const auto& [exp, extra] : runs) {
    std::vector<std::string> csv;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = fs::path(QUICSORT_TEST_TMP) / (exp + "_" + std::to_string(rep));
      fs::remove_all(dir);
      const int code = run_cli(exp + " " + extra + " --seed 1234 --out '" + dir.string() + "'");
      csv.push_back(code == 0 ? slurp(dir / (exp + ".csv")) : std::string());
    }
    o.require(!csv[0].empty() && csv[0] == csv[1], exp + " identical (" + std::to_string(csv[0].size()) + " bytes)");
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"convergence orders", convergence_orders},
      {"Brownian coefficient law", coefficient_law},
      {"composition exactness", composition_exactness},
      {"stationary moments", stationary_moments},
      {"contractivity", contractivity},
      {"gradient-evaluation accounting", gradient_accounting},
      {"metric oracles", metric_oracles},
      {"CLI determinism", cli_determinism}};

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    selected.resize(criteria.size());
    std::iota(selected.begin(), selected.end(), 1);
  }

  int failed = 0;
  for (int id : selected) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::cerr << "unknown criterion " << id << '\n';
      return 64;
    }
    const auto& [name, check] = criteria[id - 1];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << o.detail << " ("
              << fmt(secs, 3) << " s)" << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed;
}
