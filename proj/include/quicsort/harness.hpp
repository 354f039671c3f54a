#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "quicsort/integrators.hpp"
#include "quicsort/metrics.hpp"
#include "quicsort/potential.hpp"

namespace quicsort {

/// Initial position for chain or path `index`, drawn from `rng`.
using PositionSampler = std::function<Vector(CounterRng& rng)>;

PositionSampler prior_sampler(const LogisticDataset& data);
PositionSampler gaussian_sampler(std::size_t d, double stddev = 1.0);

/// Initial (X0, V0) for `index`: X0 from `sampler`, V0 ~ N(0, u I). Both keyed by (seed, index).
PhaseState initial_state(const PositionSampler& sampler, const SolverConfig& cfg,
                         std::uint64_t seed, std::uint32_t index);

/// Root mean square of |a_j - b_j| over paired samples.
double rms_error(const std::vector<Vector>& a, const std::vector<Vector>& b);

// ---------------------------------------------------------------------------
// Strong convergence
// ---------------------------------------------------------------------------

struct StrongErrorSettings {
  double horizon = 10.0;
  std::size_t paths = 256;
  std::vector<int> levels{3, 4, 5, 6, 7, 8, 9};
  int fine_level = 14;
  std::uint64_t seed = 0;
  std::vector<Method> methods{Method::Quicsort, Method::Ubu, Method::ExponentialEuler};
  int threads = 0;  // 0 = OpenMP default
};

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double order() const { return -slope; }
};

/// Ordinary least squares of log2(error) on log2(steps).
OrderFit fit_order(const std::vector<std::size_t>& steps, const std::vector<double>& errors);

struct MethodConvergence {
  Method method;
  std::vector<std::size_t> steps;
  std::vector<double> rms_errors;
  OrderFit fit;
  std::size_t fit_min_steps = 0;
  std::size_t fit_max_steps = 0;
};

struct ConvergenceReport {
  std::vector<MethodConvergence> methods;
  std::size_t paths = 0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  int fine_level = 0;
  double gamma = 0.0;
  double u = 0.0;
};

/*!
 * Monte Carlo strong error S_{N,J} for each method and N = 2^level against a QUICSORT
 * reference at 2^fine_level steps on the same Brownian tree.
 *
 * Path j uses tree (seed, j); every coarse run reads the tree level it needs, and each
 * tree node is the exact composition of its descendants. Paths run in parallel; sums are
 * folded in path order.
 */
ConvergenceReport strong_error_study(const SolverConfig& cfg, const Potential& pot,
                                     const PositionSampler& sampler,
                                     const StrongErrorSettings& settings);

// ---------------------------------------------------------------------------
// Contractivity
// ---------------------------------------------------------------------------

struct ContractivitySettings {
  double h = 0.05;
  std::size_t steps = 200;
  std::size_t pairs = 1000;
  std::uint64_t seed = 0;
  bool identical_start = false;
  int threads = 0;
};

/// |V - U|_{L2} + |gamma (X - Y) + (V - U)|_{L2} for synchronously coupled QUICSORT pairs,
/// at steps 0..settings.steps. Requires gamma >= 2 sqrt(u M1) and h <= 0.1 / gamma.
std::vector<double> contractivity_study(const SolverConfig& cfg, const Potential& pot,
                                        const ContractivitySettings& settings);

// ---------------------------------------------------------------------------
// Stationary moments
// ---------------------------------------------------------------------------

struct StationaritySettings {
  double h = 0.05;
  std::size_t burn_in = 10000;
  std::size_t kept = 100000;
  std::size_t chains = 64;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct StationarityReport {
  NormMoments velocity;
  NormMoments position;
  NormMoments gradient;
  std::size_t samples = 0;
};

StationarityReport stationarity_study(const SolverConfig& cfg, const Potential& pot,
                                      const PositionSampler& sampler,
                                      const StationaritySettings& settings);

// ---------------------------------------------------------------------------
// MCMC mixing
// ---------------------------------------------------------------------------

struct MixingSettings {
  Method method = Method::Quicsort;
  double h = 0.1;
  std::size_t chains = 1024;
  /// Cumulative gradient evaluations per chain at which to measure; 0 measures the start.
  std::vector<std::size_t> checkpoints{0, 100, 200, 400, 800};
  std::size_t w2_subsample = 2048;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct MixingCheckpoint {
  std::size_t gradient_evaluations = 0;
  std::size_t steps = 0;
  double energy_distance = 0.0;  // squared energy distance (V-statistic)
  double wasserstein2 = 0.0;
};

struct MixingReport {
  Method method = Method::Quicsort;
  double h = 0.0;
  std::size_t chains = 0;
  std::vector<MixingCheckpoint> rows;
};

MixingReport mixing_study(const SolverConfig& cfg, const Potential& pot,
                          const PositionSampler& sampler, const EmpiricalDistribution& ground_truth,
                          const MixingSettings& settings);

/// Final positions of `samples` independent QUICSORT chains run for `steps` steps of size h.
EmpiricalDistribution long_run_ground_truth(const SolverConfig& cfg, const Potential& pot,
                                            const PositionSampler& sampler, std::size_t samples,
                                            double h, std::size_t steps, std::uint64_t seed,
                                            int threads = 0);

/// Exact draws from exp(-f) for a quadratic potential.
EmpiricalDistribution gaussian_ground_truth(const QuadraticPotential& pot, std::size_t samples,
                                            std::uint64_t seed);

}  // namespace quicsort
