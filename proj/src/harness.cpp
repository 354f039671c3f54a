#include "quicsort/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>

#include <omp.h>

namespace quicsort {

namespace {

int resolve_threads(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

// Runs body(i) for i in [0, n) on an OpenMP team; the first exception is rethrown afterwards.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads))
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

double squared_distance(const Vector& a, const Vector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

PhaseState advance(Method method, const SolverConfig& cfg, const StepCoefficients& coeffs,
                   const Potential& pot, const PhaseState& s, std::uint64_t seed,
                   std::uint32_t chain, std::size_t step) {
  CounterRng rng(seed, static_cast<std::uint32_t>(step), chain, stream_tag(StreamKind::Increment));
  const BrownianIncrement inc = sample_increment(rng, coeffs.h, s.dim());
  PhaseState next;
  switch (method) {
    case Method::Quicsort:
      next = quicsort_step(cfg, coeffs, pot, s, inc);
      break;
    case Method::Ubu: {
      CounterRng bridge(seed, static_cast<std::uint32_t>(step), chain,
                        stream_tag(StreamKind::Bridge, 0xffff));
      next = ubu_step(cfg, pot, s, inc, bridge);
      break;
    }
    case Method::ExponentialEuler:
      next = euler_step(cfg, pot, s, inc);
      break;
  }
  if (!next.finite()) throw NumericalFailure(method, step + 1);
  return next;
}

}  // namespace

PositionSampler prior_sampler(const LogisticDataset& data) {
  return [data](CounterRng& rng) { return sample_prior(data, rng); };
}

PositionSampler gaussian_sampler(std::size_t d, double stddev) {
  return [d, stddev](CounterRng& rng) {
    Vector x(d);
    rng.fill_normal(x, stddev);
    return x;
  };
}

PhaseState initial_state(const PositionSampler& sampler, const SolverConfig& cfg,
                         std::uint64_t seed, std::uint32_t index) {
  CounterRng xr(seed, index, 0, stream_tag(StreamKind::InitialPosition));
  CounterRng vr(seed, index, 0, stream_tag(StreamKind::InitialVelocity));
  PhaseState s;
  s.X = sampler(xr);
  s.V.resize(s.X.size());
  vr.fill_normal(s.V, std::sqrt(cfg.u()));
  return s;
}

double rms_error(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("rms_error: need equal nonempty sample sets");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += squared_distance(a[j], b[j]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

OrderFit fit_order(const std::vector<std::size_t>& steps, const std::vector<double>& errors) {
  if (steps.size() != errors.size()) throw std::invalid_argument("fit_order: mismatched rows");
  if (steps.size() < 3) throw std::invalid_argument("fit_order: need at least 3 rows");
  const double n = static_cast<double>(steps.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(steps.size()), ly(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] == 0 || !(errors[i] > 0.0)) {
      throw std::invalid_argument("fit_order: steps and errors must be positive");
    }
    lx[i] = std::log2(static_cast<double>(steps[i]));
    ly[i] = std::log2(errors[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_order: step counts must not all be equal");
  OrderFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

ConvergenceReport strong_error_study(const SolverConfig& cfg, const Potential& pot,
                                     const PositionSampler& sampler,
                                     const StrongErrorSettings& settings) {
  if (settings.paths < 2) throw std::invalid_argument("strong_error_study: need at least 2 paths");
  if (!(settings.horizon > 0.0)) throw std::invalid_argument("strong_error_study: horizon must be positive");
  if (settings.levels.empty() || settings.methods.empty()) {
    throw std::invalid_argument("strong_error_study: need at least one level and one method");
  }
  if (!std::is_sorted(settings.levels.begin(), settings.levels.end()) ||
      std::adjacent_find(settings.levels.begin(), settings.levels.end()) != settings.levels.end()) {
    throw std::invalid_argument("strong_error_study: levels must be strictly increasing");
  }
  if (settings.levels.front() < 0 || settings.fine_level >= BrownianTree::kMaxLevel ||
      settings.levels.back() >= settings.fine_level) {
    throw std::invalid_argument(
        "strong_error_study: fine level must be a finer dyadic level than every coarse level");
  }

  const std::size_t n_methods = settings.methods.size();
  const std::size_t n_levels = settings.levels.size();
  const std::size_t n_paths = settings.paths;
  // sq[(m * n_levels + l) * n_paths + j]
  std::vector<double> sq(n_methods * n_levels * n_paths, 0.0);

  parallel_for(n_paths, settings.threads, [&](std::size_t j) {
    const auto path = static_cast<std::uint32_t>(j);
    const BrownianTree tree(settings.seed, path, settings.horizon, pot.dim());
    const PhaseState init = initial_state(sampler, cfg, settings.seed, path);
    const Vector reference =
        simulate(cfg, pot, init, tree, settings.fine_level, Method::Quicsort).final_state().X;
    for (std::size_t m = 0; m < n_methods; ++m) {
      for (std::size_t l = 0; l < n_levels; ++l) {
        const Vector x =
            simulate(cfg, pot, init, tree, settings.levels[l], settings.methods[m]).final_state().X;
        sq[(m * n_levels + l) * n_paths + j] = squared_distance(x, reference);
      }
    }
  });

  ConvergenceReport report;
  report.paths = n_paths;
  report.horizon = settings.horizon;
  report.seed = settings.seed;
  report.fine_level = settings.fine_level;
  report.gamma = cfg.gamma();
  report.u = cfg.u();
  for (std::size_t m = 0; m < n_methods; ++m) {
    MethodConvergence mc{settings.methods[m], {}, {}, {}, 0, 0};
    for (std::size_t l = 0; l < n_levels; ++l) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n_paths; ++j) acc += sq[(m * n_levels + l) * n_paths + j];
      mc.steps.push_back(std::size_t{1} << settings.levels[l]);
      mc.rms_errors.push_back(std::sqrt(acc / static_cast<double>(n_paths)));
    }
    mc.fit_min_steps = mc.steps.front();
    mc.fit_max_steps = mc.steps.back();
    if (mc.steps.size() >= 3 &&
        std::all_of(mc.rms_errors.begin(), mc.rms_errors.end(), [](double e) { return e > 0.0; })) {
      mc.fit = fit_order(mc.steps, mc.rms_errors);
    }
    report.methods.push_back(std::move(mc));
  }
  return report;
}

std::vector<double> contractivity_study(const SolverConfig& cfg, const Potential& pot,
                                        const ContractivitySettings& settings) {
  const double threshold = 2.0 * std::sqrt(cfg.u() * pot.meta().M1);
  if (cfg.gamma() < threshold * (1.0 - 1e-12)) {
    throw std::invalid_argument("contractivity_study: requires gamma >= 2 sqrt(u M1)");
  }
  if (!(settings.h > 0.0) || settings.h > 0.1 / cfg.gamma() * (1.0 + 1e-12)) {
    throw std::invalid_argument("contractivity_study: requires 0 < h <= 0.1 / gamma");
  }
  if (settings.pairs == 0) throw std::invalid_argument("contractivity_study: need at least one pair");

  const std::size_t d = pot.dim();
  const std::size_t n_rec = settings.steps + 1;
  const StepCoefficients coeffs = StepCoefficients::make(cfg.gamma(), settings.h);
  const double z = cfg.gamma();  // w = 0, z = gamma - w
  std::vector<double> w_sq(settings.pairs * n_rec), z_sq(settings.pairs * n_rec);

  parallel_for(settings.pairs, settings.threads, [&](std::size_t p) {
    const auto pair = static_cast<std::uint32_t>(p);
    auto draw = [&](std::uint32_t which) {
      CounterRng rng(settings.seed, pair, which, stream_tag(StreamKind::InitialPosition, 1));
      PhaseState s{Vector(d), Vector(d)};
      rng.fill_normal(s.X, 1.0);
      rng.fill_normal(s.V, std::sqrt(cfg.u()));
      return s;
    };
    PhaseState a = draw(0);
    PhaseState b = settings.identical_start ? a : draw(1);
    auto record = [&](std::size_t n) {
      double ws = 0.0, zs = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double dv = a.V[i] - b.V[i];
        const double zt = z * (a.X[i] - b.X[i]) + dv;
        ws += dv * dv;
        zs += zt * zt;
      }
      w_sq[p * n_rec + n] = ws;
      z_sq[p * n_rec + n] = zs;
    };
    record(0);
    for (std::size_t n = 0; n < settings.steps; ++n) {
      CounterRng rng(settings.seed, static_cast<std::uint32_t>(n), pair,
                     stream_tag(StreamKind::Increment, 1));
      const BrownianIncrement inc = sample_increment(rng, settings.h, d);
      a = quicsort_step(cfg, coeffs, pot, a, inc);
      b = quicsort_step(cfg, coeffs, pot, b, inc);
      if (!a.finite() || !b.finite()) throw NumericalFailure(Method::Quicsort, n + 1);
      record(n + 1);
    }
  });

  std::vector<double> distance(n_rec);
  for (std::size_t n = 0; n < n_rec; ++n) {
    double ws = 0.0, zs = 0.0;
    for (std::size_t p = 0; p < settings.pairs; ++p) {
      ws += w_sq[p * n_rec + n];
      zs += z_sq[p * n_rec + n];
    }
    const double np = static_cast<double>(settings.pairs);
    distance[n] = std::sqrt(ws / np) + std::sqrt(zs / np);
  }
  return distance;
}

StationarityReport stationarity_study(const SolverConfig& cfg, const Potential& pot,
                                      const PositionSampler& sampler,
                                      const StationaritySettings& settings) {
  if (settings.chains == 0 || settings.kept == 0) {
    throw std::invalid_argument("stationarity_study: need chains and kept steps");
  }
  const StepCoefficients coeffs = StepCoefficients::make(cfg.gamma(), settings.h);
  struct ChainMoments {
    MomentAccumulator v, x, g;
  };
  std::vector<ChainMoments> per_chain(settings.chains);

  parallel_for(settings.chains, settings.threads, [&](std::size_t c) {
    const auto chain = static_cast<std::uint32_t>(c);
    PhaseState s = initial_state(sampler, cfg, settings.seed, chain);
    Vector g(pot.dim());
    const std::size_t total = settings.burn_in + settings.kept;
    for (std::size_t n = 0; n < total; ++n) {
      s = advance(Method::Quicsort, cfg, coeffs, pot, s, settings.seed, chain, n);
      if (n >= settings.burn_in) {
        auto& acc = per_chain[c];
        acc.v.add(s.V);
        acc.x.add(s.X);
        pot.gradient(s.X, g);
        acc.g.add(g);
      }
    }
  });

  ChainMoments all;
  for (const auto& c : per_chain) {
    all.v.merge(c.v);
    all.x.merge(c.x);
    all.g.merge(c.g);
  }
  return {all.v.result(), all.x.result(), all.g.result(), all.v.count()};
}

MixingReport mixing_study(const SolverConfig& cfg, const Potential& pot,
                          const PositionSampler& sampler, const EmpiricalDistribution& ground_truth,
                          const MixingSettings& settings) {
  if (ground_truth.dim() != pot.dim()) throw std::invalid_argument("mixing_study: ground truth dimension mismatch");
  if (settings.chains == 0) throw std::invalid_argument("mixing_study: need at least one chain");
  if (!std::is_sorted(settings.checkpoints.begin(), settings.checkpoints.end())) {
    throw std::invalid_argument("mixing_study: checkpoints must be nondecreasing");
  }
  const int per_step = gradient_evaluations_per_step(settings.method);
  const StepCoefficients coeffs = StepCoefficients::make(cfg.gamma(), settings.h);
  const std::size_t d = pot.dim();

  std::vector<PhaseState> states(settings.chains);
  for (std::size_t c = 0; c < settings.chains; ++c) {
    states[c] = initial_state(sampler, cfg, settings.seed, static_cast<std::uint32_t>(c));
  }
  const std::size_t m = std::min({settings.w2_subsample, settings.chains, ground_truth.size()});
  const EmpiricalDistribution truth_sub = ground_truth.subsample(m, settings.seed ^ 0x5bd1e995u);

  MixingReport report;
  report.method = settings.method;
  report.h = settings.h;
  report.chains = settings.chains;
  std::size_t done = 0;
  for (std::size_t budget : settings.checkpoints) {
    const std::size_t target = budget / static_cast<std::size_t>(per_step);
    parallel_for(settings.chains, settings.threads, [&](std::size_t c) {
      for (std::size_t n = done; n < target; ++n) {
        states[c] = advance(settings.method, cfg, coeffs, pot, states[c], settings.seed,
                            static_cast<std::uint32_t>(c), n);
      }
    });
    done = std::max(done, target);

    std::vector<double> flat;
    flat.reserve(settings.chains * d);
    for (const auto& s : states) flat.insert(flat.end(), s.X.begin(), s.X.end());
    const EmpiricalDistribution cloud(d, std::move(flat));
    MixingCheckpoint row;
    row.steps = done;
    row.gradient_evaluations = done * static_cast<std::size_t>(per_step);
    row.energy_distance = energy_distance_sq(cloud, ground_truth);
    row.wasserstein2 = wasserstein2(cloud.subsample(m, settings.seed ^ 0x9e3779b9u), truth_sub);
    report.rows.push_back(row);
  }
  return report;
}

EmpiricalDistribution long_run_ground_truth(const SolverConfig& cfg, const Potential& pot,
                                            const PositionSampler& sampler, std::size_t samples,
                                            double h, std::size_t steps, std::uint64_t seed,
                                            int threads) {
  if (samples == 0) throw std::invalid_argument("long_run_ground_truth: need at least one sample");
  const StepCoefficients coeffs = StepCoefficients::make(cfg.gamma(), h);
  const std::size_t d = pot.dim();
  std::vector<double> flat(samples * d);
  parallel_for(samples, threads, [&](std::size_t c) {
    const auto chain = static_cast<std::uint32_t>(c);
    CounterRng xr(seed, chain, 0, stream_tag(StreamKind::GroundTruth, 0));
    CounterRng vr(seed, chain, 0, stream_tag(StreamKind::GroundTruth, 1));
    PhaseState s;
    s.X = sampler(xr);
    s.V.resize(d);
    vr.fill_normal(s.V, std::sqrt(cfg.u()));
    const std::uint64_t chain_seed = seed ^ 0xa5a5a5a5a5a5a5a5ull;
    for (std::size_t n = 0; n < steps; ++n) {
      s = advance(Method::Quicsort, cfg, coeffs, pot, s, chain_seed, chain, n);
    }
    std::copy(s.X.begin(), s.X.end(), flat.begin() + static_cast<std::ptrdiff_t>(c * d));
  });
  return EmpiricalDistribution(d, std::move(flat));
}

EmpiricalDistribution gaussian_ground_truth(const QuadraticPotential& pot, std::size_t samples,
                                            std::uint64_t seed) {
  const std::size_t d = pot.dim();
  std::vector<double> flat(samples * d);
  for (std::size_t i = 0; i < samples; ++i) {
    CounterRng rng(seed, static_cast<std::uint32_t>(i), 0, stream_tag(StreamKind::GroundTruth, 2));
    for (std::size_t j = 0; j < d; ++j) {
      flat[i * d + j] = pot.center()[j] + rng.normal() / std::sqrt(pot.curvatures()[j]);
    }
  }
  return EmpiricalDistribution(d, std::move(flat));
}

}  // namespace quicsort
