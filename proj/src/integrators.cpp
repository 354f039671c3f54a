#include "quicsort/integrators.hpp"

#include <algorithm>
#include <cmath>

namespace quicsort {

namespace {

// (e^{-z} + z - 1) / z^2
double phi2_kernel(double z) {
  if (z < 0.1) {
    double term = 0.5;
    double acc = term;
    for (int k = 1; k < 14; ++k) {
      term *= -z / (k + 2);
      acc += term;
    }
    return acc;
  }
  return (std::expm1(-z) + z) / (z * z);
}

// (1 - e^{-z}) / z
double phi1_kernel(double z) {
  if (z == 0.0) return 1.0;
  return -std::expm1(-z) / z;
}

void check_dims(const PhaseState& s, const BrownianIncrement& inc, const Potential& pot) {
  if (s.X.size() != pot.dim() || s.V.size() != pot.dim() || inc.dim() != pot.dim()) {
    throw std::invalid_argument("integrator: state, increment and potential dimensions differ");
  }
}

}  // namespace

SolverConfig::SolverConfig(double gamma, double u)
    : gamma_(gamma), u_(u), sigma_(std::sqrt(2.0 * gamma * u)) {
  if (!(gamma > 0.0) || !(u > 0.0) || !std::isfinite(gamma) || !std::isfinite(u)) {
    throw std::invalid_argument("SolverConfig: gamma and u must be positive and finite");
  }
}

bool PhaseState::finite() const {
  auto ok = [](double v) { return std::isfinite(v); };
  return std::all_of(X.begin(), X.end(), ok) && std::all_of(V.begin(), V.end(), ok);
}

double phi0(double x, double gamma, double h) { return std::exp(-x * gamma * h); }

double phi1(double x, double gamma, double h) { return x * h * phi1_kernel(x * gamma * h); }

double phi2(double x, double gamma, double h) {
  const double xh = x * h;
  return xh * xh * phi2_kernel(x * gamma * h);
}

StepCoefficients StepCoefficients::make(double gamma, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("StepCoefficients: step size must be positive");
  StepCoefficients c;
  c.h = h;
  c.gamma = gamma;
  for (std::size_t i = 0; i < kNodes.size(); ++i) {
    c.phi0[i] = quicsort::phi0(kNodes[i], gamma, h);
    c.phi1[i] = quicsort::phi1(kNodes[i], gamma, h);
    c.phi2[i] = quicsort::phi2(kNodes[i], gamma, h);
  }
  return c;
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Quicsort: return "quicsort";
    case Method::Ubu: return "ubu";
    case Method::ExponentialEuler: return "euler";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "quicsort") return Method::Quicsort;
  if (name == "ubu") return Method::Ubu;
  if (name == "euler" || name == "exp-euler") return Method::ExponentialEuler;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

int gradient_evaluations_per_step(Method m) { return m == Method::Quicsort ? 2 : 1; }

PhaseState quicsort_step(const SolverConfig& cfg, const StepCoefficients& c, const Potential& pot,
                         const PhaseState& s, const BrownianIncrement& inc) {
  check_dims(s, inc, pot);
  using N = StepCoefficients::Node;
  const std::size_t d = s.dim();
  const double h = c.h;
  const double sigma = cfg.sigma();
  const double uh = cfg.u() * h;

  Vector v1(d), noise(d), x1(d), x2(d), g1(d), g2(d);
  for (std::size_t i = 0; i < d; ++i) {
    v1[i] = s.V[i] + sigma * (inc.H[i] + 6.0 * inc.K[i]);
    noise[i] = sigma * (inc.W[i] - 12.0 * inc.K[i]) / h;
    x1[i] = s.X[i] + c.phi1[N::LambdaMinus] * v1[i] + c.phi2[N::LambdaMinus] * noise[i];
  }
  pot.gradient(x1, g1);
  for (std::size_t i = 0; i < d; ++i) {
    x2[i] = s.X[i] + c.phi1[N::LambdaPlus] * v1[i] - c.phi1[N::OneThird] * uh * g1[i] +
            c.phi2[N::LambdaPlus] * noise[i];
  }
  pot.gradient(x2, g2);

  PhaseState out{Vector(d), Vector(d)};
  for (std::size_t i = 0; i < d; ++i) {
    const double v2 = c.phi0[N::One] * v1[i] - 0.5 * c.phi0[N::LambdaPlus] * uh * g1[i] -
                      0.5 * c.phi0[N::LambdaMinus] * uh * g2[i] + c.phi1[N::One] * noise[i];
    out.X[i] = s.X[i] - 0.5 * c.phi1[N::LambdaPlus] * uh * g1[i] -
               0.5 * c.phi1[N::LambdaMinus] * uh * g2[i] + c.phi1[N::One] * v1[i] +
               c.phi2[N::One] * noise[i];
    out.V[i] = v2 - sigma * (inc.H[i] - 6.0 * inc.K[i]);
  }
  return out;
}

PhaseState quicsort_step(const SolverConfig& cfg, const Potential& pot, const PhaseState& s,
                         const BrownianIncrement& inc) {
  return quicsort_step(cfg, StepCoefficients::make(cfg.gamma(), inc.dt), pot, s, inc);
}

PhaseState ou_flow(const SolverConfig& cfg, const PhaseState& s, const BrownianIncrement& inc) {
  const std::size_t d = s.dim();
  if (s.V.size() != d || inc.dim() != d) throw std::invalid_argument("ou_flow: dimension mismatch");
  const double h = inc.dt;
  const double g = cfg.gamma();
  const double sigma = cfg.sigma();
  const double e0 = phi0(1.0, g, h);
  const double e1 = phi1(1.0, g, h);
  const double e2 = phi2(1.0, g, h);
  PhaseState out{Vector(d), Vector(d)};
  for (std::size_t i = 0; i < d; ++i) {
    const double v1 = s.V[i] + sigma * (inc.H[i] + 6.0 * inc.K[i]);
    const double rate = sigma * (inc.W[i] - 12.0 * inc.K[i]) / h;
    out.X[i] = s.X[i] + e1 * v1 + e2 * rate;
    out.V[i] = e0 * v1 + e1 * rate - sigma * (inc.H[i] - 6.0 * inc.K[i]);
  }
  return out;
}

PhaseState ubu_step(const SolverConfig& cfg, const Potential& pot, const PhaseState& s,
                    const BrownianIncrement& left_half, const BrownianIncrement& right_half) {
  check_dims(s, left_half, pot);
  check_dims(s, right_half, pot);
  const double h = left_half.dt + right_half.dt;
  PhaseState mid = ou_flow(cfg, s, left_half);
  const Vector g = pot.gradient(mid.X);
  const double uh = cfg.u() * h;
  for (std::size_t i = 0; i < g.size(); ++i) mid.V[i] -= uh * g[i];
  return ou_flow(cfg, mid, right_half);
}

PhaseState ubu_step(const SolverConfig& cfg, const Potential& pot, const PhaseState& s,
                    const BrownianIncrement& inc, CounterRng& rng) {
  auto [left, right] = refine(inc, rng);
  return ubu_step(cfg, pot, s, left, right);
}

PhaseState euler_step(const SolverConfig& cfg, const Potential& pot, const PhaseState& s,
                      const BrownianIncrement& inc) {
  check_dims(s, inc, pot);
  const std::size_t d = s.dim();
  const double h = inc.dt;
  const double gm = cfg.gamma();
  const double sigma = cfg.sigma();
  const double u = cfg.u();
  const double e0 = phi0(1.0, gm, h);
  const double e1 = phi1(1.0, gm, h);
  const double e2 = phi2(1.0, gm, h);
  const Vector g = pot.gradient(s.X);
  PhaseState out{Vector(d), Vector(d)};
  for (std::size_t i = 0; i < d; ++i) {
    const double v1 = s.V[i] + sigma * (inc.H[i] + 6.0 * inc.K[i]);
    const double rate = sigma * (inc.W[i] - 12.0 * inc.K[i]) / h;
    out.X[i] = s.X[i] + e1 * v1 + e2 * rate - e2 * u * g[i];
    out.V[i] = e0 * v1 + e1 * rate - e1 * u * g[i] - sigma * (inc.H[i] - 6.0 * inc.K[i]);
  }
  return out;
}

NumericalFailure::NumericalFailure(Method method, std::size_t step)
    : std::runtime_error("non-finite state produced by " + std::string(method_name(method)) +
                         " at step " + std::to_string(step)),
      method_(method),
      step_(step) {}

namespace {

class Recorder {
 public:
  Recorder(const SimulateOptions& options, std::size_t n_steps) {
    targets_ = options.record_steps;
    if (targets_.empty()) targets_.push_back(n_steps);
    std::sort(targets_.begin(), targets_.end());
    targets_.erase(std::unique(targets_.begin(), targets_.end()), targets_.end());
    if (targets_.back() > n_steps) {
      throw std::invalid_argument("simulate: requested step beyond the end of the path");
    }
  }

  void offer(std::size_t step, const PhaseState& s) {
    while (next_ < targets_.size() && targets_[next_] == step) {
      out_.steps.push_back(step);
      out_.states.push_back(s);
      ++next_;
    }
  }

  Trajectory take() { return std::move(out_); }

 private:
  std::vector<std::size_t> targets_;
  std::size_t next_ = 0;
  Trajectory out_;
};

}  // namespace

Trajectory simulate(const SolverConfig& cfg, const Potential& pot, const PhaseState& initial,
                    const BrownianTree& path, int level, Method method,
                    const SimulateOptions& options) {
  if (level < 0 || level >= BrownianTree::kMaxLevel) {
    throw std::invalid_argument("simulate: level out of range");
  }
  const std::size_t n_steps = std::size_t{1} << level;
  const double h = path.horizon() / static_cast<double>(n_steps);
  const StepCoefficients coeffs = StepCoefficients::make(cfg.gamma(), h);
  Recorder rec(options, n_steps);
  PhaseState state = initial;
  rec.offer(0, state);
  path.for_each_at_level(level, [&](std::uint64_t k, const BrownianIncrement& inc) {
    if (options.observer) options.observer(k, inc);
    switch (method) {
      case Method::Quicsort:
        state = quicsort_step(cfg, coeffs, pot, state, inc);
        break;
      case Method::Ubu: {
        auto [left, right] = path.children(level, k, inc);
        state = ubu_step(cfg, pot, state, left, right);
        break;
      }
      case Method::ExponentialEuler:
        state = euler_step(cfg, pot, state, inc);
        break;
    }
    if (!state.finite()) throw NumericalFailure(method, k + 1);
    rec.offer(k + 1, state);
  });
  return rec.take();
}

Trajectory simulate(const SolverConfig& cfg, const Potential& pot, const PhaseState& initial,
                    std::span<const BrownianIncrement> increments, Method method,
                    std::uint64_t refine_seed, const SimulateOptions& options) {
  Recorder rec(options, increments.size());
  PhaseState state = initial;
  rec.offer(0, state);
  for (std::size_t k = 0; k < increments.size(); ++k) {
    const BrownianIncrement& inc = increments[k];
    if (options.observer) options.observer(k, inc);
    switch (method) {
      case Method::Quicsort:
        state = quicsort_step(cfg, pot, state, inc);
        break;
      case Method::Ubu: {
        CounterRng rng(refine_seed, static_cast<std::uint32_t>(k), 0,
                       stream_tag(StreamKind::Bridge, 0xffff));
        state = ubu_step(cfg, pot, state, inc, rng);
        break;
      }
      case Method::ExponentialEuler:
        state = euler_step(cfg, pot, state, inc);
        break;
    }
    if (!state.finite()) throw NumericalFailure(method, k + 1);
    rec.offer(k + 1, state);
  }
  return rec.take();
}

}  // namespace quicsort
