#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "quicsort/brownian.hpp"
#include "quicsort/potential.hpp"

namespace quicsort {

/// Parameters of dx = v dt, dv = -gamma v dt - u grad f(x) dt + sigma dW with sigma = sqrt(2 gamma u).
class SolverConfig {
 public:
  SolverConfig(double gamma, double u);

  double gamma() const { return gamma_; }
  double u() const { return u_; }
  double sigma() const { return sigma_; }

 private:
  double gamma_;
  double u_;
  double sigma_;
};

struct PhaseState {
  Vector X;
  Vector V;

  std::size_t dim() const { return X.size(); }
  bool finite() const;
};

// phi0(x) = exp(-x gamma h), phi1(x) = (1 - exp(-x gamma h)) / gamma,
// phi2(x) = (exp(-x gamma h) + x gamma h - 1) / gamma^2. Cancellation-free for small gamma h.
double phi0(double x, double gamma, double h);
double phi1(double x, double gamma, double h);
double phi2(double x, double gamma, double h);

// Two-point Gauss-Legendre nodes on [0, 1].
inline constexpr double kLambdaPlus = (3.0 + std::numbers::sqrt3) / 6.0;
inline constexpr double kLambdaMinus = (3.0 - std::numbers::sqrt3) / 6.0;

/// phi values at the four arguments the five-stage update needs, for one (gamma, h).
struct StepCoefficients {
  enum Node : std::size_t { LambdaMinus = 0, LambdaPlus = 1, OneThird = 2, One = 3 };
  static constexpr std::array<double, 4> kNodes{kLambdaMinus, kLambdaPlus, 1.0 / 3.0, 1.0};

  double h = 0.0;
  double gamma = 0.0;
  std::array<double, 4> phi0{};
  std::array<double, 4> phi1{};
  std::array<double, 4> phi2{};

  static StepCoefficients make(double gamma, double h);
};

enum class Method { Quicsort, Ubu, ExponentialEuler };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
/// Gradient evaluations one step of `m` costs.
int gradient_evaluations_per_step(Method m);

PhaseState quicsort_step(const SolverConfig& cfg, const StepCoefficients& coeffs,
                         const Potential& pot, const PhaseState& s, const BrownianIncrement& inc);
PhaseState quicsort_step(const SolverConfig& cfg, const Potential& pot, const PhaseState& s,
                         const BrownianIncrement& inc);

/*!
 * Exact flow of dx = v dt, dv = -gamma v dt + sigma dW over `inc`, where dW is the
 * piecewise linear surrogate path carrying the same (W, H, K): a jump of H + 6K at the
 * left end, constant slope (W - 12K) / dt, and a jump of -(H - 6K) at the right end.
 */
PhaseState ou_flow(const SolverConfig& cfg, const PhaseState& s, const BrownianIncrement& inc);

/// U(h/2) B(h) U(h/2); the two halves are consumed left to right.
PhaseState ubu_step(const SolverConfig& cfg, const Potential& pot, const PhaseState& s,
                    const BrownianIncrement& left_half, const BrownianIncrement& right_half);
PhaseState ubu_step(const SolverConfig& cfg, const Potential& pot, const PhaseState& s,
                    const BrownianIncrement& inc, CounterRng& rng);

/// Exponential Euler: gradient frozen at X_n, linear dynamics integrated against the surrogate path.
PhaseState euler_step(const SolverConfig& cfg, const Potential& pot, const PhaseState& s,
                      const BrownianIncrement& inc);

class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(Method method, std::size_t step);
  Method method() const { return method_; }
  std::size_t step() const { return step_; }

 private:
  Method method_;
  std::size_t step_;
};

struct SimulateOptions {
  /// Step counts at which to record the state; empty records only the final state.
  std::vector<std::size_t> record_steps;
  /// Called with the whole-interval increment before each step.
  std::function<void(std::size_t step, const BrownianIncrement&)> observer;
};

struct Trajectory {
  std::vector<std::size_t> steps;
  std::vector<PhaseState> states;

  const PhaseState& final_state() const { return states.back(); }
};

/// Folds `method` over the 2^level intervals of a dyadic Brownian tree. UBU takes its half
/// intervals from level + 1 of the same tree.
Trajectory simulate(const SolverConfig& cfg, const Potential& pot, const PhaseState& initial,
                    const BrownianTree& path, int level, Method method,
                    const SimulateOptions& options = {});

/// Folds `method` over an explicit partition. UBU splits each interval with refine keyed by
/// (refine_seed, interval index).
Trajectory simulate(const SolverConfig& cfg, const Potential& pot, const PhaseState& initial,
                    std::span<const BrownianIncrement> increments, Method method,
                    std::uint64_t refine_seed = 0, const SimulateOptions& options = {});

}  // namespace quicsort
