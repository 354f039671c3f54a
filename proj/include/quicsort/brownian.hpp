#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "quicsort/rng.hpp"

namespace quicsort {

using Vector = std::vector<double>;

/*!
 * Space-time coefficients of Brownian motion over one interval of length dt.
 *
 * W is the increment; H and K are the first two coefficients of the polynomial
 * expansion of the bridge W_{s,t} - (t-s)/dt W. Over a single freshly sampled
 * interval they are independent with variances dt, dt/12 and dt/720. M is the
 * optional third coefficient (variance dt/100800); it does not survive combine
 * or refine.
 */
struct BrownianIncrement {
  double dt = 0.0;
  Vector W;
  Vector H;
  Vector K;
  std::optional<Vector> M;

  std::size_t dim() const { return W.size(); }
  static BrownianIncrement zero(double dt, std::size_t d);
};

/// Equivalent representation by the first two iterated time integrals of W over the interval.
struct TimeIntegrals {
  double dt = 0.0;
  Vector W;
  Vector I1;  // int W_{s,r} dr
  Vector I2;  // int int W_{s,r2} dr2 dr1
};

BrownianIncrement sample_increment(CounterRng& rng, double dt, std::size_t d,
                                   bool with_third_coefficient = false);

TimeIntegrals to_time_integrals(const BrownianIncrement& inc);
BrownianIncrement from_time_integrals(const TimeIntegrals& ti);

/// Exact composition of adjacent intervals, left then right. Associative.
BrownianIncrement combine(const BrownianIncrement& left, const BrownianIncrement& right);

/*!
 * Gaussian bridge for (W, I1, I2) on [0, 1] split at `ratio`.
 *
 * In unit-interval coordinates the left piece is distributed as
 * gain * parent + cholesky * z with z standard normal; both are 3x3 row-major.
 * Brownian scaling maps any dt onto this (W by sqrt(dt), I1 by dt^1.5, I2 by dt^2.5).
 */
struct BridgeCoefficients {
  double ratio = 0.5;
  std::array<double, 9> gain{};
  std::array<double, 9> cholesky{};
};

/// Joint covariance of (W_L, I1_L, I2_L, W, I1, I2) on [0, 1] with the left piece [0, ratio].
std::array<double, 36> bridge_joint_covariance(double ratio);

BridgeCoefficients bridge_coefficients(double ratio);

/// Samples the left part of `inc` conditional on the whole; the right part makes combine exact.
std::pair<BrownianIncrement, BrownianIncrement> refine(const BrownianIncrement& inc,
                                                       CounterRng& rng, double ratio = 0.5);

/*!
 * Virtual dyadic Brownian tree on [0, horizon].
 *
 * Node (level, k) covers [k, k+1] * horizon / 2^level. Its children come from refine
 * with a generator keyed by (seed, k, path, level), so any node can be reproduced
 * without materialising the rest of the tree, and walking a level needs only
 * O(level) live increments.
 */
class BrownianTree {
 public:
  static constexpr int kMaxLevel = 30;

  BrownianTree(std::uint64_t seed, std::uint32_t path, double horizon, std::size_t d);

  const BrownianIncrement& root() const { return root_; }
  double horizon() const { return horizon_; }
  std::size_t dim() const { return d_; }
  std::uint64_t seed() const { return seed_; }
  std::uint32_t path() const { return path_; }

  std::pair<BrownianIncrement, BrownianIncrement> children(int level, std::uint64_t index,
                                                           const BrownianIncrement& node) const;
  BrownianIncrement node(int level, std::uint64_t index) const;

  using Visitor = std::function<void(std::uint64_t index, const BrownianIncrement&)>;
  /// Visits the 2^level nodes of `level` left to right.
  void for_each_at_level(int level, const Visitor& visit) const;

 private:
  void descend(int level, std::uint64_t index, const BrownianIncrement& node, int target,
               const Visitor& visit) const;

  std::uint64_t seed_;
  std::uint32_t path_;
  double horizon_;
  std::size_t d_;
  BrownianIncrement root_;
};

}  // namespace quicsort
