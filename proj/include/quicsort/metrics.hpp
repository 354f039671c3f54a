#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "quicsort/brownian.hpp"
#include "quicsort/potential.hpp"

namespace quicsort {

/// Finite weighted point cloud in R^d; samples are row-major n x d.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution(std::size_t d, std::vector<double> samples);
  EmpiricalDistribution(std::size_t d, std::vector<double> samples, std::vector<double> weights);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }
  std::span<const double> point(std::size_t i) const { return {samples_.data() + i * d_, d_}; }
  double weight(std::size_t i) const { return weights_[i]; }
  bool uniform() const { return uniform_; }
  const std::vector<double>& samples() const { return samples_; }

  /// First `count` points, or a seeded draw without replacement when `seed` is given.
  EmpiricalDistribution subsample(std::size_t count) const;
  EmpiricalDistribution subsample(std::size_t count, std::uint64_t seed) const;

 private:
  std::size_t d_;
  std::size_t n_;
  std::vector<double> samples_;
  std::vector<double> weights_;
  bool uniform_;
};

enum class EnergyEstimator {
  VStatistic,  // all pairs including i = j
  UStatistic,  // within-sample sums exclude the diagonal
};

/*!
 * Squared energy distance 2 E|X - Y| - E|X - X'| - E|Y - Y'|.
 *
 * Blocked over rows and parallelised with OpenMP. Each row's partial sum is
 * accumulated in a fixed order and rows are reduced serially, so the result does
 * not depend on the thread count.
 */
double energy_distance_sq(const EmpiricalDistribution& mu, const EmpiricalDistribution& nu,
                          EnergyEstimator estimator = EnergyEstimator::VStatistic);

/// 2-Wasserstein distance between two uniform clouds of equal size via exact assignment.
double wasserstein2(const EmpiricalDistribution& mu, const EmpiricalDistribution& nu);

inline constexpr std::size_t kMaxAssignmentSize = 4096;

/// Min-cost perfect matching on a dense n x n row-major cost matrix (shortest augmenting
/// paths with potentials). Returns the column assigned to each row.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

/// L2, L4 and L6 norms (E|z|^p)^(1/p) of a set of vectors.
struct NormMoments {
  double l2 = 0.0;
  double l4 = 0.0;
  double l6 = 0.0;
  double mean_sq = 0.0;  // E|z|^2
};

struct MomentStats {
  NormMoments velocity;
  NormMoments gradient;
};

/// Streaming accumulator of E|z|^2, E|z|^4, E|z|^6.
class MomentAccumulator {
 public:
  void add(std::span<const double> z);
  void merge(const MomentAccumulator& other);
  NormMoments result() const;
  std::size_t count() const { return count_; }

 private:
  std::size_t count_ = 0;
  double s2_ = 0.0;
  double s4_ = 0.0;
  double s6_ = 0.0;
};

/// Norm moments of velocity samples and of grad f at position samples (weights ignored).
MomentStats moment_stats(const EmpiricalDistribution& velocities,
                         const EmpiricalDistribution& positions, const Potential& pot);

namespace serial {

/// Reference energy distance: a plain all-pairs double loop.
double energy_distance_sq(const EmpiricalDistribution& mu, const EmpiricalDistribution& nu,
                          EnergyEstimator estimator = EnergyEstimator::VStatistic);

}  // namespace serial

}  // namespace quicsort
