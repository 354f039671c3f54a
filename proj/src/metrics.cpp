#include "quicsort/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <omp.h>

namespace quicsort {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double r = a[k] - b[k];
    acc += r * r;
  }
  return std::sqrt(acc);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double r = a[k] - b[k];
    acc += r * r;
  }
  return acc;
}

double sum_sq_weights(const EmpiricalDistribution& p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += p.weight(i) * p.weight(i);
  return acc;
}

constexpr std::size_t kColumnBlock = 256;

// sum_i w_i sum_j w'_j |x_i - y_j|, rows in parallel, each row summed left to right.
double weighted_pair_sum(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  std::vector<double> row_sum(a.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto xi = a.point(static_cast<std::size_t>(i));
    double acc = 0.0;
    for (std::size_t j0 = 0; j0 < b.size(); j0 += kColumnBlock) {
      const std::size_t j1 = std::min(b.size(), j0 + kColumnBlock);
      for (std::size_t j = j0; j < j1; ++j) acc += b.weight(j) * distance(xi, b.point(j));
    }
    row_sum[static_cast<std::size_t>(i)] = acc;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a.weight(i) * row_sum[i];
  return total;
}

void check_same_dim(const EmpiricalDistribution& mu, const EmpiricalDistribution& nu) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("distributions have different dimensions");
}

double combine_energy_terms(double cross, double self_mu, double self_nu,
                            const EmpiricalDistribution& mu, const EmpiricalDistribution& nu,
                            EnergyEstimator estimator) {
  if (estimator == EnergyEstimator::UStatistic) {
    const double norm_mu = 1.0 - sum_sq_weights(mu);
    const double norm_nu = 1.0 - sum_sq_weights(nu);
    self_mu = norm_mu > 0.0 ? self_mu / norm_mu : 0.0;
    self_nu = norm_nu > 0.0 ? self_nu / norm_nu : 0.0;
  }
  return 2.0 * cross - self_mu - self_nu;
}

}  // namespace

EmpiricalDistribution::EmpiricalDistribution(std::size_t d, std::vector<double> samples)
    : d_(d), n_(d == 0 ? 0 : samples.size() / d), samples_(std::move(samples)), uniform_(true) {
  if (d_ == 0 || n_ == 0 || samples_.size() != n_ * d_) {
    throw std::invalid_argument("EmpiricalDistribution: need at least one point of dimension >= 1");
  }
  weights_.assign(n_, 1.0 / static_cast<double>(n_));
}

EmpiricalDistribution::EmpiricalDistribution(std::size_t d, std::vector<double> samples,
                                             std::vector<double> weights)
    : EmpiricalDistribution(d, std::move(samples)) {
  if (weights.size() != n_) throw std::invalid_argument("EmpiricalDistribution: one weight per point");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("EmpiricalDistribution: weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("EmpiricalDistribution: weights sum to zero");
  for (auto& w : weights) w /= total;
  weights_ = std::move(weights);
  uniform_ = std::all_of(weights_.begin(), weights_.end(),
                         [&](double w) { return w == weights_.front(); });
}

EmpiricalDistribution EmpiricalDistribution::subsample(std::size_t count) const {
  if (count == 0 || count > n_) throw std::invalid_argument("subsample: invalid count");
  return EmpiricalDistribution(d_, std::vector<double>(samples_.begin(),
                                                       samples_.begin() + count * d_));
}

EmpiricalDistribution EmpiricalDistribution::subsample(std::size_t count, std::uint64_t seed) const {
  if (count == 0 || count > n_) throw std::invalid_argument("subsample: invalid count");
  std::vector<std::size_t> idx(n_);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  CounterRng rng(seed, 0, 0, stream_tag(StreamKind::Subsample));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (n_ - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<double> out;
  out.reserve(count * d_);
  for (std::size_t i = 0; i < count; ++i) {
    const auto p = point(idx[i]);
    out.insert(out.end(), p.begin(), p.end());
  }
  return EmpiricalDistribution(d_, std::move(out));
}

double energy_distance_sq(const EmpiricalDistribution& mu, const EmpiricalDistribution& nu,
                          EnergyEstimator estimator) {
  check_same_dim(mu, nu);
  const double cross = weighted_pair_sum(mu, nu);
  const double self_mu = weighted_pair_sum(mu, mu);
  const double self_nu = weighted_pair_sum(nu, nu);
  return combine_energy_terms(cross, self_mu, self_nu, mu, nu, estimator);
}

namespace serial {

double energy_distance_sq(const EmpiricalDistribution& mu, const EmpiricalDistribution& nu,
                          EnergyEstimator estimator) {
  check_same_dim(mu, nu);
  auto pair_sum = [](const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        acc += a.weight(i) * b.weight(j) * distance(a.point(i), b.point(j));
      }
    }
    return acc;
  };
  return combine_energy_terms(pair_sum(mu, nu), pair_sum(mu, mu), pair_sum(nu, nu), mu, nu,
                              estimator);
}

}  // namespace serial

std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw std::invalid_argument("solve_assignment: cost must be n x n");
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is a virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      const double* crow = cost.data() + (i0 - 1) * n;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = crow[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

double wasserstein2(const EmpiricalDistribution& mu, const EmpiricalDistribution& nu) {
  check_same_dim(mu, nu);
  if (mu.size() != nu.size()) {
    throw std::invalid_argument("wasserstein2: sample counts differ; subsample to equal size first");
  }
  if (!mu.uniform() || !nu.uniform()) throw std::invalid_argument("wasserstein2: weights must be uniform");
  const std::size_t n = mu.size();
  if (n > kMaxAssignmentSize) {
    throw std::invalid_argument("wasserstein2: " + std::to_string(n) + " points exceeds the exact solver limit of " +
                                std::to_string(kMaxAssignmentSize) + "; subsample first");
  }
  std::vector<double> cost(n * n);
  const auto ns = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < ns; ++i) {
    const auto xi = mu.point(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < n; ++j) {
      cost[static_cast<std::size_t>(i) * n + j] = squared_distance(xi, nu.point(j));
    }
  }
  const auto assignment = solve_assignment(cost, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + assignment[i]];
  return std::sqrt(total / static_cast<double>(n));
}

void MomentAccumulator::add(std::span<const double> z) {
  double sq = 0.0;
  for (double v : z) sq += v * v;
  ++count_;
  s2_ += sq;
  s4_ += sq * sq;
  s6_ += sq * sq * sq;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  count_ += other.count_;
  s2_ += other.s2_;
  s4_ += other.s4_;
  s6_ += other.s6_;
}

NormMoments MomentAccumulator::result() const {
  NormMoments m;
  if (count_ == 0) return m;
  const double n = static_cast<double>(count_);
  m.mean_sq = s2_ / n;
  m.l2 = std::sqrt(s2_ / n);
  m.l4 = std::pow(s4_ / n, 0.25);
  m.l6 = std::cbrt(std::sqrt(s6_ / n));
  return m;
}

MomentStats moment_stats(const EmpiricalDistribution& velocities,
                         const EmpiricalDistribution& positions, const Potential& pot) {
  MomentAccumulator vel, grad;
  for (std::size_t i = 0; i < velocities.size(); ++i) vel.add(velocities.point(i));
  Vector g(pot.dim());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    pot.gradient(positions.point(i), g);
    grad.add(g);
  }
  return {vel.result(), grad.result()};
}

}  // namespace quicsort
