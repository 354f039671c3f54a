#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quicsort/brownian.hpp"

namespace quicsort {

/// Convexity and smoothness constants of a potential f: m I <= Hess f <= M1 I, plus optional
/// Lipschitz constants of the Hessian and third derivative.
struct PotentialMeta {
  std::size_t d = 0;
  double m = 0.0;
  double M1 = 1.0;
  std::optional<double> M2;
  std::optional<double> M3;

  void validate() const;
};

/// Gradient oracle. Implementations are immutable after construction and safe to share.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual const PotentialMeta& meta() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;

  std::size_t dim() const { return meta().d; }
  Vector gradient(std::span<const double> x) const;
};

/// f(x) = 1/2 sum_j curvature_j (x_j - center_j)^2
class QuadraticPotential final : public Potential {
 public:
  QuadraticPotential(Vector curvatures, Vector center);
  static QuadraticPotential isotropic(std::size_t d, double curvature = 1.0);
  using Potential::gradient;

  const PotentialMeta& meta() const override { return meta_; }
  double value(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> out) const override;

  const Vector& curvatures() const { return curvatures_; }
  const Vector& center() const { return center_; }

 private:
  Vector curvatures_;
  Vector center_;
  PotentialMeta meta_;
};

struct LogisticDataset {
  std::size_t rows = 0;
  std::size_t features = 0;
  std::vector<double> x;  // row-major rows x features
  std::vector<double> y;  // entries in {-1, +1}
  double feature_variance = 0.0;

  std::span<const double> row(std::size_t i) const { return {x.data() + i * features, features}; }
  void validate() const;
};

/// Population variance over every feature entry of the matrix.
double pooled_variance(std::span<const double> entries);

struct DatasetOptions {
  int label_column = 0;  // negative counts from the end (-1 = last column)
  char delimiter = ',';  // ' ' means any run of whitespace
  bool skip_header = false;
  bool standardize = false;
};

LogisticDataset load_dataset(const std::string& path, const DatasetOptions& options = {});
LogisticDataset parse_dataset(const std::string& text, const DatasetOptions& options = {});

/// Reproducible two-class dataset with a planted linear separator and label noise.
LogisticDataset synthetic_logistic_dataset(std::size_t rows, std::size_t features,
                                           std::uint64_t seed);

/*!
 * Bayesian logistic-regression posterior potential on (theta, b):
 *
 *   f = sum_i log(1 + exp(-y_i (<theta, x_i> + b))) + |theta|^2 / (4 Var) + b^2 / 2
 *
 * Parameters are packed as [theta_1 .. theta_p, b].
 */
class LogisticPotential final : public Potential {
 public:
  explicit LogisticPotential(LogisticDataset data);
  using Potential::gradient;

  const PotentialMeta& meta() const override { return meta_; }
  double value(std::span<const double> params) const override;
  void gradient(std::span<const double> params, std::span<double> out) const override;

  const LogisticDataset& data() const { return data_; }
  double prior_theta_variance() const { return 1.0 / (2.0 * data_.feature_variance); }

 private:
  LogisticDataset data_;
  PotentialMeta meta_;
};

/// Largest eigenvalue of sum_i x~_i x~_i^T with x~_i = (x_i, 1).
double augmented_gram_max_eigenvalue(const LogisticDataset& data);

/// Draw (theta, b) from the Gaussian prior: theta ~ N(0, I / (2 Var)), b ~ N(0, 1).
Vector sample_prior(const LogisticDataset& data, CounterRng& rng);

/// Wraps another potential and counts gradient calls.
class CountingPotential final : public Potential {
 public:
  explicit CountingPotential(const Potential& inner) : inner_(inner) {}
  using Potential::gradient;

  const PotentialMeta& meta() const override { return inner_.meta(); }
  double value(std::span<const double> x) const override { return inner_.value(x); }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    inner_.gradient(x, out);
  }

  std::uint64_t calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 private:
  const Potential& inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace quicsort
