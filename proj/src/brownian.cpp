#include "quicsort/brownian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace quicsort {

namespace {

void require_positive_dt(double dt, const char* where) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument(std::string(where) + ": interval length must be positive, got " +
                                std::to_string(dt));
  }
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// Cov of kernels (b-s)^i/i! on [0,rho] and (1-s)^j/j! on [0,1]:
// int_0^rho t^i (c+t)^j dt / (i! j!) with t = rho - s and c = 1 - rho.
double cross_kernel_integral(int i, int j, double rho) {
  const double c = 1.0 - rho;
  double acc = 0.0;
  for (int k = 0; k <= j; ++k) {
    acc += binomial(j, k) * std::pow(c, j - k) * std::pow(rho, i + k + 1) / (i + k + 1);
  }
  return acc / (factorial(i) * factorial(j));
}

double self_kernel_integral(int i, int j, double length) {
  return std::pow(length, i + j + 1) / ((i + j + 1) * factorial(i) * factorial(j));
}

}  // namespace

BrownianIncrement BrownianIncrement::zero(double dt, std::size_t d) {
  return BrownianIncrement{dt, Vector(d, 0.0), Vector(d, 0.0), Vector(d, 0.0), std::nullopt};
}

BrownianIncrement sample_increment(CounterRng& rng, double dt, std::size_t d,
                                   bool with_third_coefficient) {
  require_positive_dt(dt, "sample_increment");
  if (d == 0) throw std::invalid_argument("sample_increment: dimension must be at least 1");
  BrownianIncrement inc = BrownianIncrement::zero(dt, d);
  rng.fill_normal(inc.W, std::sqrt(dt));
  rng.fill_normal(inc.H, std::sqrt(dt / 12.0));
  rng.fill_normal(inc.K, std::sqrt(dt / 720.0));
  if (with_third_coefficient) {
    Vector m(d);
    rng.fill_normal(m, std::sqrt(dt / 100800.0));
    inc.M = std::move(m);
  }
  return inc;
}

TimeIntegrals to_time_integrals(const BrownianIncrement& inc) {
  const std::size_t d = inc.dim();
  const double h = inc.dt;
  TimeIntegrals ti{h, inc.W, Vector(d), Vector(d)};
  for (std::size_t i = 0; i < d; ++i) {
    ti.I1[i] = h * (0.5 * inc.W[i] + inc.H[i]);
    ti.I2[i] = h * h * (inc.W[i] / 6.0 + 0.5 * inc.H[i] + inc.K[i]);
  }
  return ti;
}

BrownianIncrement from_time_integrals(const TimeIntegrals& ti) {
  require_positive_dt(ti.dt, "from_time_integrals");
  const std::size_t d = ti.W.size();
  if (ti.I1.size() != d || ti.I2.size() != d) {
    throw std::invalid_argument("from_time_integrals: dimension mismatch");
  }
  const double h = ti.dt;
  BrownianIncrement inc = BrownianIncrement::zero(h, d);
  inc.W = ti.W;
  for (std::size_t i = 0; i < d; ++i) {
    inc.H[i] = ti.I1[i] / h - 0.5 * ti.W[i];
    inc.K[i] = ti.I2[i] / (h * h) - ti.W[i] / 6.0 - 0.5 * inc.H[i];
  }
  return inc;
}

BrownianIncrement combine(const BrownianIncrement& left, const BrownianIncrement& right) {
  const std::size_t d = left.dim();
  if (right.dim() != d) throw std::invalid_argument("combine: dimension mismatch");
  const TimeIntegrals l = to_time_integrals(left);
  const TimeIntegrals r = to_time_integrals(right);
  const double dr = right.dt;
  TimeIntegrals out{left.dt + right.dt, Vector(d), Vector(d), Vector(d)};
  for (std::size_t i = 0; i < d; ++i) {
    out.W[i] = l.W[i] + r.W[i];
    out.I1[i] = l.I1[i] + r.I1[i] + dr * l.W[i];
    out.I2[i] = l.I2[i] + r.I2[i] + dr * l.I1[i] + 0.5 * dr * dr * l.W[i];
  }
  return from_time_integrals(out);
}

std::array<double, 36> bridge_joint_covariance(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("bridge_joint_covariance: split ratio must lie in (0, 1)");
  }
  std::array<double, 36> cov{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      cov[i * 6 + j] = self_kernel_integral(i, j, ratio);
      cov[(i + 3) * 6 + (j + 3)] = self_kernel_integral(i, j, 1.0);
      const double c = cross_kernel_integral(i, j, ratio);
      cov[i * 6 + (j + 3)] = c;
      cov[(j + 3) * 6 + i] = c;
    }
  }
  return cov;
}

BridgeCoefficients bridge_coefficients(double ratio) {
  const auto joint = bridge_joint_covariance(ratio);
  Eigen::Matrix<double, 6, 6, Eigen::RowMajor> cov;
  for (int k = 0; k < 36; ++k) cov(k / 6, k % 6) = joint[k];
  const Eigen::Matrix3d s_ll = cov.block<3, 3>(0, 0);
  const Eigen::Matrix3d s_lg = cov.block<3, 3>(0, 3);
  const Eigen::Matrix3d s_gg = cov.block<3, 3>(3, 3);

  const Eigen::LDLT<Eigen::Matrix3d> gg(s_gg);
  const Eigen::Matrix3d gain = gg.solve(s_lg.transpose()).transpose();
  Eigen::Matrix3d cond = s_ll - gain * s_lg.transpose();
  cond = 0.5 * (cond + cond.transpose());
  const Eigen::LLT<Eigen::Matrix3d> llt(cond);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("bridge_coefficients: conditional covariance is not positive definite");
  }
  const Eigen::Matrix3d chol = llt.matrixL();

  BridgeCoefficients out;
  out.ratio = ratio;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out.gain[r * 3 + c] = gain(r, c);
      out.cholesky[r * 3 + c] = chol(r, c);
    }
  }
  return out;
}

std::pair<BrownianIncrement, BrownianIncrement> refine(const BrownianIncrement& inc,
                                                       CounterRng& rng, double ratio) {
  require_positive_dt(inc.dt, "refine");
  static const BridgeCoefficients kHalf = bridge_coefficients(0.5);
  const BridgeCoefficients coeffs = ratio == 0.5 ? kHalf : bridge_coefficients(ratio);

  const std::size_t d = inc.dim();
  const double h = inc.dt;
  const double s0 = std::sqrt(h);
  const double s1 = h * s0;
  const double s2 = h * s1;
  const std::array<double, 3> scale{s0, s1, s2};

  const TimeIntegrals whole = to_time_integrals(inc);
  TimeIntegrals left{ratio * h, Vector(d), Vector(d), Vector(d)};
  std::array<double, 3> z{};
  for (std::size_t i = 0; i < d; ++i) {
    const std::array<double, 3> y{whole.W[i] / s0, whole.I1[i] / s1, whole.I2[i] / s2};
    for (auto& v : z) v = rng.normal();
    std::array<double, 3> x{};
    for (int r = 0; r < 3; ++r) {
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) {
        acc += coeffs.gain[r * 3 + c] * y[c] + coeffs.cholesky[r * 3 + c] * z[c];
      }
      x[r] = acc * scale[r];
    }
    left.W[i] = x[0];
    left.I1[i] = x[1];
    left.I2[i] = x[2];
  }

  const double dr = h - left.dt;
  TimeIntegrals right{dr, Vector(d), Vector(d), Vector(d)};
  for (std::size_t i = 0; i < d; ++i) {
    right.W[i] = whole.W[i] - left.W[i];
    right.I1[i] = whole.I1[i] - left.I1[i] - dr * left.W[i];
    right.I2[i] = whole.I2[i] - left.I2[i] - dr * left.I1[i] - 0.5 * dr * dr * left.W[i];
  }
  return {from_time_integrals(left), from_time_integrals(right)};
}

BrownianTree::BrownianTree(std::uint64_t seed, std::uint32_t path, double horizon, std::size_t d)
    : seed_(seed), path_(path), horizon_(horizon), d_(d) {
  CounterRng rng(seed, 0, path, stream_tag(StreamKind::TreeRoot));
  root_ = sample_increment(rng, horizon, d);
}

std::pair<BrownianIncrement, BrownianIncrement> BrownianTree::children(
    int level, std::uint64_t index, const BrownianIncrement& node) const {
  CounterRng rng(seed_, static_cast<std::uint32_t>(index), path_,
                 stream_tag(StreamKind::Bridge, static_cast<std::uint32_t>(level)));
  return refine(node, rng);
}

BrownianIncrement BrownianTree::node(int level, std::uint64_t index) const {
  if (level < 0 || level > kMaxLevel) throw std::invalid_argument("BrownianTree: level out of range");
  if (index >= (std::uint64_t{1} << level)) {
    throw std::invalid_argument("BrownianTree: node index out of range");
  }
  BrownianIncrement current = root_;
  std::uint64_t k = 0;
  for (int l = 0; l < level; ++l) {
    const bool go_right = (index >> (level - 1 - l)) & 1u;
    auto [left, right] = children(l, k, current);
    current = go_right ? std::move(right) : std::move(left);
    k = 2 * k + (go_right ? 1 : 0);
  }
  return current;
}

void BrownianTree::descend(int level, std::uint64_t index, const BrownianIncrement& node,
                           int target, const Visitor& visit) const {
  if (level == target) {
    visit(index, node);
    return;
  }
  auto [left, right] = children(level, index, node);
  descend(level + 1, 2 * index, left, target, visit);
  descend(level + 1, 2 * index + 1, right, target, visit);
}

void BrownianTree::for_each_at_level(int level, const Visitor& visit) const {
  if (level < 0 || level > kMaxLevel) throw std::invalid_argument("BrownianTree: level out of range");
  descend(0, 0, root_, level, visit);
}

}  // namespace quicsort
