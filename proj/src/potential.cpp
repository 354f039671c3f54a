#include "quicsort/potential.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace quicsort {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  if (delimiter == ' ') {
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) fields.push_back(tok);
    return fields;
  }
  std::string cur;
  for (char c : line) {
    if (c == delimiter) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_number(std::string field, std::size_t line_no) {
  const auto first = field.find_first_not_of(" \t\r");
  const auto last = field.find_last_not_of(" \t\r");
  if (first == std::string::npos) {
    throw std::runtime_error("dataset line " + std::to_string(line_no) + ": empty field");
  }
  field = field.substr(first, last - first + 1);
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw std::runtime_error("dataset line " + std::to_string(line_no) + ": cannot parse '" +
                             field + "' as a number");
  }
  return value;
}

}  // namespace

void PotentialMeta::validate() const {
  if (d == 0) throw std::invalid_argument("potential dimension must be at least 1");
  if (m < 0.0 || M1 <= 0.0) throw std::invalid_argument("potential constants must satisfy m >= 0, M1 > 0");
  if (m > M1) throw std::invalid_argument("potential constants must satisfy m <= M1");
  if ((M2 && *M2 < 0.0) || (M3 && *M3 < 0.0)) {
    throw std::invalid_argument("higher Lipschitz constants must be nonnegative");
  }
}

Vector Potential::gradient(std::span<const double> x) const {
  Vector g(x.size());
  gradient(x, g);
  return g;
}

QuadraticPotential::QuadraticPotential(Vector curvatures, Vector center)
    : curvatures_(std::move(curvatures)), center_(std::move(center)) {
  if (curvatures_.empty() || curvatures_.size() != center_.size()) {
    throw std::invalid_argument("QuadraticPotential: curvature and center sizes must match");
  }
  for (double c : curvatures_) {
    if (!(c > 0.0)) throw std::invalid_argument("QuadraticPotential: curvatures must be positive");
  }
  const auto [lo, hi] = std::minmax_element(curvatures_.begin(), curvatures_.end());
  meta_ = PotentialMeta{curvatures_.size(), *lo, *hi, 0.0, 0.0};
}

QuadraticPotential QuadraticPotential::isotropic(std::size_t d, double curvature) {
  return QuadraticPotential(Vector(d, curvature), Vector(d, 0.0));
}

double QuadraticPotential::value(std::span<const double> x) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = x[j] - center_[j];
    acc += curvatures_[j] * r * r;
  }
  return 0.5 * acc;
}

void QuadraticPotential::gradient(std::span<const double> x, std::span<double> out) const {
  if (x.size() != meta_.d || out.size() != meta_.d) {
    throw std::invalid_argument("QuadraticPotential: dimension mismatch");
  }
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = curvatures_[j] * (x[j] - center_[j]);
}

void LogisticDataset::validate() const {
  if (rows == 0 || features == 0) throw std::invalid_argument("dataset must have at least one row and one feature");
  if (x.size() != rows * features || y.size() != rows) {
    throw std::invalid_argument("dataset storage does not match its shape");
  }
  for (double label : y) {
    if (label != 1.0 && label != -1.0) throw std::invalid_argument("dataset labels must be -1 or +1");
  }
  if (!(feature_variance > 0.0)) throw std::invalid_argument("dataset feature variance must be positive");
}

double pooled_variance(std::span<const double> entries) {
  if (entries.empty()) return 0.0;
  double mean = 0.0;
  for (double v : entries) mean += v;
  mean /= static_cast<double>(entries.size());
  double acc = 0.0;
  for (double v : entries) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(entries.size());
}

LogisticDataset parse_dataset(const std::string& text, const DatasetOptions& options) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  std::vector<double> raw_labels;
  std::size_t width = 0;
  bool header_pending = options.skip_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t")] == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    auto fields = split_fields(line, options.delimiter);
    if (fields.size() < 2) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": need a label and at least one feature");
    }
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": expected " +
                               std::to_string(width) + " fields, found " +
                               std::to_string(fields.size()));
    }
    const int col = options.label_column < 0 ? static_cast<int>(width) + options.label_column
                                             : options.label_column;
    if (col < 0 || col >= static_cast<int>(width)) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": label column " +
                               std::to_string(options.label_column) + " out of range");
    }
    std::vector<double> feats;
    feats.reserve(width - 1);
    for (std::size_t k = 0; k < width; ++k) {
      const double v = parse_number(fields[k], line_no);
      if (static_cast<int>(k) == col) {
        raw_labels.push_back(v);
      } else {
        feats.push_back(v);
      }
    }
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw std::runtime_error("dataset contains no data rows");

  const bool zero_one = std::all_of(raw_labels.begin(), raw_labels.end(),
                                    [](double v) { return v == 0.0 || v == 1.0; });
  const bool signed_pm = std::all_of(raw_labels.begin(), raw_labels.end(),
                                     [](double v) { return v == -1.0 || v == 1.0; });
  if (!zero_one && !signed_pm) {
    throw std::runtime_error("dataset labels must all be in {0, 1} or all be in {-1, +1}");
  }

  LogisticDataset data;
  data.rows = rows.size();
  data.features = width - 1;
  data.x.reserve(data.rows * data.features);
  for (const auto& r : rows) data.x.insert(data.x.end(), r.begin(), r.end());
  data.y.reserve(data.rows);
  for (double v : raw_labels) data.y.push_back(zero_one ? (v == 1.0 ? 1.0 : -1.0) : v);

  if (options.standardize) {
    for (std::size_t j = 0; j < data.features; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < data.rows; ++i) mean += data.x[i * data.features + j];
      mean /= static_cast<double>(data.rows);
      double var = 0.0;
      for (std::size_t i = 0; i < data.rows; ++i) {
        const double r = data.x[i * data.features + j] - mean;
        var += r * r;
      }
      var /= static_cast<double>(data.rows);
      if (!(var > 0.0)) {
        throw std::runtime_error("cannot standardize: feature column " + std::to_string(j) +
                                 " is constant");
      }
      const double sd = std::sqrt(var);
      for (std::size_t i = 0; i < data.rows; ++i) {
        auto& v = data.x[i * data.features + j];
        v = (v - mean) / sd;
      }
    }
  }
  data.feature_variance = pooled_variance(data.x);
  if (!(data.feature_variance > 0.0)) {
    throw std::runtime_error("dataset features have zero variance");
  }
  return data;
}

LogisticDataset load_dataset(const std::string& path, const DatasetOptions& options) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open dataset file '" + path + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  try {
    return parse_dataset(buf.str(), options);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

LogisticDataset synthetic_logistic_dataset(std::size_t rows, std::size_t features,
                                           std::uint64_t seed) {
  if (rows == 0 || features == 0) throw std::invalid_argument("synthetic dataset needs rows and features");
  CounterRng weight_rng(seed, 0, 0, stream_tag(StreamKind::Dataset, 1));
  Vector theta(features);
  weight_rng.fill_normal(theta, 1.0);
  const double bias = 0.5 * weight_rng.normal();

  LogisticDataset data;
  data.rows = rows;
  data.features = features;
  data.x.resize(rows * features);
  data.y.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    CounterRng rng(seed, static_cast<std::uint32_t>(i), 0, stream_tag(StreamKind::Dataset, 0));
    double logit = bias;
    for (std::size_t j = 0; j < features; ++j) {
      const double v = rng.normal();
      data.x[i * features + j] = v;
      logit += theta[j] * v;
    }
    data.y[i] = rng.uniform() < sigmoid(logit) ? 1.0 : -1.0;
  }
  data.feature_variance = pooled_variance(data.x);
  return data;
}

double augmented_gram_max_eigenvalue(const LogisticDataset& data) {
  const auto p = static_cast<Eigen::Index>(data.features + 1);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd row(p);
  for (std::size_t i = 0; i < data.rows; ++i) {
    for (std::size_t j = 0; j < data.features; ++j) row(j) = data.x[i * data.features + j];
    row(p - 1) = 1.0;
    gram.noalias() += row * row.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

LogisticPotential::LogisticPotential(LogisticDataset data) : data_(std::move(data)) {
  data_.validate();
  const double prior_curv = 1.0 / (2.0 * data_.feature_variance);
  meta_.d = data_.features + 1;
  meta_.m = std::min(prior_curv, 1.0);
  meta_.M1 = 0.25 * augmented_gram_max_eigenvalue(data_) + std::max(prior_curv, 1.0);
}

double LogisticPotential::value(std::span<const double> params) const {
  if (params.size() != meta_.d) throw std::invalid_argument("LogisticPotential: dimension mismatch");
  const std::size_t p = data_.features;
  const double b = params[p];
  double acc = 0.0;
  for (std::size_t i = 0; i < data_.rows; ++i) {
    const auto xi = data_.row(i);
    double z = b;
    for (std::size_t j = 0; j < p; ++j) z += params[j] * xi[j];
    acc += softplus(-data_.y[i] * z);
  }
  double theta_sq = 0.0;
  for (std::size_t j = 0; j < p; ++j) theta_sq += params[j] * params[j];
  return acc + theta_sq / (4.0 * data_.feature_variance) + 0.5 * b * b;
}

void LogisticPotential::gradient(std::span<const double> params, std::span<double> out) const {
  if (params.size() != meta_.d || out.size() != meta_.d) {
    throw std::invalid_argument("LogisticPotential: dimension mismatch");
  }
  const std::size_t p = data_.features;
  const double b = params[p];
  const double prior_curv = 1.0 / (2.0 * data_.feature_variance);
  for (std::size_t j = 0; j < p; ++j) out[j] = prior_curv * params[j];
  out[p] = b;
  for (std::size_t i = 0; i < data_.rows; ++i) {
    const auto xi = data_.row(i);
    double z = b;
    for (std::size_t j = 0; j < p; ++j) z += params[j] * xi[j];
    const double yi = data_.y[i];
    // d/dz log(1 + exp(-y z)) = -y sigmoid(-y z)
    const double coef = -yi * sigmoid(-yi * z);
    for (std::size_t j = 0; j < p; ++j) out[j] += coef * xi[j];
    out[p] += coef;
  }
}

Vector sample_prior(const LogisticDataset& data, CounterRng& rng) {
  if (!(data.feature_variance > 0.0)) throw std::invalid_argument("sample_prior: feature variance must be positive");
  Vector params(data.features + 1);
  const double sd = std::sqrt(1.0 / (2.0 * data.feature_variance));
  for (std::size_t j = 0; j < data.features; ++j) params[j] = sd * rng.normal();
  params[data.features] = rng.normal();
  return params;
}

}  // namespace quicsort
