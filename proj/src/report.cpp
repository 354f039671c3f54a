#include "quicsort/report.hpp"

#include <charconv>
#include <ostream>

namespace quicsort {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

void header(std::ostream& out, const std::string& experiment, const char* columns) {
  out << "# quicsort-report v" << kCsvSchemaVersion << ' ' << experiment << '\n' << columns << '\n';
}

nlohmann::json moments_json(const NormMoments& m) {
  return {{"mean_sq", m.mean_sq}, {"l2", m.l2}, {"l4", m.l4}, {"l6", m.l6}};
}

}  // namespace

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
  header(out, "converge", "method,N,rms_error");
  for (const auto& mc : report.methods) {
    for (std::size_t i = 0; i < mc.steps.size(); ++i) {
      out << method_name(mc.method) << ',' << mc.steps[i] << ',' << format_double(mc.rms_errors[i])
          << '\n';
    }
  }
}

void write_mixing_csv(std::ostream& out, const std::vector<MixingReport>& reports,
                      const std::string& experiment) {
  header(out, experiment, "method,grad_evals,energy_dist,w2");
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      out << method_name(r.method) << ',' << row.gradient_evaluations << ','
          << format_double(row.energy_distance) << ',' << format_double(row.wasserstein2) << '\n';
    }
  }
}

void write_contractivity_csv(std::ostream& out, const std::vector<double>& distances) {
  header(out, "contract", "step,distance");
  for (std::size_t n = 0; n < distances.size(); ++n) {
    out << n << ',' << format_double(distances[n]) << '\n';
  }
}

void write_stationarity_csv(std::ostream& out, const StationarityReport& report) {
  header(out, "stationary", "statistic,value");
  auto row = [&](const char* name, double v) { out << name << ',' << format_double(v) << '\n'; };
  row("mean_v_sq", report.velocity.mean_sq);
  row("mean_x_sq", report.position.mean_sq);
  row("mean_grad_sq", report.gradient.mean_sq);
  row("v_l2", report.velocity.l2);
  row("v_l4", report.velocity.l4);
  row("v_l6", report.velocity.l6);
  row("grad_l2", report.gradient.l2);
  row("grad_l4", report.gradient.l4);
  row("grad_l6", report.gradient.l6);
  row("samples", static_cast<double>(report.samples));
}

nlohmann::json to_json(const ConvergenceReport& report) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& mc : report.methods) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < mc.steps.size(); ++i) {
      rows.push_back({{"N", mc.steps[i]}, {"rms_error", mc.rms_errors[i]}});
    }
    methods.push_back({{"method", method_name(mc.method)},
                       {"rows", rows},
                       {"slope", mc.fit.slope},
                       {"intercept", mc.fit.intercept},
                       {"order", mc.fit.order()},
                       {"fit_range", {mc.fit_min_steps, mc.fit_max_steps}}});
  }
  return {{"paths", report.paths},     {"horizon", report.horizon},
          {"seed", report.seed},       {"fine_level", report.fine_level},
          {"gamma", report.gamma},     {"u", report.u},
          {"methods", methods}};
}

nlohmann::json to_json(const MixingReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"grad_evals", r.gradient_evaluations},
                    {"steps", r.steps},
                    {"energy_dist", r.energy_distance},
                    {"w2", r.wasserstein2}});
  }
  return {{"method", method_name(report.method)},
          {"h", report.h},
          {"chains", report.chains},
          {"rows", rows}};
}

nlohmann::json to_json(const StationarityReport& report) {
  return {{"samples", report.samples},
          {"velocity", moments_json(report.velocity)},
          {"position", moments_json(report.position)},
          {"gradient", moments_json(report.gradient)}};
}

}  // namespace quicsort
