#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "quicsort/harness.hpp"

namespace quicsort {

inline constexpr const char* kCsvSchemaVersion = "1";

/// "# quicsort-report v1 converge" followed by method,N,rms_error rows.
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);
void write_mixing_csv(std::ostream& out, const std::vector<MixingReport>& reports,
                      const std::string& experiment);
void write_contractivity_csv(std::ostream& out, const std::vector<double>& distances);
void write_stationarity_csv(std::ostream& out, const StationarityReport& report);

nlohmann::json to_json(const ConvergenceReport& report);
nlohmann::json to_json(const MixingReport& report);
nlohmann::json to_json(const StationarityReport& report);

/// Shortest decimal text that round-trips the double.
std::string format_double(double v);

}  // namespace quicsort
