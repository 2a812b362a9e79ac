#pragma once

#include <string>

#include <json.hpp>

#include "types.hpp"

namespace ivtest {

inline constexpr const char* kToolVersion = "0.1.0";

/// Machine-readable run report. Field order is fixed; reports from identical
/// configs and seeds are byte-identical. Timing is excluded unless requested,
/// so repeated runs compare equal.
nlohmann::ordered_json report_to_json(const Dataset& data, const TestConfig& config,
                                      const NuMeasure& nu, const TestResult& result,
                                      double elapsed_seconds, bool include_timing);

std::string report_to_text(const Dataset& data, const TestConfig& config, const NuMeasure& nu,
                           const TestResult& result, double elapsed_seconds);

}  // namespace ivtest
