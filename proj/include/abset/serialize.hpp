#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "abset/asgraph.hpp"
#include "abset/dynamics.hpp"
#include "abset/search.hpp"

namespace abset {

using Json = nlohmann::ordered_json;

/// {"num": p, "den": q}; entries that overflow int64 fall back to strings.
Json rational_json(const Rational& q);

Json validation_report_json(const std::string& name, const ValidationReport& rep);

Json sweep_report_json(const SweepReport& report);

Json threshold_result_json(const std::string& name, const ValidationReport& rep,
                           const RoutingSystem& rs, const ThresholdResult& result,
                           bool certified, std::optional<std::int64_t> wall_ms);

inline constexpr const char* kThresholdCsvHeader =
    "name,a,b,N,tau_num,tau_den,deactivation_lch";

/// One CSV row per AS; deactivation_lch is a channel saturation level
/// strictly below |tau| (deactivating the set) when tau < 0, else "none".
std::string threshold_result_csv_row(const std::string& name, const ValidationReport& rep,
                                     const RoutingSystem& rs, const ThresholdResult& result);

}  // namespace abset
