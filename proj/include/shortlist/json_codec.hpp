#pragma once

#include <json.hpp>

#include "shortlist/multi_party.hpp"
#include "shortlist/oracle.hpp"
#include "shortlist/rational.hpp"
#include "shortlist/session.hpp"
#include "shortlist/simulator.hpp"
#include "shortlist/two_party.hpp"

// JSON renderings shared by the HTTP service and the CLI. Rationals are
// {"num", "den", "decimal"} with all three as strings, big integers are
// decimal strings.
namespace shortlist {

inline constexpr int kDecimalDigits = 12;

nlohmann::json to_json(const Rational& value);

/// Accepts the object form above (only num and den are read). Throws
/// std::invalid_argument on anything else.
Rational rational_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ProtocolReport& report);
nlohmann::json to_json(const MultiPartyReport& report);
nlohmann::json to_json(const OracleResult& result);
nlohmann::json to_json(const SimulationSummary& summary);
nlohmann::json to_json(const SessionState& state);
nlohmann::json to_json(const SessionReport& report);

/// Two-party analysis as served by the API: the report for `k`, with the
/// optimal integer K and the ideal real K alongside.
nlohmann::json two_party_analysis(std::int64_t n, std::optional<std::int64_t> k);

/// s-party analysis: real and integer schedules with per-person expectations.
nlohmann::json schedule_analysis(std::int64_t n, std::int64_t s);

} // namespace shortlist
