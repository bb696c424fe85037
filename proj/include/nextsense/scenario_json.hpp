// SPDX-License-Identifier: Apache-2.0
//
// JSON document form of ExperimentSpec. Field names follow the experiment
// parameter names (units: MHz, kHz, dBm, m, m/s, degrees, s, ns, Hz).
// Missing fields take their defaults; a malformed document raises
// SpecParseError naming the offending field.

#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "nextsense/scenario.hpp"

namespace nextsense::scenario {

inline constexpr int kSpecFormatVersion = 1;

class SpecParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

nlohmann::json to_json(const ExperimentSpec& spec);
nlohmann::json to_json(const channel::Tap& tap);
ExperimentSpec spec_from_json(const nlohmann::json& doc);
ExperimentSpec parse_spec(std::string_view text);
std::string dump_spec(const ExperimentSpec& spec, int indent = 2);

nlohmann::json to_json(const std::vector<Violation>& violations);

/// Per-UE trajectories for the movement-zone preview.
nlohmann::json preview_json(const ExperimentSpec& spec);

} // namespace nextsense::scenario
