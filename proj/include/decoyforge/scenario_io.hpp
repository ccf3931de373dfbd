#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "decoyforge/model.hpp"

namespace decoyforge {

/// Malformed scenario document: syntax errors, missing or unknown keys,
/// or references that do not resolve. The message names the offending
/// field or id (and the parse position for syntax errors).
class ScenarioParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses a scenario document. Comment lines (// or /* */) are permitted
/// and ignored, so generator metadata headers round-trip through tooling.
/// Ids are canonicalized to sorted order; validation is a separate step.
Scenario parse_scenario(std::string_view text);

/// Serializes with sorted ids and a fixed key order; output is
/// deterministic and parse(serialize(s)) == s for canonicalized scenarios.
/// Identity cost pairs (always 0) are omitted.
std::string serialize_scenario(const Scenario& scenario);

Scenario load_scenario_file(const std::string& path);
void write_scenario_file(const Scenario& scenario, const std::string& path,
                         const std::string& header_comment = "");

} // namespace decoyforge
