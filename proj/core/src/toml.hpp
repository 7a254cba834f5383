#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace morphkit::detail {

// Parses the TOML subset used by run configs into an ordered JSON object:
// [table] and [a.b] headers, bare or quoted keys, dotted keys, basic and
// literal strings, integers, floats, booleans and (possibly multi-line)
// arrays. Inline tables, dates and multi-line strings are rejected.
// Errors throw ParseError with the origin and 1-based line.
nlohmann::ordered_json parse_toml(std::string_view text, const std::string& origin);

}  // namespace morphkit::detail
