#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace docingest {

using OrderedJson = nlohmann::ordered_json;

/// Compact JSON text with floating-point numbers in shortest round-trip form
/// (std::to_chars), so output bytes are identical on every conforming
/// platform. Keys keep insertion order. Throws on non-finite numbers.
std::string dump_json(const OrderedJson& value);

/// Shortest round-trip text for a finite double.
std::string format_number(double value);

}  // namespace docingest
