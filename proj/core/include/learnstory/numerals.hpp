#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace learnstory {

// Decimal numerals ("25", "93.75") appearing in free text. Signs are not part
// of a numeral.
std::set<std::string> extract_numerals(std::string_view text);

// Numerals found anywhere in a JSON value: inside strings, and every number
// rendered the way the serializer renders it.
std::set<std::string> collect_numerals(const nlohmann::json& value);

// Numerals of text that the layer does not contain.
std::vector<std::string> unsupported_numerals(std::string_view text,
                                              const std::set<std::string>& layer);

}  // namespace learnstory
