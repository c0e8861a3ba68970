#pragma once

#include <optional>
#include <string>

namespace learnstory::fmtx {

// 0.9375 -> "93.75%", 0.25 -> "25%" (at most two decimals, trailing zeros trimmed).
std::string percent(double fraction);
// Fixed decimals with trailing zeros trimmed: number(2.2804, 4) -> "2.2804".
std::string number(double value, int max_decimals = 2);
std::string signed_number(double value, int max_decimals = 2);
std::string seconds(double value);  // "120 s"
std::string interval_label(std::size_t index);  // 0 -> "week 1"

}  // namespace learnstory::fmtx
