#include "learnstory/format.hpp"

#include <fmt/format.h>

#include <cmath>

namespace learnstory::fmtx {

std::string number(double value, int max_decimals) {
  if (value == 0.0) value = 0.0;  // drop negative zero
  auto s = fmt::format("{:.{}f}", value, max_decimals);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string signed_number(double value, int max_decimals) {
  auto s = number(value, max_decimals);
  if (s != "0" && s.front() != '-') s.insert(s.begin(), '+');
  return s;
}

std::string percent(double fraction) { return number(fraction * 100.0, 2) + "%"; }

std::string seconds(double value) { return number(value, 0) + " s"; }

std::string interval_label(std::size_t index) { return "week " + std::to_string(index + 1); }

}  // namespace learnstory::fmtx
