#include "learnstory/numerals.hpp"

#include <cctype>

namespace learnstory {

std::set<std::string> extract_numerals(std::string_view text) {
  std::set<std::string> out;
  std::size_t i = 0;
  auto digit = [&](std::size_t k) {
    return k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]));
  };
  while (i < text.size()) {
    if (!digit(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (digit(j)) ++j;
    if (j + 1 < text.size() && text[j] == '.' && digit(j + 1)) {
      ++j;
      while (digit(j)) ++j;
    }
    out.emplace(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::set<std::string> collect_numerals(const nlohmann::json& value) {
  std::set<std::string> out;
  auto add_text = [&](std::string_view s) {
    auto found = extract_numerals(s);
    out.insert(found.begin(), found.end());
  };
  switch (value.type()) {
    case nlohmann::json::value_t::object:
      for (const auto& [k, v] : value.items()) {
        add_text(k);
        auto inner = collect_numerals(v);
        out.insert(inner.begin(), inner.end());
      }
      break;
    case nlohmann::json::value_t::array:
      for (const auto& v : value) {
        auto inner = collect_numerals(v);
        out.insert(inner.begin(), inner.end());
      }
      break;
    case nlohmann::json::value_t::string:
      add_text(value.get_ref<const std::string&>());
      break;
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned:
    case nlohmann::json::value_t::number_float:
      add_text(value.dump());
      break;
    default:
      break;
  }
  return out;
}

std::vector<std::string> unsupported_numerals(std::string_view text,
                                              const std::set<std::string>& layer) {
  std::vector<std::string> out;
  for (const auto& n : extract_numerals(text)) {
    if (!layer.count(n)) out.push_back(n);
  }
  return out;
}

}  // namespace learnstory
