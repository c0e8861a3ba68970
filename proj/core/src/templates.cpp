#include <string>

#include "learnstory/error.hpp"
#include "learnstory/io.hpp"
#include "learnstory/story.hpp"

namespace learnstory {

namespace detail {
extern const std::string_view kDefaultStageTemplates;
}

const TemplateLibrary& TemplateLibrary::builtin() {
  static const TemplateLibrary lib =
      from_json(json::parse(detail::kDefaultStageTemplates.begin(), detail::kDefaultStageTemplates.end()));
  return lib;
}

TemplateLibrary TemplateLibrary::from_json(const json& doc) {
  if (!doc.is_object() || doc.value("schema", "") != "learnstory.templates/1") {
    fail(ErrorKind::Config, "template file must declare schema learnstory.templates/1");
  }
  const auto& stages = doc.find("stages");
  if (stages == doc.end() || !stages->is_object()) fail(ErrorKind::Config, "template file has no stages");
  for (const auto& info : stage_table()) {
    auto s = stages->find(std::string(info.id));
    if (s == stages->end() || !s->is_object() || s->empty()) {
      fail(ErrorKind::Config, "template file has no entry for stage " + std::string(info.id));
    }
    for (const auto& [variant, text] : s->items()) {
      if (!text.is_string()) {
        fail(ErrorKind::Config, "template " + std::string(info.id) + "." + variant + " is not a string");
      }
    }
  }
  if (auto p = doc.find("phrases"); p != doc.end() && !p->is_object()) {
    fail(ErrorKind::Config, "template phrases must be an object");
  }
  TemplateLibrary lib;
  lib.doc_ = doc;
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, "cannot parse templates " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

bool TemplateLibrary::has_stage_variant(std::string_view stage_id, std::string_view variant) const {
  const auto& stages = doc_.at("stages");
  auto s = stages.find(std::string(stage_id));
  return s != stages.end() && s->contains(std::string(variant));
}

const std::string& TemplateLibrary::stage(std::string_view stage_id, std::string_view variant) const {
  if (!has_stage_variant(stage_id, variant)) {
    fail(ErrorKind::Runtime,
         "no template for stage " + std::string(stage_id) + " variant " + std::string(variant));
  }
  return doc_.at("stages").at(std::string(stage_id)).at(std::string(variant)).get_ref<const std::string&>();
}

const std::string& TemplateLibrary::phrase(std::string_view key) const {
  auto p = doc_.find("phrases");
  if (p != doc_.end()) {
    auto it = p->find(std::string(key));
    if (it != p->end() && it->is_string()) return it->get_ref<const std::string&>();
  }
  fail(ErrorKind::Runtime, "no template phrase '" + std::string(key) + "'");
}

std::string fill_template(std::string_view text, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(text.size() + 64);
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      out += text[i++];
      continue;
    }
    const auto close = text.find('}', i);
    if (close == std::string_view::npos) fail(ErrorKind::Runtime, "unterminated template slot");
    const std::string name(text.substr(i + 1, close - i - 1));
    auto it = slots.find(name);
    if (it == slots.end()) fail(ErrorKind::Runtime, "template slot '" + name + "' has no value");
    out += it->second;
    i = close + 1;
  }
  // Empty optional slots leave doubled or trailing spaces behind.
  std::string tidy;
  tidy.reserve(out.size());
  for (char c : out) {
    if (c == ' ' && (tidy.empty() || tidy.back() == ' ')) continue;
    tidy += c;
  }
  while (!tidy.empty() && tidy.back() == ' ') tidy.pop_back();
  return tidy;
}

}  // namespace learnstory
