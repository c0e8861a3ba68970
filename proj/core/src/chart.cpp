#include "learnstory/chart.hpp"

#include <set>

#include "learnstory/error.hpp"

namespace learnstory {

std::string_view to_string(ChartKind k) {
  switch (k) {
    case ChartKind::Line: return "Line";
    case ChartKind::Bar: return "Bar";
    case ChartKind::Pie: return "Pie";
    case ChartKind::RadialProgress: return "RadialProgress";
    case ChartKind::NodeLink: return "NodeLink";
  }
  return "?";
}

ChartKind parse_chart_kind(std::string_view s) {
  for (auto k : {ChartKind::Line, ChartKind::Bar, ChartKind::Pie, ChartKind::RadialProgress,
                 ChartKind::NodeLink}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorKind::Data, "unknown chart kind '" + std::string(s) + "'");
}

json to_json(const ChartSpec& c) {
  json series = json::array();
  for (const auto& s : c.series) {
    json pts = json::array();
    for (const auto& p : s.points) {
      pts.push_back({{"element_id", p.element_id}, {"x", p.x}, {"y", p.y ? json(*p.y) : json(nullptr)}});
    }
    series.push_back({{"name", s.name}, {"points", pts}});
  }
  json links = json::array();
  for (const auto& l : c.links) links.push_back({{"from", l.from}, {"to", l.to}});
  json notes = json::array();
  for (const auto& a : c.annotations) notes.push_back({{"target", a.target}, {"text", a.text}});
  json registry = json::object();
  for (const auto& [id, tag] : c.registry) {
    registry[id] = {{"objectives", tag.objectives}, {"unit_id", tag.unit_id}, {"metric", tag.metric}};
  }
  return {{"id", c.id},
          {"kind", std::string(to_string(c.kind))},
          {"title", c.title},
          {"x_axis", {{"label", c.x_axis.label}, {"unit", c.x_axis.unit}}},
          {"y_axis", {{"label", c.y_axis.label}, {"unit", c.y_axis.unit}}},
          {"series", series},
          {"links", links},
          {"annotations", notes},
          {"registry", registry}};
}

ChartSpec chart_from_json(const json& j) {
  ChartSpec c;
  c.id = j.at("id").get<std::string>();
  c.kind = parse_chart_kind(j.at("kind").get<std::string>());
  c.title = j.value("title", "");
  c.x_axis = {j.at("x_axis").value("label", ""), j.at("x_axis").value("unit", "")};
  c.y_axis = {j.at("y_axis").value("label", ""), j.at("y_axis").value("unit", "")};
  for (const auto& s : j.at("series")) {
    ChartSeries cs{s.at("name").get<std::string>(), {}};
    for (const auto& p : s.at("points")) {
      ChartPoint pt{p.at("element_id").get<std::string>(), p.at("x").get<std::string>(), std::nullopt};
      if (!p.at("y").is_null()) pt.y = p.at("y").get<double>();
      cs.points.push_back(std::move(pt));
    }
    c.series.push_back(std::move(cs));
  }
  for (const auto& l : j.value("links", json::array())) {
    c.links.push_back({l.at("from").get<std::string>(), l.at("to").get<std::string>()});
  }
  for (const auto& a : j.value("annotations", json::array())) {
    c.annotations.push_back({a.at("target").get<std::string>(), a.at("text").get<std::string>()});
  }
  for (const auto& [id, tag] : j.at("registry").items()) {
    c.registry[id] = {tag.at("objectives").get<ObjectiveSet>(), tag.value("unit_id", ""),
                      tag.value("metric", "")};
  }
  return c;
}

std::vector<std::string> check_chart(const ChartSpec& c) {
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const auto& s : c.series) {
    if (c.kind == ChartKind::Line && !c.series.empty() &&
        s.points.size() != c.series.front().points.size()) {
      problems.push_back(c.id + ": ragged line series '" + s.name + "'");
    }
    for (const auto& p : s.points) {
      if (!c.registry.count(p.element_id)) {
        problems.push_back(c.id + ": point '" + p.element_id + "' is not registered");
      }
      seen.insert(p.element_id);
    }
  }
  for (const auto& [id, tag] : c.registry) {
    if (!seen.count(id)) problems.push_back(c.id + ": registry entry '" + id + "' has no point");
    if (tag.objectives.empty()) problems.push_back(c.id + ": element '" + id + "' maps to no objective");
  }
  for (const auto& a : c.annotations) {
    if (!seen.count(a.target)) problems.push_back(c.id + ": annotation target '" + a.target + "' missing");
  }
  for (const auto& l : c.links) {
    if (!seen.count(l.from) || !seen.count(l.to)) {
      problems.push_back(c.id + ": link '" + l.from + "' -> '" + l.to + "' dangles");
    }
  }
  if (!c.links.empty() && c.kind != ChartKind::NodeLink) {
    problems.push_back(c.id + ": links on a non node-link chart");
  }
  return problems;
}

ChartBuilder::ChartBuilder(std::string id, ChartKind kind, std::string title) {
  spec_.id = std::move(id);
  spec_.kind = kind;
  spec_.title = std::move(title);
}

ChartBuilder& ChartBuilder::axes(Axis x, Axis y) {
  spec_.x_axis = std::move(x);
  spec_.y_axis = std::move(y);
  return *this;
}

ChartBuilder& ChartBuilder::series(std::string name) {
  spec_.series.push_back({std::move(name), {}});
  return *this;
}

ChartBuilder& ChartBuilder::point(const std::string& local_id, std::string x, std::optional<double> y,
                                  ElementTag tag) {
  if (spec_.series.empty()) series(spec_.title);
  const auto id = element_id(local_id);
  spec_.series.back().points.push_back({id, std::move(x), y});
  spec_.registry[id] = std::move(tag);
  return *this;
}

ChartBuilder& ChartBuilder::link(const std::string& from_local, const std::string& to_local) {
  spec_.links.push_back({element_id(from_local), element_id(to_local)});
  return *this;
}

ChartBuilder& ChartBuilder::annotate(const std::string& local_id, std::string text) {
  spec_.annotations.push_back({element_id(local_id), std::move(text)});
  return *this;
}

std::string ChartBuilder::element_id(const std::string& local_id) const {
  return spec_.id + "/" + local_id;
}

ChartSpec ChartBuilder::build() && { return std::move(spec_); }

}  // namespace learnstory
