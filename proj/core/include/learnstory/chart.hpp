#pragma once

// Declarative chart description embedded in reports and Q&A answers. Every
// data point carries an element id registered with the objectives it shows,
// which is what selection mapping resolves against.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "learnstory/model.hpp"

namespace learnstory {

using nlohmann::json;

enum class ChartKind { Line, Bar, Pie, RadialProgress, NodeLink };
std::string_view to_string(ChartKind k);
ChartKind parse_chart_kind(std::string_view s);

struct ElementTag {
  ObjectiveSet objectives;
  std::string unit_id;
  std::string metric;  // "accuracy", "count", "unit", ...
  bool operator==(const ElementTag&) const = default;
};

struct ChartPoint {
  std::string element_id;
  std::string x;              // category or interval label
  std::optional<double> y;    // absent interval -> null
  bool operator==(const ChartPoint&) const = default;
};

struct ChartSeries {
  std::string name;
  std::vector<ChartPoint> points;
  bool operator==(const ChartSeries&) const = default;
};

struct Axis {
  std::string label;
  std::string unit;
  bool operator==(const Axis&) const = default;
};

struct Annotation {
  std::string target;  // element id
  std::string text;
  bool operator==(const Annotation&) const = default;
};

struct ChartLink {
  std::string from;  // element ids
  std::string to;
  bool operator==(const ChartLink&) const = default;
};

struct ChartSpec {
  std::string id;
  ChartKind kind = ChartKind::Bar;
  std::string title;
  Axis x_axis;
  Axis y_axis;
  std::vector<ChartSeries> series;
  std::vector<ChartLink> links;  // NodeLink only
  std::vector<Annotation> annotations;
  std::map<std::string, ElementTag> registry;

  bool operator==(const ChartSpec&) const = default;
};

json to_json(const ChartSpec& c);
ChartSpec chart_from_json(const json& j);

// Problems with the chart: unregistered points, ragged series, dangling
// annotation or link targets. Empty when well formed.
std::vector<std::string> check_chart(const ChartSpec& c);

// Builder that keeps the registry in sync with added points.
class ChartBuilder {
 public:
  ChartBuilder(std::string id, ChartKind kind, std::string title);

  ChartBuilder& axes(Axis x, Axis y);
  // Starts a new series; subsequent point() calls append to it.
  ChartBuilder& series(std::string name);
  ChartBuilder& point(const std::string& local_id, std::string x, std::optional<double> y,
                      ElementTag tag);
  ChartBuilder& link(const std::string& from_local, const std::string& to_local);
  ChartBuilder& annotate(const std::string& local_id, std::string text);
  std::string element_id(const std::string& local_id) const;
  ChartSpec build() &&;

 private:
  ChartSpec spec_;
};

}  // namespace learnstory
