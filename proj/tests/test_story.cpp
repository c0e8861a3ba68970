#include <functional>
#include <regex>
#include <set>

#include "doctest.h"
#include "learnstory/chart.hpp"
#include "learnstory/error.hpp"
#include "learnstory/numerals.hpp"
#include "learnstory/story.hpp"
#include "support.hpp"

using namespace learnstory;

namespace {

std::string without_timestamp(ReportDocument d) {
  d.metadata.generated_at.clear();
  return serialize_report(d);
}

const ReportDocument& steven_u7() {
  static const auto doc = testing::steven().report(testing::kSteven, "U7");
  return doc;
}

void check_provenance(const ReportDocument& doc) {
  const auto layer = collect_numerals(structured_layer(doc));
  for (const auto& s : doc.stages) {
    const auto bad = unsupported_numerals(s.narrative, layer);
    INFO(s.id << ": " << s.narrative);
    CHECK(bad.empty());
  }
}

}  // namespace

TEST_CASE("stage table follows the four phases and three information groups") {
  const auto& t = stage_table();
  CHECK(t[0].id == "S1");
  CHECK(t[11].id == "S12");
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(static_cast<std::size_t>(t[i].phase) == i / 3);
    const auto g = i < 3 ? InfoGroup::OverviewIntro : (i < 9 ? InfoGroup::SummaryInfo : InfoGroup::FormativeGuidance);
    CHECK(t[i].info_group == g);
  }
}

TEST_CASE("template library: every stage variant present, no digits in wording") {
  const auto& lib = TemplateLibrary::builtin();
  for (const auto& info : stage_table()) {
    CHECK((lib.has_stage_variant(info.id, "text") || lib.has_stage_variant(info.id, "transitional")));
  }
  std::regex digit("[0-9]");
  std::function<void(const json&)> walk = [&](const json& j) {
    if (j.is_string()) {
      CHECK_FALSE(std::regex_search(j.get<std::string>(), digit));
    } else if (j.is_structured()) {
      for (const auto& v : j) walk(v);
    }
  };
  walk(lib.doc().at("stages"));
  walk(lib.doc().at("phrases"));
  CHECK_THROWS_AS(TemplateLibrary::from_json(json{{"schema", "nope"}}), Error);
}

TEST_CASE("fill_template substitutes slots and rejects unknown ones") {
  CHECK(fill_template("Hello {name}.", {{"name", "you"}}) == "Hello you.");
  CHECK(fill_template("A {x} B", {{"x", ""}}) == "A B");
  CHECK_THROWS_AS(fill_template("{missing}", {}), Error);
}

TEST_CASE("chart checks catch unregistered points, ragged series and dangling targets") {
  ElementTag tag{{"A"}, "U", "accuracy"};
  ChartBuilder b("c", ChartKind::Line, "t");
  b.series("you").point("a0", "week 1", 0.5, tag).point("a1", "week 2", std::nullopt, tag)
                  .series("class").point("b0", "week 1", 0.4, tag).point("b1", "week 2", 0.6, tag)
      .annotate("a0", "note");
  const auto good = std::move(b).build();
  CHECK(check_chart(good).empty());
  CHECK(chart_from_json(to_json(good)) == good);

  auto ragged = good;
  ragged.series[1].points.pop_back();
  CHECK_FALSE(check_chart(ragged).empty());
  auto unregistered = good;
  unregistered.registry.erase("c/a0");
  CHECK_FALSE(check_chart(unregistered).empty());
  auto dangling = good;
  dangling.annotations.push_back({"c/zz", "x"});
  CHECK_FALSE(check_chart(dangling).empty());
  auto empty_tag = good;
  empty_tag.registry["c/a1"].objectives.clear();
  CHECK_FALSE(check_chart(empty_tag).empty());
  auto links = good;
  links.links.push_back({"c/a0", "c/a1"});
  CHECK_FALSE(check_chart(links).empty());
}

TEST_CASE("Steven report: structure, insights in S6/S8, S1 calls out Unit 3 at 25%") {
  const auto& doc = steven_u7();
  CHECK(check_report(doc, &testing::steven().data.graph).empty());
  REQUIRE(doc.stages.size() == 12);
  std::size_t summative = 0;
  std::set<std::string> ids;
  for (const auto& s : doc.stages) {
    for (const auto& i : s.insights) {
      ++summative;
      CHECK(ids.insert(i.id).second);
      CHECK(((s.id == "S6" && i.subspace.mode != ModeFilter::Test) || (s.id == "S8" && i.subspace.mode == ModeFilter::Test)));
    }
    if (s.transitional) CHECK(s.charts.empty());
  }
  CHECK(summative == 3);
  const auto* s1 = doc.find_stage("S1");
  REQUIRE(s1);
  CHECK(s1->narrative.find("Unit 3") != std::string::npos);
  CHECK(s1->narrative.find("25%") != std::string::npos);
  CHECK(doc.find_stage("S4")->transitional);
  CHECK(doc.find_stage("S7")->transitional);
  CHECK(doc.find_stage("S10")->transitional);
  CHECK_FALSE(doc.find_stage("S9")->charts.empty());
  CHECK(doc.find_stage("S9")->charts.front().kind == ChartKind::RadialProgress);
  CHECK(doc.find_stage("S1")->charts.front().kind == ChartKind::NodeLink);
  CHECK(doc.find_stage("S3")->charts.front().kind == ChartKind::Bar);
  CHECK(doc.find_stage("S3")->narrative.find("49.02%") != std::string::npos);
  CHECK(doc.find_stage("S9")->narrative.find("93.75%") != std::string::npos);
}

TEST_CASE("deterministic mode gives byte-identical documents apart from the timestamp") {
  const auto& f = testing::steven();
  auto a = f.report(testing::kSteven, "U7");
  auto b = f.report(testing::kSteven, "U7");
  CHECK(serialize_report(a) == serialize_report(b));
  b.metadata.generated_at = "2030-01-01T00:00:00Z";
  CHECK(without_timestamp(a) == without_timestamp(b));
  CHECK(report_from_json(to_json(a)) == a);
  CHECK(serialize_report(report_from_json(json::parse(serialize_report(a)))) == serialize_report(a));
}

TEST_CASE("sparse fixture: S8 is an empty transitional stage and no insight repeats") {
  const auto& f = testing::sparse();
  const auto doc = f.report(f.data.focal_student, f.data.report_unit);
  CHECK(check_report(doc, &f.data.graph).empty());
  const auto* s8 = doc.find_stage("S8");
  REQUIRE(s8);
  CHECK(s8->transitional);
  CHECK(s8->charts.empty());
  CHECK(s8->insights.empty());
  CHECK(s8->narrative.find("no") != std::string::npos);
  check_provenance(doc);
}

TEST_CASE("template narrative carries no number absent from the structured layer") {
  check_provenance(steven_u7());
  const auto& f = testing::steven();
  for (const auto& unit : {"U1", "U3", "U5", "U7"}) {
    for (const auto& student : {"learner-0001", "learner-0002", "learner-0137"}) {
      const auto doc = f.report(student, unit);
      CHECK(check_report(doc, &f.data.graph).empty());
      check_provenance(doc);
    }
  }
}

TEST_CASE("registry ids resolve to graph objectives; sidebar index lists the stages by phase") {
  const auto& doc = steven_u7();
  const auto reg = doc.element_registry();
  CHECK_FALSE(reg.empty());
  for (const auto& [id, tag] : reg) {
    CHECK_FALSE(tag.objectives.empty());
    for (const auto& o : tag.objectives) CHECK(testing::steven().data.graph.contains(o));
  }
  const auto j = to_json(doc);
  REQUIRE(j.contains("index"));
  REQUIRE(j["index"].size() == 12);
  std::map<std::string, std::size_t> phases;
  for (const auto& e : j["index"]) ++phases[e.at("phase").get<std::string>()];
  CHECK(phases.size() == 4);
  for (const auto& [name, n] : phases) CHECK(n == 3);
}
