// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "learnstory/aggregation.hpp"
#include "learnstory/formative.hpp"
#include "learnstory/insights.hpp"
#include "learnstory/io.hpp"
#include "learnstory/llm.hpp"
#include "learnstory/numerals.hpp"
#include "learnstory/pipeline.hpp"
#include "learnstory/qa.hpp"
#include "learnstory/story.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace learnstory;

namespace {

// Collects failures; keeps the first few messages for the summary line.
class Verdict {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (messages_.size() < 3) messages_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(failures_) + " failed check(s)";
    for (const auto& m : messages_) s += "; " + m;
    return s;
  }

 private:
  std::size_t failures_ = 0;
  std::vector<std::string> messages_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt_s(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3fs", s);
  return buf;
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

SeriesSubject single(const std::string& student, const std::string& obj, ModeFilter m = ModeFilter::All) {
  return {student, ObjectiveSelector::single(obj), m};
}

std::string formula_fidelity(Verdict& v) {
  using testing::at;
  using testing::rec;
  const IntervalScheme weeks{at(0), std::chrono::days{7}, 3};
  const std::vector<AttemptRecord> rs{
      rec("s", "q1", at(0, 100), 100, true, {"A"}),     rec("s", "q2", at(1), 140, true, {"A"}),
      rec("s", "q3", at(15), 30, false, {"A", "B"}),    rec("s", "q4", at(16), 45.5, true, {"A"}),
      rec("s", "q5", at(17), 12, false, {"A"}),         rec("s", "q6", at(2), 999, true, {"B"}),
      rec("t", "q1", at(2), 999, true, {"A"})};
  const auto s = build_series(rs, weeks, single("s", "A"));
  v.expect(s.points.size() == 3, "point count");
  if (s.points.size() == 3) {
    v.expect(s.points[0].count == 2 && s.points[1].count == 0 && s.points[2].count == 3, "N_j");
    v.expect(near(*s.points[0].mean_duration(), 120.0, 1e-9), "d_0");
    v.expect(near(*s.points[2].mean_duration(), (30 + 45.5 + 12) / 3.0, 1e-9), "d_2");
    v.expect(*s.points[0].accuracy() == 1.0 && near(*s.points[2].accuracy(), 1.0 / 3.0, 1e-9), "u_j");
    v.expect(!s.points[1].accuracy() && !s.points[1].mean_duration(), "empty interval is absent");
  }
  std::vector<AttemptRecord> sixteen;
  for (int i = 0; i < 16; ++i) sixteen.push_back(rec("s", "q" + std::to_string(i), at(i), 60, i != 7, {"X"}));
  v.expect(build_series(sixteen, weeks, single("s", "X")).total().accuracy() == 0.9375, "15/16");

  std::mt19937_64 rng(1234567);
  const std::vector<std::string> objs{"A", "B", "C"};
  const int cases = 1000;
  for (int t = 0; t < cases; ++t) {
    const auto records = testing::random_records(rng, 1 + rng() % 60, 3, objs, 40);
    const auto scheme = derive_scheme(records, {"A", "B", "C"}, {});
    const auto subject = single("s" + std::to_string(rng() % 3), objs[rng() % 3], kModeFilters[rng() % 3]);
    const auto series = build_series(records, scheme, subject);
    std::size_t in_scope = 0, sum = 0;
    for (const auto& r : records) {
      in_scope += r.student_id == subject.student_id && matches(subject.mode, r.mode) &&
                  r.objectives.count(*subject.selector.objectives.begin());
    }
    for (const auto& p : series.points) sum += p.count;
    v.expect(sum == in_scope, "count conservation");
    for (std::size_t j = 0; j + 1 < series.points.size(); ++j) {
      const auto& a = series.points[j];
      const auto& b = series.points[j + 1];
      auto m = a;
      m += b;
      if (m.count == 0) continue;
      const double w = ((a.count ? *a.accuracy() * a.count : 0.0) + (b.count ? *b.accuracy() * b.count : 0.0)) /
                       static_cast<double>(m.count);
      v.expect(near(*m.accuracy(), w, 1e-12), "weighted merge");
    }
  }
  return std::to_string(cases) + " randomized cases";
}

std::string steven_fixture(Verdict& v) {
  const auto data = synthesize({7, 200, "steven"});
  const auto fx = testing::make_fixture(data);
  const auto u7 = fx->entry(data.focal_student, "U7");
  const auto u3 = fx->entry(data.focal_student, "U3");
  constexpr auto all = static_cast<std::size_t>(ModeFilter::All);
  constexpr auto test = static_cast<std::size_t>(ModeFilter::Test);

  const auto s1102 = u7.objective("S1102").series[all].total().accuracy();
  v.expect(s1102 && *s1102 == 0.9375, "S1102 accuracy");
  for (const auto& o : data.graph.unit("U3").objectives) {
    const auto a = u3.objective(o).series[all].total().accuracy();
    v.expect(a && *a >= 0.24 && *a <= 0.25, o + " accuracy outside [0.24, 0.25]");
  }
  const auto& profile = u7.objective("S1206").profile;
  v.expect(profile && near(profile->share(Difficulty::Hard), 0.4902, 5e-5), "S1206 hard share");
  for (const auto& o : data.graph.unit("U7").objectives) {
    const auto a = u7.objective(o).series[test].total().accuracy();
    v.expect(a && *a > 0.8, o + " test accuracy");
  }
  return "S1102 " + std::to_string(*s1102) + ", S1206 hard " +
         std::to_string(profile ? profile->share(Difficulty::Hard) : -1.0);
}

std::string insight_oracle(Verdict& v) {
  std::mt19937_64 rng(8675309);
  const DetectorConfig cfg;
  oracle::Options o;
  o.permutations = cfg.permutations;
  o.seed = cfg.seed;
  o.floor = cfg.floor;
  std::size_t series = 0, compared = 0;
  for (int t = 0; t < 500; ++t) {
    const auto fx = testing::make_fixture(testing::random_unit_cohort(rng, 1 + rng() % 4, 1 + rng() % 8, 4));
    const auto e = fx->entry("s0", "U");
    const auto got = mine_top_k(e, fx->data.graph, cfg, 0);
    const auto want = oracle::enumerate(fx->data.records, fx->data.graph, "s0", "U", o, 0);
    ++series;
    v.expect(got.size() == want.size(), "case " + std::to_string(t) + ": candidate count");
    for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
      v.expect(got[i].id == want[i].id, "case " + std::to_string(t) + ": order at " + std::to_string(i));
      v.expect(near(got[i].score, want[i].score, 1e-12), "case " + std::to_string(t) + ": score");
      ++compared;
    }
  }
  return std::to_string(series) + " cohorts, " + std::to_string(compared) + " ranked insights";
}

std::string top_k(Verdict& v) {
  const auto& f = testing::steven();
  const auto e = f.entry(testing::kSteven, "U7");
  const auto candidates = mine_top_k(e, f.data.graph, f.config.detector(), 0);
  v.expect(candidates.size() >= 3, "fewer than 3 candidates clear the floor");
  const auto doc = f.report(testing::kSteven, "U7");
  std::size_t n = 0;
  for (const auto& s : doc.stages) n += s.insights.size();
  v.expect(n == 3, "report embeds " + std::to_string(n) + " insights");
  return std::to_string(candidates.size()) + " candidates, " + std::to_string(n) + " embedded";
}

std::vector<std::pair<const testing::Fixture*, std::pair<std::string, std::string>>> report_cases() {
  const auto& st = testing::steven();
  const auto& sp = testing::sparse();
  std::vector<std::pair<const testing::Fixture*, std::pair<std::string, std::string>>> out;
  for (const auto* student : {"learner-0001", "learner-0002", "learner-0050", "learner-0199"}) {
    for (const auto& u : st.data.graph.units()) out.push_back({&st, {student, u.id}});
  }
  out.push_back({&sp, {sp.data.focal_student, sp.data.report_unit}});
  out.push_back({&sp, {"learner-0003", sp.data.report_unit}});
  return out;
}

std::string report_structure(Verdict& v) {
  std::size_t docs = 0;
  for (const auto& [fx, key] : report_cases()) {
    const auto& [student, unit] = key;
    const auto a = fx->report(student, unit);
    const auto b = fx->report(student, unit);
    const auto tag = student + "/" + unit;
    ++docs;
    v.expect(a.stages.size() == 12, tag + ": stage count");
    v.expect(check_report(a, &fx->data.graph).empty(), tag + ": structure check");
    std::array<int, 4> phases{};
    std::array<int, 3> groups{};
    std::set<std::string> ids;
    for (const auto& s : a.stages) {
      ++phases[static_cast<std::size_t>(s.phase)];
      ++groups[static_cast<std::size_t>(s.info_group)];
      for (const auto& i : s.insights) v.expect(ids.insert(i.id).second, tag + ": duplicate insight " + i.id);
    }
    v.expect(phases == std::array<int, 4>{3, 3, 3, 3}, tag + ": phase partition");
    v.expect(groups == std::array<int, 3>{3, 6, 3}, tag + ": info-group partition");
    v.expect(serialize_report(a) == serialize_report(b), tag + ": not byte-identical");
  }
  return std::to_string(docs) + " documents";
}

std::string tri_level(Verdict& v) {
  std::mt19937_64 rng(2718);
  const int cases = 220;
  for (int t = 0; t < cases; ++t) {
    const auto fx = testing::make_fixture(testing::dag_cohort(rng, 1 + rng() % 12));
    const auto& g = fx->data.graph;
    const auto entry = fx->entry("s0", fx->data.report_unit);
    for (const auto& d : diagnose(entry, g, fx->config.formative())) {
      std::set<ObjectiveId> closure{d.objective};
      for (bool grew = true; grew;) {
        grew = false;
        for (const auto& e : g.edges()) {
          if (closure.count(e.to) && closure.insert(e.from).second) grew = true;
        }
      }
      closure.erase(d.objective);
      std::set<ObjectiveId> visited;
      for (const auto& a : d.ancestors) visited.insert(a.objective);
      v.expect(visited == closure, "case " + std::to_string(t) + ": ancestor set of " + d.objective);
      for (const auto& s : d.associated) {
        for (const auto& o : s.objectives) v.expect(!closure.count(o), "associated set meets ancestors");
      }
    }
  }
  return std::to_string(cases) + " random DAGs";
}

std::string qa_round_trip(Verdict& v) {
  const auto& s = testing::steven();
  const auto disk = testing::make_disk_fixture(s.data, s.config, std::string(testing::kSteven));
  const auto reads_before = disk->records->reads();
  const auto entry = disk->cache->require(testing::kSteven, "U7");
  TemplateBackend backend;
  const auto report = generate_report(entry, s.data.graph, s.config, backend, "2025-01-01T00:00:00Z");
  QAContext ctx;
  ctx.report = &report;
  ctx.entry = &entry;
  ctx.graph = &s.data.graph;
  ctx.formative = s.config.formative();
  ctx.pedagogy = s.config.pedagogy();

  struct Query {
    QARequest request;
    Intent intent;
    ObjectiveSet grounding;
  };
  const std::vector<Query> queries{
      {{"r", {"S1-units/U3"}, "Why is my performance in Unit 3 so low?"},
       Intent::WhyLowPerformance,
       {"N1114", "N1115", "N1136"}},
      {{"r", {"S6-peers/class-S1205"}, "How do I compare to the other students?"}, Intent::CompareToPeers, {"S1205"}},
      {{"r", {"S9-mastery/S1102"}, "Why do you suggest this?"}, Intent::ExplainSuggestion, {"S1102"}}};
  double worst_ms = 0.0;
  for (const auto& q : queries) {
    const auto t0 = Clock::now();
    const auto r = answer(q.request, ctx);
    const auto ms = seconds_since(t0) * 1000.0;
    worst_ms = std::max(worst_ms, ms);
    const auto tag = std::string(to_string(q.intent));
    v.expect(ms < 100.0, tag + ": " + std::to_string(ms) + " ms");
    v.expect(r.grounding.intent == q.intent, tag + ": intent");
    v.expect(r.grounding.objectives == q.grounding, tag + ": grounding objectives");
    v.expect(!r.answer.empty() && !r.charts.empty(), tag + ": empty answer");
    for (const auto& c : r.charts) v.expect(check_chart(c).empty(), tag + ": chart");
    v.expect(unsupported_numerals(r.answer, collect_numerals(r.grounding.slices)).empty(), tag + ": numerals");
    const auto back = qa_response_from_json(to_json(r));
    v.expect(back.answer == r.answer && back.grounding.objectives == r.grounding.objectives, tag + ": round trip");
  }
  v.expect(disk->records->reads() == reads_before, "raw records were read while answering");
  return "slowest " + std::to_string(worst_ms) + " ms, raw reads " +
         std::to_string(disk->records->reads() - reads_before);
}

std::string number_provenance(Verdict& v) {
  std::size_t docs = 0, stages = 0;
  auto audit = [&](const ReportDocument& doc, const std::string& tag) {
    ++docs;
    const auto layer = collect_numerals(structured_layer(doc));
    for (const auto& s : doc.stages) {
      ++stages;
      const auto bad = unsupported_numerals(s.narrative, layer);
      v.expect(bad.empty(), tag + " " + s.id + ": unsupported " + (bad.empty() ? "" : bad.front()));
    }
  };
  for (const auto& [fx, key] : report_cases()) audit(fx->report(key.first, key.second), key.first + "/" + key.second);
  const auto cohort = testing::make_fixture(synthesize({7, 40, "cohort"}));
  for (const auto* student : {"learner-0001", "learner-0020"}) {
    for (const auto& u : cohort->data.graph.units()) {
      audit(cohort->report(student, u.id), std::string("cohort ") + student + "/" + u.id);
    }
  }
  const auto load = testing::make_fixture(synthesize_load(3, 30, 10, 12));
  audit(load->report("learner-0001", load->data.report_unit), "load");
  return std::to_string(docs) + " documents, " + std::to_string(stages) + " stages";
}

std::string anonymization(Verdict& v) {
  const auto& f = testing::steven();
  std::set<std::string> raw;
  for (const auto& r : f.data.records) raw.insert(r.student_id);
  std::vector<std::string> raw_list(raw.begin(), raw.end());
  std::string alternation;
  for (const auto& id : raw_list) alternation += (alternation.empty() ? "" : "|") + std::regex_replace(id, std::regex(R"([.^$|()\[\]{}*+?\\-])"), R"(\$&)");
  const std::regex any_raw(alternation);

  auto echo = [](const std::string& p) {
    const auto pos = p.find("draft:\n");
    return pos == std::string::npos ? std::string() : p.substr(pos + 7);
  };
  std::size_t prompts = 0;
  auto run = [&](RecordingLlmClient::Responder responder, bool expect_fallbacks, const std::string& tag) {
    auto client = std::make_shared<RecordingLlmClient>(std::move(responder));
    const auto e = f.entry(testing::kSteven, "U7");
    LlmNarrativeBackend backend(client, Anonymizer(raw_list), 4);
    const auto doc = generate_report(e, f.data.graph, f.config, backend, "2025-01-01T00:00:00Z");
    for (const auto& p : client->prompts()) {
      ++prompts;
      v.expect(!std::regex_search(p, any_raw), tag + ": raw id in prompt");
    }
    if (expect_fallbacks) {
      v.expect(!doc.metadata.fallbacks.empty(), tag + ": no fallback recorded");
      const auto reference = f.report(testing::kSteven, "U7");
      for (const auto& fb : doc.metadata.fallbacks) {
        v.expect(doc.find_stage(fb.stage)->narrative == reference.find_stage(fb.stage)->narrative,
                 tag + ": " + fb.stage + " did not fall back to the template");
      }
    } else {
      v.expect(doc.metadata.fallbacks.empty(), tag + ": unexpected fallback");
    }
    QAContext ctx;
    ctx.report = &doc;
    ctx.entry = &e;
    ctx.graph = &f.data.graph;
    ctx.llm = client;
    ctx.anonymizer = Anonymizer(raw_list);
    answer({"r", {"S1-units/U3"}, "Why is learner-0001 weak in Unit 3?"}, ctx);
    const auto all = client->prompts();
    v.expect(!std::regex_search(all.back(), any_raw), tag + ": raw id in QA prompt");
  };
  run(echo, false, "faithful");
  run([](const std::string&) { return std::string("Keep going."); }, true, "dropped numbers");
  run([&](const std::string& p) { return echo(p) + " 777."; }, true, "invented number");
  run([](const std::string&) { return std::string(); }, true, "empty");
  run([](const std::string&) -> std::string { throw std::runtime_error("unreachable"); }, true, "transport");
  return std::to_string(prompts) + " prompts against " + std::to_string(raw.size()) + " raw ids";
}

std::string latency(Verdict& v) {
  const auto data = synthesize_load(2024, 200, 10, 12);
  testing::TempDir dir;
  {
    std::ofstream out(dir.path() / "records.ndjson");
    write_records(out, data.records);
  }
  const EngineConfig config;
  const auto t0 = Clock::now();
  RecordStore store(dir.path() / "records.ndjson");
  const auto records = store.load(&data.graph);
  const auto hash = inputs_hash(data.graph, records, config.aggregation_fingerprint());
  const auto ctx = make_aggregation_context(data.graph, records, config.scheme_options(), hash, config.cohort_scope);
  const auto entry = build_cache_entry(ctx, "learner-0001", data.report_unit);
  TemplateBackend backend;
  const auto doc = generate_report(entry, data.graph, config, backend, "2025-01-01T00:00:00Z");
  const double s = seconds_since(t0);
  v.expect(doc.stages.size() == 12, "incomplete report");
  v.expect(entry.scheme(data.report_unit).count == 12, "expected 12 intervals");
  v.expect(s < 2.0, "took " + fmt_s(s));
  return fmt_s(s) + " for " + std::to_string(records.size()) + " records";
}

struct Criterion {
  const char* name;
  double budget_s;  // 0: no time limit
  std::function<std::string(Verdict&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"formula-fidelity", 10.0, formula_fidelity},
      {"steven-fixture", 5.0, steven_fixture},
      {"insight-oracle-equivalence", 60.0, insight_oracle},
      {"top-k-cardinality", 0.0, top_k},
      {"report-structure", 0.0, report_structure},
      {"tri-level-soundness", 30.0, tri_level},
      {"qa-round-trip", 0.0, qa_round_trip},
      {"narrative-number-provenance", 0.0, number_provenance},
      {"anonymization", 0.0, anonymization},
      {"latency-envelope", 2.0, latency},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    std::string detail;
    const auto t0 = Clock::now();
    try {
      detail = c.run(v);
    } catch (const std::exception& e) {
      v.expect(false, std::string("exception: ") + e.what());
    }
    const double s = seconds_since(t0);
    if (c.budget_s > 0.0) v.expect(s < c.budget_s, "runtime " + fmt_s(s) + " over budget");
    const bool pass = v.ok();
    failed += pass ? 0 : 1;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << " [" << fmt_s(s) << "] "
              << (pass ? detail : v.summary()) << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
