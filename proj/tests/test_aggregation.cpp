#include <algorithm>
#include <filesystem>
#include <map>
#include <random>

#include "doctest.h"
#include "learnstory/aggregation.hpp"
#include "learnstory/cache.hpp"
#include "learnstory/error.hpp"
#include "learnstory/io.hpp"
#include "support.hpp"

using namespace learnstory;
using testing::at;
using testing::flat_graph;
using testing::random_records;
using testing::rec;

namespace {

IntervalScheme weeks(std::size_t k) { return {at(0), std::chrono::days{7}, k}; }

SeriesSubject single(const std::string& student, const std::string& obj, ModeFilter m = ModeFilter::All) {
  return {student, ObjectiveSelector::single(obj), m};
}

}  // namespace

TEST_CASE("series points follow the volume, mean-time and accuracy formulas exactly") {
  const auto g = flat_graph({"A", "B"});
  std::vector<AttemptRecord> rs{
      rec("s", "q1", at(0, 100), 100, true, {"A"}),
      rec("s", "q2", at(1), 140, true, {"A"}),
      rec("s", "q3", at(15), 30, false, {"A", "B"}),
      rec("s", "q4", at(16), 45.5, true, {"A"}, Difficulty::Hard, Mode::Test),
      rec("s", "q5", at(17), 12, false, {"A"}),
      rec("s", "q6", at(2), 999, true, {"B"}),
      rec("t", "q1", at(2), 999, true, {"A"}),
  };
  const auto s = build_series(rs, weeks(3), single("s", "A"), &g);
  REQUIRE(s.points.size() == 3);
  CHECK(s.points[0].count == 2);
  CHECK(*s.points[0].mean_duration() == doctest::Approx(120.0).epsilon(1e-12));
  CHECK(*s.points[0].accuracy() == 1.0);
  CHECK(s.points[1].count == 0);
  CHECK_FALSE(s.points[1].mean_duration().has_value());
  CHECK_FALSE(s.points[1].accuracy().has_value());
  CHECK(s.points[2].count == 3);
  CHECK(std::fabs(*s.points[2].mean_duration() - (30 + 45.5 + 12) / 3.0) < 1e-9);
  CHECK(std::fabs(*s.points[2].accuracy() - 1.0 / 3.0) < 1e-9);

  const auto ex = build_series(rs, weeks(3), single("s", "A", ModeFilter::Exercise));
  CHECK(ex.points[2].count == 2);
  const auto test = build_series(rs, weeks(3), single("s", "A", ModeFilter::Test));
  CHECK(test.points[2].count == 1);
  CHECK(*test.points[2].accuracy() == 1.0);

  const auto both = build_series(rs, weeks(3), {"s", ObjectiveSelector::all_of({"A", "B"}), ModeFilter::All});
  CHECK(both.total().count == 1);
  const auto any = build_series(rs, weeks(3), {"s", ObjectiveSelector::any_of({"A", "B"}), ModeFilter::All});
  CHECK(any.total().count == 6);

  CHECK_THROWS_AS(build_series(rs, weeks(0), single("s", "A")), Error);
  CHECK_THROWS_AS(build_series(rs, weeks(3), single("s", "Z"), &g), Error);
}

TEST_CASE("sixteen attempts with fifteen correct give accuracy 0.9375") {
  std::vector<AttemptRecord> rs;
  for (int i = 0; i < 16; ++i) rs.push_back(rec("s", "q" + std::to_string(i), at(i), 60, i != 7, {"S1102"}));
  const auto s = build_series(rs, weeks(3), single("s", "S1102"));
  CHECK(*s.total().accuracy() == 0.9375);
}

TEST_CASE("interval scheme is half-open and derived from the earliest record's midnight") {
  const IntervalScheme sc{at(0), std::chrono::days{7}, 2};
  CHECK(sc.index_of(at(0)) == 0u);
  CHECK(sc.index_of(at(7) - std::chrono::seconds{1}) == 0u);
  CHECK(sc.index_of(at(7)) == 1u);
  CHECK_FALSE(sc.index_of(at(14)).has_value());
  CHECK_FALSE(sc.index_of(at(0) - std::chrono::seconds{1}).has_value());

  std::vector<AttemptRecord> rs{rec("s", "q", at(3, 5000), 1, true, {"A"}), rec("s", "r", at(20), 1, true, {"A"})};
  const auto d = derive_scheme(rs, {"A"}, {});
  CHECK(d.origin == at(3));
  CHECK(d.count == 3);
  CHECK_THROWS_AS(derive_scheme(rs, {"B"}, {}), Error);
}

TEST_CASE("property: conservation, bounds, merge and permutation invariance (seeded)") {
  std::mt19937_64 rng(1234567);
  const std::vector<std::string> objs{"A", "B", "C"};
  for (int trial = 0; trial < 1000; ++trial) {
    const auto rs = random_records(rng, 1 + rng() % 60, 3, objs, 40);
    const auto scheme = derive_scheme(rs, {"A", "B", "C"}, {});
    const auto subject = single("s" + std::to_string(rng() % 3), objs[rng() % 3],
                                kModeFilters[rng() % 3]);
    const auto s = build_series(rs, scheme, subject);
    REQUIRE(s.points.size() == scheme.count);

    std::size_t in_scope = 0, correct = 0;
    for (const auto& r : rs) {
      if (r.student_id == subject.student_id && matches(subject.mode, r.mode) &&
          r.objectives.count(*subject.selector.objectives.begin())) {
        ++in_scope;
        correct += r.correct;
      }
    }
    std::size_t sum = 0;
    for (const auto& p : s.points) {
      sum += p.count;
      CHECK(p.accuracy().has_value() == (p.count > 0));
      CHECK(p.mean_duration().has_value() == (p.count > 0));
      if (p.count) {
        CHECK(*p.accuracy() >= 0.0);
        CHECK(*p.accuracy() <= 1.0);
        CHECK(*p.mean_duration() >= 0.0);
      }
    }
    CHECK(sum == in_scope);
    CHECK(s.total().correct == correct);

    if (s.points.size() >= 2) {
      const auto& a = s.points[0];
      const auto& b = s.points[1];
      auto merged = a;
      merged += b;
      if (merged.count > 0) {
        const double weighted = ((a.count ? *a.accuracy() * a.count : 0.0) + (b.count ? *b.accuracy() * b.count : 0.0)) /
                                static_cast<double>(merged.count);
        CHECK(std::fabs(*merged.accuracy() - weighted) < 1e-12);
      }
    }

    auto shuffled = rs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(build_series(shuffled, scheme, subject) == s);
  }
}

TEST_CASE("cohort means: one student, two students, and a flat recomputation") {
  const auto g = flat_graph({"A"});
  std::map<std::string, IntervalScheme> schemes{{"U", weeks(1)}};

  std::vector<AttemptRecord> solo{rec("s", "q1", at(0), 10, true, {"A"}), rec("s", "q2", at(1), 20, false, {"A"})};
  auto c = build_cohort_stats(solo, schemes, g);
  const auto* cell = c.find("A", ModeFilter::All);
  REQUIRE(cell);
  REQUIRE(cell->intervals[0]);
  CHECK(cell->intervals[0]->mean_accuracy == 0.5);
  CHECK(cell->intervals[0]->mean_duration == 15.0);
  CHECK(cell->intervals[0]->cohort_size == 1);
  CHECK_FALSE(c.find("A", ModeFilter::Test));

  std::vector<AttemptRecord> two;
  for (int i = 0; i < 5; ++i) two.push_back(rec("a", "q" + std::to_string(i), at(i), 10, i < 4, {"A"}));
  for (int i = 0; i < 5; ++i) two.push_back(rec("b", "q" + std::to_string(i), at(i), 10, i < 3, {"A"}));
  c = build_cohort_stats(two, schemes, g);
  CHECK(std::fabs(c.find("A", ModeFilter::All)->intervals[0]->mean_accuracy - 0.7) < 1e-12);
  CHECK(c.students == 2);
}

TEST_CASE("cohort stats on the synthetic cohort equal a flat full-scan recomputation") {
  const auto& f = testing::steven();
  const auto& graph = f.data.graph;
  const auto& rs = f.data.records;
  const auto& schemes = f.ctx->schemes;
  const auto& cohort = f.ctx->cohort;
  std::size_t checked = 0;
  for (const auto& unit : graph.units()) {
    const auto& scheme = schemes.at(unit.id);
    for (const auto& obj : unit.objectives) {
      for (auto mode : kModeFilters) {
        // Flat scan: per student per interval counts.
        std::map<std::pair<std::string, std::size_t>, std::array<double, 3>> cells;  // n, correct, dur
        for (const auto& r : rs) {
          if (!r.objectives.count(obj) || !matches(mode, r.mode)) continue;
          auto k = scheme.index_of(r.timestamp);
          if (!k) continue;
          auto& a = cells[{r.student_id, *k}];
          a[0] += 1;
          a[1] += r.correct;
          a[2] += r.duration;
        }
        const auto* got = cohort.find(obj, mode);
        if (cells.empty()) {
          CHECK(got == nullptr);
          continue;
        }
        REQUIRE(got);
        for (std::size_t k = 0; k < scheme.count; ++k) {
          double acc = 0, dur = 0, cnt = 0;
          std::size_t n = 0;
          for (const auto& [key, a] : cells) {
            if (key.second != k) continue;
            acc += a[1] / a[0];
            dur += a[2] / a[0];
            cnt += a[0];
            ++n;
          }
          if (n == 0) {
            CHECK_FALSE(got->intervals[k].has_value());
            continue;
          }
          REQUIRE(got->intervals[k].has_value());
          CHECK(got->intervals[k]->cohort_size == n);
          CHECK(std::fabs(got->intervals[k]->mean_accuracy - acc / n) < 1e-9);
          CHECK(std::fabs(got->intervals[k]->mean_duration - dur / n) < 1e-9);
          CHECK(std::fabs(got->intervals[k]->mean_count - cnt / n) < 1e-9);
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("cache entries are pure, round-trip exactly and detect staleness") {
  const auto& f = testing::steven();
  const auto e1 = f.entry(testing::kSteven, "U7");
  const auto e2 = f.entry(testing::kSteven, "U7");
  CHECK(serialize_entry(e1) == serialize_entry(e2));
  CHECK(cache_entry_from_json(to_json(e1)) == e1);

  // Every objective of the unit, of earlier units and their ancestors is carried.
  for (const auto& o : cache_scope(f.data.graph, "U7")) CHECK(e1.find_objective(o) != nullptr);

  testing::TempDir dir;
  CacheStore store(dir.path());
  const auto name = store.write(e1);
  CHECK(std::filesystem::exists(dir.path() / name));
  CHECK(std::filesystem::exists(dir.path() / "index.json"));
  const auto back = store.read(testing::kSteven, "U7");
  REQUIRE(back);
  CHECK(*back == e1);
  CHECK_FALSE(store.read("nobody", "U7").has_value());
  try {
    store.require("nobody", "U7");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("aggregate") != std::string::npos);
  }

  CHECK_FALSE(store.is_stale(testing::kSteven, "U7", e1.input_hash));
  auto changed = f.data.records;
  changed.back().duration += 1.0;
  const auto new_hash = inputs_hash(f.data.graph, changed, f.config.aggregation_fingerprint());
  CHECK(new_hash != e1.input_hash);
  CHECK(store.is_stale(testing::kSteven, "U7", new_hash));

  // Rewriting with different content replaces the old file.
  auto e3 = e1;
  e3.input_hash = new_hash;
  const auto name3 = store.write(e3);
  CHECK(name3 != name);
  CHECK_FALSE(std::filesystem::exists(dir.path() / name));
  CHECK_FALSE(store.is_stale(testing::kSteven, "U7", new_hash));
}

TEST_CASE("unreadable cache index is a storage error") {
  testing::TempDir dir;
  write_file_atomic(dir.path() / "index.json", "{not json");
  CacheStore store(dir.path());
  try {
    store.index();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Storage);
  }
}

TEST_CASE("difficulty profile of a question bank") {
  std::vector<AttemptRecord> rs{rec("s", "q1", at(0), 1, true, {"A"}, Difficulty::Easy),
                                rec("s", "q2", at(0), 1, true, {"A"}, Difficulty::Hard),
                                rec("t", "q2", at(0), 1, true, {"A"}, Difficulty::Hard),
                                rec("s", "q3", at(0), 1, true, {"A", "B"}, Difficulty::Medium),
                                rec("s", "q4", at(0), 1, true, {"B"}, Difficulty::Hard)};
  const auto p = difficulty_profile(QuestionCatalog::from_records(rs), "A");
  REQUIRE(p);
  CHECK(p->question_count == 3);
  CHECK(p->share(Difficulty::Easy) == doctest::Approx(1.0 / 3));
  CHECK(p->share(Difficulty::Medium) == doctest::Approx(1.0 / 3));
  CHECK(p->share(Difficulty::Hard) == doctest::Approx(1.0 / 3));
  CHECK_FALSE(difficulty_profile(QuestionCatalog::from_records(rs), "C").has_value());
}
