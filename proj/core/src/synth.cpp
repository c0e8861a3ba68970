#include "learnstory/synth.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <map>
#include <set>
#include <cmath>
#include <random>

#include "learnstory/error.hpp"
#include "learnstory/io.hpp"

namespace learnstory {

namespace {

using std::chrono::days;
using std::chrono::hours;
using std::chrono::minutes;

// mt19937_64 with an explicit mapping to [0, 1); standard distributions are
// implementation-defined and would make output differ across libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(unit() * static_cast<double>(n)); }
  double between(double lo, double hi) { return lo + (hi - lo) * unit(); }
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

std::string student_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "learner-%04zu", i + 1);
  return buf;
}

struct Bank {
  ObjectiveSet tags;
  std::array<std::vector<std::string>, 3> by_difficulty;  // question ids
  std::size_t cursor = 0;

  std::size_t size() const {
    return by_difficulty[0].size() + by_difficulty[1].size() + by_difficulty[2].size();
  }
  // Round-robin over the whole bank so every question is eventually used.
  std::pair<std::string, Difficulty> next() {
    std::size_t k = cursor++ % size();
    for (auto d : kDifficulties) {
      const auto& v = by_difficulty[static_cast<std::size_t>(d)];
      if (k < v.size()) return {v[k], d};
      k -= v.size();
    }
    return {by_difficulty[0].front(), Difficulty::Easy};
  }
  const std::string& pick(Difficulty d, std::size_t k) const {
    const auto& v = by_difficulty[static_cast<std::size_t>(d)];
    return v[k % v.size()];
  }
};

Bank make_bank(const ObjectiveSet& tags, std::size_t easy, std::size_t medium, std::size_t hard) {
  Bank b;
  b.tags = tags;
  const std::string stem = "Q-" + set_key(tags) + "-";
  std::size_t n = 0;
  const std::array<std::size_t, 3> counts{easy, medium, hard};
  for (auto d : kDifficulties) {
    for (std::size_t i = 0; i < counts[static_cast<std::size_t>(d)]; ++i) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "%03zu", ++n);
      b.by_difficulty[static_cast<std::size_t>(d)].push_back(stem + buf);
    }
  }
  return b;
}

double base_duration(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return 60.0;
    case Difficulty::Medium: return 120.0;
    case Difficulty::Hard: return 180.0;
  }
  return 90.0;
}

struct UnitWindow {
  Timestamp start;
  std::size_t exercise_weeks = 2;  // test week follows
};

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  Rng& rng() { return rng_; }
  std::vector<AttemptRecord>& records() { return records_; }

  void add(const std::string& student, const std::string& question, const ObjectiveSet& tags,
           Difficulty d, Mode mode, bool correct, Timestamp t, double duration) {
    records_.push_back({student, question, t, duration, correct, tags, d, mode});
  }

  // Time inside week w of a window; day in [0, 5), 08:00-20:00.
  Timestamp at(const UnitWindow& w, std::size_t week, std::size_t slot) {
    const auto day = days(7 * week + (slot % 5));
    const auto minute = minutes(8 * 60 + static_cast<long>(rng_.below(12 * 60)));
    return w.start + day + minute;
  }

 private:
  Rng rng_;
  std::vector<AttemptRecord> records_;
};

struct Curriculum {
  ObjectiveGraph graph;
  std::map<std::string, Bank> banks;  // single-objective banks by id, set banks by key
  std::vector<UnitWindow> windows;
};

Timestamp course_start() { return parse_timestamp("2024-09-02T00:00:00Z"); }

Curriculum steven_curriculum() {
  std::vector<Unit> units{
      {"U1", "Unit 1", {"N1101", "N1102"}},
      {"U2", "Unit 2", {"N1107", "N1108"}},
      {"U3", "Unit 3", {"N1114", "N1115", "N1136"}},
      {"U4", "Unit 4", {"N1201", "N1202"}},
      {"U5", "Unit 5", {"S1001", "S1002"}},
      {"U6", "Unit 6", {"S1101", "S1103"}},
      {"U7", "Unit 7", {"S1102", "S1205", "S1206", "S2106"}},
  };
  const std::map<std::string, std::string> labels{
      {"N1101", "Counting to one hundred"},     {"N1102", "Place value"},
      {"N1107", "Addition with carrying"},      {"N1108", "Subtraction with borrowing"},
      {"N1114", "Multiplication facts"},        {"N1115", "Division facts"},
      {"N1136", "Order of operations"},         {"N1201", "Fractions as parts"},
      {"N1202", "Equivalent fractions"},        {"S1001", "Points and lines"},
      {"S1002", "Angles"},                      {"S1101", "Triangles"},
      {"S1103", "Quadrilaterals"},              {"S1102", "Perimeter"},
      {"S1205", "Area of composite shapes"},    {"S1206", "Area with unit conversion"},
      {"S2106", "Word problems on area"},
  };
  std::vector<LearningObjective> objectives;
  for (const auto& u : units) {
    for (const auto& id : u.objectives) objectives.push_back({id, labels.at(id), u.id});
  }
  std::vector<Edge> edges{
      {"N1101", "N1102"}, {"N1102", "N1107"}, {"N1107", "N1108"}, {"N1107", "N1114"},
      {"N1108", "N1115"}, {"N1114", "N1136"}, {"N1201", "N1202"}, {"N1202", "S1101"},
      {"S1001", "S1002"}, {"S1002", "S1103"}, {"S1101", "S1102"}, {"S1103", "S1205"},
      {"N1114", "S1205"}, {"N1115", "S1206"}, {"N1136", "S2106"},
  };
  Curriculum c{ObjectiveGraph(units, objectives, edges), {}, {}};

  for (const auto& o : objectives) c.banks[o.id] = make_bank({o.id}, 4, 5, 3);
  c.banks["S1205"] = make_bank({"S1205"}, 1, 11, 8);
  c.banks["S2106"] = make_bank({"S2106"}, 1, 12, 9);
  c.banks["S1206"] = make_bank({"S1206"}, 11, 15, 25);  // 25 of 51 hard
  c.banks["S1205+S2106"] = make_bank({"S1205", "S2106"}, 0, 3, 3);
  c.banks["N1114"] = make_bank({"N1114"}, 6, 6, 6);
  c.banks["N1115"] = make_bank({"N1115"}, 6, 6, 6);
  c.banks["N1136"] = make_bank({"N1136"}, 6, 6, 6);

  auto t = course_start();
  for (std::size_t i = 0; i < units.size(); ++i) {
    const bool last = i + 1 == units.size();
    c.windows.push_back({t, last ? std::size_t{6} : std::size_t{2}});
    t += days(7 * (c.windows.back().exercise_weeks + 1));
  }
  return c;
}

// Scripted attempts: difficulty counts and correct counts per difficulty.
struct Script {
  std::array<std::size_t, 3> attempts{};
  std::array<std::size_t, 3> correct{};
};

void scripted(Builder& b, Curriculum& c, const std::string& student, const std::string& obj,
              const UnitWindow& w, const Script& s, std::size_t test_count) {
  const auto& bank = c.banks.at(obj);
  std::vector<std::pair<Difficulty, bool>> plan;
  for (auto d : kDifficulties) {
    const auto k = static_cast<std::size_t>(d);
    for (std::size_t i = 0; i < s.attempts[k]; ++i) plan.emplace_back(d, i < s.correct[k]);
  }
  // Interleave so exercise and test both see a mix; deterministic shuffle.
  for (std::size_t i = plan.size(); i > 1; --i) std::swap(plan[i - 1], plan[b.rng().below(i)]);
  const std::size_t exercises = plan.size() - test_count;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto [d, ok] = plan[i];
    const bool test = i >= exercises;
    const std::size_t week = test ? w.exercise_weeks : (i * w.exercise_weeks) / std::max<std::size_t>(1, exercises);
    b.add(student, bank.pick(d, i), bank.tags, d, test ? Mode::Test : Mode::Exercise, ok, b.at(w, week, i),
          std::round(base_duration(d) * b.rng().between(0.8, 1.2)));
  }
}

// Prior units: ten exercises (eight correct) and two correct test questions per objective.
void steady_unit(Builder& b, Curriculum& c, const std::string& student, const Unit& u, const UnitWindow& w) {
  for (const auto& obj : u.objectives) {
    auto& bank = c.banks.at(obj);
    for (std::size_t i = 0; i < 12; ++i) {
      const bool test = i >= 10;
      const auto d = kDifficulties[i % 3];
      const std::size_t week = test ? w.exercise_weeks : (i * w.exercise_weeks) / 10;
      b.add(student, bank.pick(d, i), bank.tags, d, test ? Mode::Test : Mode::Exercise, test || i % 5 != 4,
            b.at(w, week, i), std::round(base_duration(d) * b.rng().between(0.8, 1.2)));
    }
  }
}

void steven(Builder& b, Curriculum& c, const std::string& id) {
  const auto& units = c.graph.units();
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (units[u].id == "U3" || units[u].id == "U7") continue;
    steady_unit(b, c, id, units[u], c.windows[u]);
  }
  const auto& w3 = c.windows[2];
  // Each Unit 3 objective lands at exactly one quarter correct; the difficulty
  // mix puts weighted mastery at 8/33, 12/48 and 8/32.
  scripted(b, c, id, "N1114", w3, {{11, 5, 4}, {3, 1, 1}}, 4);
  scripted(b, c, id, "N1115", w3, {{8, 8, 8}, {2, 2, 2}}, 4);
  scripted(b, c, id, "N1136", w3, {{4, 8, 4}, {1, 2, 1}}, 4);

  const auto& w7 = c.windows[6];
  auto ex = [&](const std::string& obj, const std::array<std::size_t, 6>& per_week,
                const std::array<std::size_t, 6>& correct, bool medium_only) {
    auto& bank = c.banks.at(obj);
    std::size_t n = 0;
    for (std::size_t week = 0; week < 6; ++week) {
      for (std::size_t i = 0; i < per_week[week]; ++i, ++n) {
        const auto [q, d0] = bank.next();
        const auto d = medium_only ? Difficulty::Medium : d0;
        const auto question = medium_only ? bank.pick(Difficulty::Medium, n) : q;
        const double dur = medium_only ? (n % 2 ? 130.0 : 110.0) : std::round(base_duration(d) * b.rng().between(0.9, 1.1));
        b.add(id, question, bank.tags, d, Mode::Exercise, i < correct[week], b.at(w7, week, n), dur);
      }
    }
  };
  auto test = [&](const std::string& obj, std::size_t count, std::size_t correct, bool medium_only) {
    auto& bank = c.banks.at(obj);
    for (std::size_t i = 0; i < count; ++i) {
      const auto [q, d0] = bank.next();
      const auto d = medium_only ? Difficulty::Medium : d0;
      const auto question = medium_only ? bank.pick(Difficulty::Medium, 7 + i) : q;
      const double dur = medium_only ? (i % 2 ? 130.0 : 110.0) : std::round(base_duration(d) * b.rng().between(0.9, 1.1));
      b.add(id, question, bank.tags, d, Mode::Test, i < correct, b.at(w7, 6, i), dur);
    }
  };
  // S1102: 12 exercises (11 correct) and 4 correct test questions, all medium, 120 s mean.
  ex("S1102", {2, 2, 2, 2, 2, 2}, {1, 2, 2, 2, 2, 2}, true);
  test("S1102", 4, 4, true);
  ex("S1205", {1, 2, 2, 2, 2, 2}, {0, 1, 1, 2, 2, 2}, false);
  test("S1205", 4, 4, false);
  ex("S1206", {2, 2, 2, 2, 2, 2}, {1, 1, 1, 2, 2, 2}, false);
  test("S1206", 5, 5, false);
  ex("S2106", {2, 2, 2, 2, 2, 2}, {0, 1, 1, 1, 2, 2}, false);
  test("S2106", 6, 5, false);
  ex("S1205+S2106", {0, 0, 1, 1, 1, 1}, {0, 0, 0, 1, 1, 1}, false);
}

// A peer works through every unit with per-objective ability.
void peer(Builder& b, Curriculum& c, const std::string& id, double activity) {
  const auto& units = c.graph.units();
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& w = c.windows[u];
    for (const auto& obj : units[u].objectives) {
      const double ability = b.rng().between(0.35, 0.95);
      auto& bank = c.banks.at(obj);
      std::size_t n = 0;
      for (std::size_t week = 0; week < w.exercise_weeks; ++week) {
        const std::size_t count = b.rng().chance(activity) ? 1 + b.rng().below(3) : 0;
        for (std::size_t i = 0; i < count; ++i, ++n) {
          const auto [q, d] = bank.next();
          const double p = std::clamp(ability - 0.1 * static_cast<double>(static_cast<int>(d) - 1), 0.05, 0.98);
          b.add(id, q, bank.tags, d, Mode::Exercise, b.rng().chance(p), b.at(w, week, n),
                std::round(base_duration(d) * b.rng().between(0.6, 1.5)));
        }
      }
      if (!b.rng().chance(activity)) continue;
      const std::size_t tests = 2 + b.rng().below(4);
      for (std::size_t i = 0; i < tests; ++i, ++n) {
        const auto [q, d] = bank.next();
        const double p = std::clamp(ability + 0.05, 0.05, 0.98);
        b.add(id, q, bank.tags, d, Mode::Test, b.rng().chance(p), b.at(w, w.exercise_weeks, n),
              std::round(base_duration(d) * b.rng().between(0.6, 1.5)));
      }
    }
    if (units[u].id == "U7" && b.rng().chance(0.5)) {
      auto& bank = c.banks.at("S1205+S2106");
      const auto [q, d] = bank.next();
      b.add(id, q, bank.tags, d, Mode::Exercise, b.rng().chance(0.5), b.at(w, 2 + b.rng().below(4), 0),
            std::round(base_duration(d) * b.rng().between(0.6, 1.5)));
    }
  }
}

// Every bank question appears at least once so the catalog matches the banks.
void cover_banks(Builder& b, Curriculum& c, const std::string& id) {
  std::map<std::string, std::size_t> unit_of;
  for (std::size_t u = 0; u < c.graph.units().size(); ++u) unit_of[c.graph.units()[u].id] = u;
  std::set<std::string> seen;
  for (const auto& r : b.records()) seen.insert(r.question_id);
  for (auto& [key, bank] : c.banks) {
    const auto& first = *bank.tags.begin();
    const auto& w = c.windows[unit_of.at(c.graph.objective(first).unit_id)];
    std::size_t n = 0;
    for (auto d : kDifficulties) {
      for (const auto& q : bank.by_difficulty[static_cast<std::size_t>(d)]) {
        if (seen.count(q)) continue;
        b.add(id, q, bank.tags, d, Mode::Exercise, b.rng().chance(0.6), b.at(w, n % w.exercise_weeks, n),
              base_duration(d));
        ++n;
      }
    }
  }
}

SynthOutput finish(Builder& b, Curriculum& c, std::string focal, std::string unit) {
  SynthOutput out{std::move(c.graph), std::move(b.records()), std::move(focal), std::move(unit)};
  sort_records(out.records);
  return out;
}

SynthOutput sparse(Builder& b, Curriculum& c, std::size_t cohort) {
  const auto focal = student_id(0);
  const auto& w7 = c.windows[6];
  // A handful of exercises on two objectives, no test records.
  for (std::size_t i = 0; i < 3; ++i) {
    auto& bank = c.banks.at("S1102");
    const auto [q, d] = bank.next();
    b.add(focal, q, bank.tags, d, Mode::Exercise, i != 1, b.at(w7, i, i), base_duration(d));
  }
  {
    auto& bank = c.banks.at("S1206");
    const auto [q, d] = bank.next();
    b.add(focal, q, bank.tags, d, Mode::Exercise, false, b.at(w7, 4, 0), base_duration(d));
  }
  for (std::size_t s = 1; s < cohort; ++s) peer(b, c, student_id(s), 0.3);
  return finish(b, c, focal, "U7");
}

}  // namespace

SynthOutput synthesize(const SynthOptions& options) {
  if (options.cohort_size < 1) fail(ErrorKind::Config, "cohort size must be at least 1");
  Builder b(options.seed);
  auto c = steven_curriculum();
  if (options.scenario == "steven") {
    const auto focal = student_id(0);
    steven(b, c, focal);
    for (std::size_t s = 1; s < options.cohort_size; ++s) peer(b, c, student_id(s), 0.85);
    cover_banks(b, c, options.cohort_size > 1 ? student_id(1) : focal);
    return finish(b, c, focal, "U7");
  }
  if (options.scenario == "sparse") return sparse(b, c, options.cohort_size);
  if (options.scenario == "cohort") {
    for (std::size_t s = 0; s < options.cohort_size; ++s) peer(b, c, student_id(s), 0.85);
    return finish(b, c, "", "U7");
  }
  fail(ErrorKind::Config, "unknown scenario '" + options.scenario + "' (steven, sparse, cohort)");
}

SynthOutput synthesize_load(std::uint64_t seed, std::size_t students, std::size_t objectives,
                            std::size_t intervals) {
  if (students < 1 || objectives < 1 || intervals < 1) {
    fail(ErrorKind::Config, "load fixture needs at least one student, objective and interval");
  }
  std::vector<Unit> units{{"P", "Warm-up", {"P01", "P02"}}, {"R", "Main unit", {}}};
  std::vector<LearningObjective> objs{{"P01", "Warm-up one", "P"}, {"P02", "Warm-up two", "P"}};
  std::vector<Edge> edges{{"P01", "P02"}};
  for (std::size_t i = 0; i < objectives; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "R%02zu", i + 1);
    units[1].objectives.push_back(buf);
    objs.push_back({buf, std::string("Objective ") + buf, "R"});
    edges.push_back({i == 0 ? "P02" : units[1].objectives[i - 1], buf});
  }
  Curriculum c{ObjectiveGraph(units, objs, edges), {}, {}};
  for (const auto& o : objs) c.banks[o.id] = make_bank({o.id}, 4, 4, 4);
  c.windows = {{course_start(), 2}, {course_start() + days(21), intervals}};

  Builder b(seed);
  for (std::size_t s = 0; s < students; ++s) {
    const auto id = student_id(s);
    for (std::size_t u = 0; u < units.size(); ++u) {
      const auto& w = c.windows[u];
      for (const auto& obj : units[u].objectives) {
        const double ability = b.rng().between(0.3, 0.95);
        auto& bank = c.banks.at(obj);
        std::size_t n = 0;
        for (std::size_t week = 0; week < w.exercise_weeks; ++week) {
          const std::size_t count = 1 + b.rng().below(3);
          for (std::size_t i = 0; i < count; ++i, ++n) {
            const auto [q, d] = bank.next();
            const bool test = u == 1 && week + 1 == w.exercise_weeks && i == 0;
            b.add(id, q, bank.tags, d, test ? Mode::Test : Mode::Exercise, b.rng().chance(ability),
                  b.at(w, week, n), std::round(base_duration(d) * b.rng().between(0.6, 1.5)));
          }
        }
      }
    }
  }
  return finish(b, c, student_id(0), "R");
}

}  // namespace learnstory
