#include "learnstory/aggregation.hpp"

#include <algorithm>
#include <limits>

#include "learnstory/error.hpp"
#include "learnstory/io.hpp"

namespace learnstory {

std::optional<std::size_t> IntervalScheme::index_of(Timestamp t) const {
  if (t < origin || width.count() <= 0) return std::nullopt;
  const auto k = static_cast<std::size_t>((t - origin).count() / width.count());
  if (k >= count) return std::nullopt;
  return k;
}

namespace {

bool touches(const ObjectiveSet& tags, const ObjectiveSet& objectives) {
  for (const auto& id : tags) {
    if (objectives.count(id)) return true;
  }
  return false;
}

}  // namespace

IntervalScheme derive_scheme(const std::vector<AttemptRecord>& records,
                             const ObjectiveSet& objectives, const SchemeOptions& options) {
  if (options.width.count() <= 0) fail(ErrorKind::Config, "interval width must be positive");
  std::optional<Timestamp> first, last;
  for (const auto& r : records) {
    if (!touches(r.objectives, objectives)) continue;
    if (!first || r.timestamp < *first) first = r.timestamp;
    if (!last || r.timestamp > *last) last = r.timestamp;
  }
  IntervalScheme scheme;
  scheme.width = options.width;
  if (options.origin) {
    scheme.origin = *options.origin;
  } else if (first) {
    scheme.origin = midnight_utc(*first);
  } else {
    fail(ErrorKind::Data, "no records to derive an interval scheme from");
  }
  if (options.count) {
    scheme.count = *options.count;
  } else if (last && *last >= scheme.origin) {
    scheme.count = static_cast<std::size_t>((*last - scheme.origin).count() / scheme.width.count()) + 1;
  } else {
    scheme.count = 1;
  }
  return scheme;
}

bool ObjectiveSelector::accepts(const ObjectiveSet& tags) const {
  switch (kind) {
    case Kind::Single:
    case Kind::AllOf:
      return std::includes(tags.begin(), tags.end(), objectives.begin(), objectives.end());
    case Kind::AnyOf:
      return touches(tags, objectives);
  }
  return false;
}

std::optional<double> SeriesPoint::mean_duration() const {
  if (count == 0) return std::nullopt;
  return total_duration / static_cast<double>(count);
}

std::optional<double> SeriesPoint::accuracy() const {
  if (count == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(count);
}

SeriesPoint& SeriesPoint::operator+=(const SeriesPoint& other) {
  count += other.count;
  correct += other.correct;
  total_duration += other.total_duration;
  return *this;
}

SeriesPoint PerformanceSeries::total() const {
  SeriesPoint t;
  for (const auto& p : points) t += p;
  return t;
}

PerformanceSeries build_series(const std::vector<AttemptRecord>& records,
                               const IntervalScheme& scheme, const SeriesSubject& subject,
                               const ObjectiveGraph* graph) {
  if (scheme.count == 0) fail(ErrorKind::Data, "interval scheme has no intervals");
  if (subject.selector.objectives.empty()) fail(ErrorKind::Data, "series subject has no objectives");
  if (graph) {
    for (const auto& id : subject.selector.objectives) {
      if (!graph->contains(id)) fail(ErrorKind::Data, "unknown objective '" + id + "'");
    }
  }
  PerformanceSeries series{subject, std::vector<SeriesPoint>(scheme.count)};
  for (const auto& r : records) {
    if (r.student_id != subject.student_id || !matches(subject.mode, r.mode)) continue;
    if (!subject.selector.accepts(r.objectives)) continue;
    auto k = scheme.index_of(r.timestamp);
    if (!k) continue;
    auto& p = series.points[*k];
    ++p.count;
    p.correct += r.correct ? 1 : 0;
    p.total_duration += r.duration;
  }
  return series;
}

const CohortSeries* CohortStats::find(const std::string& objective, ModeFilter mode) const {
  auto it = cells.find({objective, mode});
  return it == cells.end() ? nullptr : &it->second;
}

std::string unit_key(const std::string& unit_id) { return "unit:" + unit_id; }

namespace {

struct Accumulator {
  double accuracy = 0.0;
  double duration = 0.0;
  double count = 0.0;
  std::size_t students = 0;

  void add(const SeriesPoint& p) {
    if (p.count == 0) return;
    accuracy += *p.accuracy();
    duration += *p.mean_duration();
    count += static_cast<double>(p.count);
    ++students;
  }
  std::optional<CohortCell> cell() const {
    if (students == 0) return std::nullopt;
    const auto n = static_cast<double>(students);
    return CohortCell{accuracy / n, duration / n, count / n, students};
  }
};

// Per-student points for one subject, without re-scanning per student.
void accumulate_subject(const std::vector<const AttemptRecord*>& records,
                        const IntervalScheme& scheme, const ObjectiveSelector& selector,
                        ModeFilter mode,
                        std::map<std::string, std::vector<SeriesPoint>>& per_student) {
  for (const auto* rp : records) {
    const auto& r = *rp;
    if (!matches(mode, r.mode) || !selector.accepts(r.objectives)) continue;
    auto k = scheme.index_of(r.timestamp);
    if (!k) continue;
    auto& pts = per_student[r.student_id];
    if (pts.empty()) pts.resize(scheme.count);
    auto& p = pts[*k];
    ++p.count;
    p.correct += r.correct ? 1 : 0;
    p.total_duration += r.duration;
  }
}

CohortSeries summarize(const std::map<std::string, std::vector<SeriesPoint>>& per_student,
                       std::size_t intervals) {
  std::vector<Accumulator> acc(intervals);
  Accumulator overall;
  for (const auto& [_, pts] : per_student) {
    SeriesPoint total;
    for (std::size_t k = 0; k < intervals; ++k) {
      acc[k].add(pts[k]);
      total += pts[k];
    }
    overall.add(total);
  }
  CohortSeries out;
  out.intervals.reserve(intervals);
  for (const auto& a : acc) out.intervals.push_back(a.cell());
  out.overall = overall.cell();
  return out;
}

}  // namespace

CohortStats build_cohort_stats(const std::vector<AttemptRecord>& all_records,
                               const std::map<std::string, IntervalScheme>& unit_schemes,
                               const ObjectiveGraph& graph) {
  CohortStats stats;
  std::set<std::string> students;
  for (const auto& r : all_records) students.insert(r.student_id);
  stats.students = students.size();

  // Bucket records by objective so each cell only scans its own records.
  std::map<ObjectiveId, std::vector<const AttemptRecord*>> by_objective;
  for (const auto& r : all_records) {
    for (const auto& id : r.objectives) by_objective[id].push_back(&r);
  }

  for (const auto& unit : graph.units()) {
    auto sit = unit_schemes.find(unit.id);
    if (sit == unit_schemes.end()) continue;
    const auto& scheme = sit->second;
    const ObjectiveSet unit_objectives(unit.objectives.begin(), unit.objectives.end());

    std::vector<const AttemptRecord*> unit_records;
    std::set<const AttemptRecord*> seen;
    for (const auto& id : unit.objectives) {
      for (const auto* r : by_objective[id]) {
        if (seen.insert(r).second) unit_records.push_back(r);
      }
    }
    for (auto mode : kModeFilters) {
      for (const auto& id : unit.objectives) {
        std::map<std::string, std::vector<SeriesPoint>> per_student;
        accumulate_subject(by_objective[id], scheme, ObjectiveSelector::single(id), mode, per_student);
        if (!per_student.empty()) stats.cells[{id, mode}] = summarize(per_student, scheme.count);
      }
      std::map<std::string, std::vector<SeriesPoint>> per_student;
      accumulate_subject(unit_records, scheme, ObjectiveSelector::any_of(unit_objectives), mode,
                         per_student);
      if (!per_student.empty()) stats.cells[{unit_key(unit.id), mode}] = summarize(per_student, scheme.count);
    }
  }
  return stats;
}

std::map<std::string, IntervalScheme> derive_unit_schemes(const std::vector<AttemptRecord>& records,
                                                          const ObjectiveGraph& graph,
                                                          const SchemeOptions& options) {
  std::map<std::string, IntervalScheme> out;
  for (const auto& unit : graph.units()) {
    const ObjectiveSet objs(unit.objectives.begin(), unit.objectives.end());
    bool any = false;
    for (const auto& r : records) {
      if (touches(r.objectives, objs)) {
        any = true;
        break;
      }
    }
    if (any || options.origin) out.emplace(unit.id, derive_scheme(records, objs, options));
  }
  return out;
}

}  // namespace learnstory
