#pragma once

// Per-objective multi-dimensional time series (volume, mean time, accuracy per
// interval) and cohort statistics.

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "learnstory/model.hpp"

namespace learnstory {

// Half-open, contiguous intervals [origin + k*width, origin + (k+1)*width).
struct IntervalScheme {
  Timestamp origin{};
  std::chrono::seconds width{std::chrono::days{7}};
  std::size_t count = 0;

  // Interval index for t, or nullopt when t falls outside the scheme.
  std::optional<std::size_t> index_of(Timestamp t) const;
  bool operator==(const IntervalScheme&) const = default;
};

struct SchemeOptions {
  std::chrono::seconds width{std::chrono::days{7}};
  std::optional<Timestamp> origin;      // default: midnight of the earliest record
  std::optional<std::size_t> count;     // default: enough to cover the latest record
};

// Scheme covering every record that touches one of the given objectives.
// Throws a Data error when no such record exists and no origin is configured.
IntervalScheme derive_scheme(const std::vector<AttemptRecord>& records,
                             const ObjectiveSet& objectives, const SchemeOptions& options);

// Which records a series is built from.
struct ObjectiveSelector {
  enum class Kind {
    Single,  // record tags the objective
    AllOf,   // record tags every objective of the set
    AnyOf,   // record tags at least one (unit-level "All objectives")
  };
  Kind kind = Kind::Single;
  ObjectiveSet objectives;

  static ObjectiveSelector single(ObjectiveId id) { return {Kind::Single, {std::move(id)}}; }
  static ObjectiveSelector all_of(ObjectiveSet s) { return {Kind::AllOf, std::move(s)}; }
  static ObjectiveSelector any_of(ObjectiveSet s) { return {Kind::AnyOf, std::move(s)}; }

  bool accepts(const ObjectiveSet& tags) const;
  bool operator==(const ObjectiveSelector&) const = default;
};

struct SeriesSubject {
  std::string student_id;
  ObjectiveSelector selector;
  ModeFilter mode = ModeFilter::All;
  bool operator==(const SeriesSubject&) const = default;
};

struct SeriesPoint {
  std::size_t count = 0;
  std::size_t correct = 0;
  double total_duration = 0.0;

  // Absent iff count == 0.
  std::optional<double> mean_duration() const;
  std::optional<double> accuracy() const;

  SeriesPoint& operator+=(const SeriesPoint& other);
  bool operator==(const SeriesPoint&) const = default;
};

struct PerformanceSeries {
  SeriesSubject subject;
  std::vector<SeriesPoint> points;  // length == scheme.count

  SeriesPoint total() const;
  bool operator==(const PerformanceSeries&) const = default;
};

// Throws a Data error for an empty scheme or a subject objective missing from
// the graph (when a graph is supplied).
PerformanceSeries build_series(const std::vector<AttemptRecord>& records,
                               const IntervalScheme& scheme, const SeriesSubject& subject,
                               const ObjectiveGraph* graph = nullptr);

struct CohortCell {
  double mean_accuracy = 0.0;
  double mean_duration = 0.0;
  double mean_count = 0.0;
  std::size_t cohort_size = 0;  // students with N > 0 in the cell
  bool operator==(const CohortCell&) const = default;
};

// Peer means for one (objective, mode): per interval, plus the whole period.
struct CohortSeries {
  std::vector<std::optional<CohortCell>> intervals;
  std::optional<CohortCell> overall;
  bool operator==(const CohortSeries&) const = default;
};

struct CohortKey {
  std::string objective;  // objective id or "unit:<id>"
  ModeFilter mode;
  auto operator<=>(const CohortKey&) const = default;
};

struct CohortStats {
  std::map<CohortKey, CohortSeries> cells;
  std::size_t students = 0;

  const CohortSeries* find(const std::string& objective, ModeFilter mode) const;
};

std::string unit_key(const std::string& unit_id);

// Cohort means per objective (in its unit's scheme) and per unit. The focal
// student is part of the cohort. Empty cells are absent, never zero-filled.
CohortStats build_cohort_stats(const std::vector<AttemptRecord>& all_records,
                               const std::map<std::string, IntervalScheme>& unit_schemes,
                               const ObjectiveGraph& graph);

// Schemes for every unit that has records.
std::map<std::string, IntervalScheme> derive_unit_schemes(
    const std::vector<AttemptRecord>& records, const ObjectiveGraph& graph,
    const SchemeOptions& options);

}  // namespace learnstory
