#pragma once

// Offline metrics cache: one JSON document per (student, unit), content-hash
// named, plus an index. Report generation and Q&A read only from here.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "learnstory/aggregation.hpp"
#include "learnstory/model.hpp"

namespace learnstory {

using nlohmann::json;

inline constexpr const char* kCacheSchema = "learnstory.cache/1";

struct DifficultyProfile {
  std::array<double, 3> proportions{};  // easy, medium, hard
  std::size_t question_count = 0;

  double share(Difficulty d) const { return proportions[static_cast<std::size_t>(d)]; }
  bool operator==(const DifficultyProfile&) const = default;
};

// Difficulty distribution of catalog questions tagged with the objective.
std::optional<DifficultyProfile> difficulty_profile(const QuestionCatalog& catalog,
                                                    const ObjectiveId& objective);

struct DifficultyTally {
  std::size_t attempts = 0;
  std::size_t correct = 0;
  bool operator==(const DifficultyTally&) const = default;
};

// Series per mode filter, indexed by ModeFilter.
using ModeSeries = std::array<PerformanceSeries, 3>;
using ModeCohort = std::array<CohortSeries, 3>;

struct ObjectiveMetrics {
  std::string unit_id;
  ModeSeries series;
  ModeCohort cohort;
  std::array<DifficultyTally, 3> by_difficulty{};  // student's attempts, all modes
  std::optional<DifficultyProfile> profile;
  bool operator==(const ObjectiveMetrics&) const = default;
};

struct UnitMetrics {
  ModeSeries series;  // any-of the unit's objectives
  ModeCohort cohort;
  bool operator==(const UnitMetrics&) const = default;
};

struct AssociatedMetrics {
  ObjectiveSet objectives;
  std::size_t attempts = 0;
  ModeSeries series;
  bool operator==(const AssociatedMetrics&) const = default;
};

struct CacheEntry {
  std::string schema = kCacheSchema;
  std::string student_id;
  std::string unit_id;
  std::string input_hash;
  std::map<std::string, IntervalScheme> schemes;           // per unit with data
  std::map<ObjectiveId, ObjectiveMetrics> objectives;      // unit, prior units, ancestors
  std::map<std::string, UnitMetrics> units;                // report unit and prior units
  std::map<ObjectiveId, std::vector<AssociatedMetrics>> associated;  // per focus objective
  std::size_t cohort_students = 0;

  const ObjectiveMetrics* find_objective(std::string_view id) const;
  const ObjectiveMetrics& objective(std::string_view id) const;  // throws Data error
  const UnitMetrics& unit(std::string_view id) const;            // throws Data error
  const IntervalScheme& scheme(std::string_view unit_id) const;  // throws Data error
  bool operator==(const CacheEntry&) const = default;
};

json to_json(const CacheEntry& entry);
CacheEntry cache_entry_from_json(const json& j);

json series_to_json(const PerformanceSeries& s);
PerformanceSeries series_from_json(const json& j);
json scheme_to_json(const IntervalScheme& s);
IntervalScheme scheme_from_json(const json& j);

// Everything precomputed once per aggregation run and shared across entries.
struct AggregationContext {
  const ObjectiveGraph* graph = nullptr;
  const std::vector<AttemptRecord>* records = nullptr;
  std::map<std::string, IntervalScheme> schemes;
  CohortStats cohort;
  QuestionCatalog catalog;
  std::string input_hash;
  // "all": every student in the records file; "unit": students active in the report unit.
  std::string cohort_scope = "all";
  std::map<std::string, CohortStats> cohort_by_unit;  // cohort_scope == "unit"
  std::map<std::string, std::vector<AttemptRecord>> by_student;

  const CohortStats& cohort_for(const std::string& unit_id) const;
};

AggregationContext make_aggregation_context(const ObjectiveGraph& graph,
                                            const std::vector<AttemptRecord>& records,
                                            const SchemeOptions& options,
                                            std::string input_hash,
                                            std::string cohort_scope = "all");

// Objectives whose metrics a (student, unit) entry must carry: the unit, all
// earlier units and every ancestor of those.
ObjectiveSet cache_scope(const ObjectiveGraph& graph, const std::string& unit_id);

CacheEntry build_cache_entry(const AggregationContext& ctx, const std::string& student_id,
                             const std::string& unit_id);

// Hash of graph, records and the aggregation-relevant configuration.
std::string inputs_hash(const ObjectiveGraph& graph, const std::vector<AttemptRecord>& records,
                        const std::string& config_fingerprint);

// Directory store. Single writer, atomic renames; readers never observe
// partial files. I/O failures raise ErrorKind::Storage.
class CacheStore {
 public:
  explicit CacheStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  // Returns the entry file name.
  std::string write(const CacheEntry& entry) const;
  // Writes every entry, then the index once.
  std::vector<std::string> write(const std::vector<CacheEntry>& entries) const;
  std::optional<CacheEntry> read(const std::string& student_id, const std::string& unit_id) const;
  // Throws a Runtime error asking for "aggregate" when the entry is missing.
  CacheEntry require(const std::string& student_id, const std::string& unit_id) const;
  bool is_stale(const std::string& student_id, const std::string& unit_id,
                const std::string& current_input_hash) const;
  json index() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

std::string serialize_entry(const CacheEntry& entry);

}  // namespace learnstory
