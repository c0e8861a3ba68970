#pragma once

// Summative insight mining: enumerate subspaces over (mode, objective,
// measure), run the five detectors, score by significance x impact and keep
// the top k.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "learnstory/aggregation.hpp"
#include "learnstory/cache.hpp"
#include "learnstory/model.hpp"

namespace learnstory {

using nlohmann::json;

enum class Measure { Count, MeanDuration, Accuracy };
inline constexpr std::array<Measure, 3> kMeasures{Measure::Count, Measure::MeanDuration,
                                                  Measure::Accuracy};
std::string_view to_string(Measure m);
Measure parse_measure(std::string_view s);

enum class InsightKind { Majority, Outlier, Trend, ChangePoint, LowVariance };
inline constexpr std::array<InsightKind, 5> kInsightKinds{
    InsightKind::Majority, InsightKind::Outlier, InsightKind::Trend, InsightKind::ChangePoint,
    InsightKind::LowVariance};
std::string_view to_string(InsightKind k);
InsightKind parse_insight_kind(std::string_view s);

inline constexpr const char* kAllObjectives = "*";

struct Subspace {
  ModeFilter mode = ModeFilter::All;
  std::string objective = kAllObjectives;  // id, set key "A+B", or "*"
  Measure measure = Measure::Accuracy;

  bool all_objectives() const { return objective == kAllObjectives; }
  // "Exercise|S1102|Accuracy"; used for deterministic tie-breaks and ids.
  std::string key() const;
  bool operator==(const Subspace&) const = default;
};

// Every mode x (unit objective..., All) x measure, in that nesting order.
std::vector<Subspace> enumerate_subspaces(const ObjectiveGraph& graph, const std::string& unit_id);

struct MajorityEvidence {
  ObjectiveId dominant;
  double share = 0.0;
  bool operator==(const MajorityEvidence&) const = default;
};
struct OutlierEvidence {
  std::size_t index = 0;  // interval index
  double value = 0.0;
  double median = 0.0;
  double z = 0.0;
  bool operator==(const OutlierEvidence&) const = default;
};
struct TrendEvidence {
  double slope = 0.0;  // per interval
  double r = 0.0;
  double p_value = 1.0;
  bool operator==(const TrendEvidence&) const = default;
};
struct ChangePointEvidence {
  std::size_t index = 0;  // first interval after the change
  double mean_before = 0.0;
  double mean_after = 0.0;
  double p_value = 1.0;
  bool operator==(const ChangePointEvidence&) const = default;
};
struct LowVarianceEvidence {
  double cv = 0.0;
  double mean = 0.0;
  bool operator==(const LowVarianceEvidence&) const = default;
};

using Evidence = std::variant<MajorityEvidence, OutlierEvidence, TrendEvidence,
                              ChangePointEvidence, LowVarianceEvidence>;

InsightKind kind_of(const Evidence& e);

struct DetectorConfig {
  double floor = 0.8;
  std::size_t permutations = 1000;
  std::uint64_t seed = 42;
};

struct InsightCore {
  double significance = 0.0;
  Evidence evidence;
};

// One measure over the intervals; nullopt marks an absent point.
using MeasureSeries = std::vector<std::optional<double>>;

MeasureSeries measure_values(const PerformanceSeries& series, Measure measure);

// Time-series detectors (Outlier, Trend, ChangePoint, LowVariance). Returns a
// core only when significance exceeds config.floor.
std::optional<InsightCore> detect(const MeasureSeries& series, InsightKind kind,
                                  const DetectorConfig& config);

// Detector statistic without the floor, for diagnostics and tests.
std::optional<InsightCore> evaluate(const MeasureSeries& series, InsightKind kind,
                                    const DetectorConfig& config);

// Majority over a per-objective share breakdown of a measure's totals.
std::optional<InsightCore> detect_majority(const std::map<ObjectiveId, double>& totals,
                                           const DetectorConfig& config);

struct Insight {
  std::string id;  // "ins:<Kind>:<subspace key>"
  InsightKind kind = InsightKind::Trend;
  Subspace subspace;
  Evidence evidence;
  double significance = 0.0;
  double impact = 0.0;
  double score = 0.0;
  std::string unit_id;
  MeasureSeries series;  // snapshot for rendering; empty for Majority
  std::map<std::string, std::string> display;  // formatted numbers used by narratives

  bool operator==(const Insight&) const = default;
};

std::string insight_id(InsightKind kind, const Subspace& subspace);

json to_json(const Insight& insight);
Insight insight_from_json(const json& j);

// Candidate inputs for ranking.
struct SubspaceData {
  Subspace subspace;
  MeasureSeries values;
  double impact = 0.0;
};
struct MajorityData {
  Subspace subspace;  // objective == "*"
  std::map<ObjectiveId, double> totals;
  double impact = 0.0;
};

// Score equal within this tolerance counts as a tie, broken by (kind, subspace key).
inline constexpr double kScoreTieTolerance = 1e-12;
bool ranks_before(const Insight& a, const Insight& b);

// Scores every candidate, keeps at most one per (subspace, kind), sorts and
// truncates to k (k == 0 keeps all).
std::vector<Insight> rank_insights(const std::vector<SubspaceData>& series,
                                   const std::vector<MajorityData>& majority,
                                   const DetectorConfig& config, std::size_t k,
                                   const std::string& unit_id);

// Full-lattice candidates for the entry's report unit.
void collect_unit_candidates(const CacheEntry& entry, const ObjectiveGraph& graph,
                             std::vector<SubspaceData>& series,
                             std::vector<MajorityData>& majority);

std::vector<Insight> mine_top_k(const CacheEntry& entry, const ObjectiveGraph& graph,
                                const DetectorConfig& config, std::size_t k = 3);

// Insights for a single objective (or associated set) series bundle; impact is
// measured against the unit-level record total of `unit_id`.
std::vector<Insight> mine_scoped(const CacheEntry& entry, const std::string& objective_key,
                                 const ModeSeries& series, const std::string& unit_id,
                                 const DetectorConfig& config, std::size_t k = 0);

}  // namespace learnstory
