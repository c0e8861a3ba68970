#pragma once

// Domain vocabulary shared by every stage: objectives, units, the prerequisite
// graph, attempt records and the question catalog derived from them.

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace learnstory {

using ObjectiveId = std::string;
using ObjectiveSet = std::set<ObjectiveId>;
using Timestamp = std::chrono::sys_seconds;

enum class Difficulty { Easy, Medium, Hard };
enum class Mode { Exercise, Test };
// Filter dimension over Mode; All merges both.
enum class ModeFilter { Exercise, Test, All };

inline constexpr std::array<Difficulty, 3> kDifficulties{Difficulty::Easy, Difficulty::Medium,
                                                         Difficulty::Hard};
inline constexpr std::array<ModeFilter, 3> kModeFilters{ModeFilter::Exercise, ModeFilter::Test,
                                                        ModeFilter::All};

std::string_view to_string(Difficulty d);
std::string_view to_string(Mode m);
std::string_view to_string(ModeFilter m);
// Unknown strings are a data error; there is no silent default.
Difficulty parse_difficulty(std::string_view s);
Mode parse_mode(std::string_view s);
ModeFilter parse_mode_filter(std::string_view s);

inline bool matches(ModeFilter filter, Mode mode) {
  return filter == ModeFilter::All || (filter == ModeFilter::Exercise) == (mode == Mode::Exercise);
}

struct LearningObjective {
  ObjectiveId id;
  std::string label;
  std::string unit_id;
};

struct Unit {
  std::string id;
  std::string title;
  std::vector<ObjectiveId> objectives;  // curriculum order
};

struct Edge {
  ObjectiveId from;  // prerequisite
  ObjectiveId to;
  auto operator<=>(const Edge&) const = default;
};

// Prerequisite graph with unit grouping. Immutable after load; validate with
// validate_graph() before use.
class ObjectiveGraph {
 public:
  ObjectiveGraph() = default;
  ObjectiveGraph(std::vector<Unit> units, std::vector<LearningObjective> objectives,
                 std::vector<Edge> edges);

  const std::vector<Unit>& units() const { return units_; }
  const std::vector<LearningObjective>& objectives() const { return objectives_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool contains(std::string_view id) const;
  const LearningObjective& objective(std::string_view id) const;  // throws Data error
  const Unit* find_unit(std::string_view unit_id) const;
  const Unit& unit(std::string_view unit_id) const;  // throws Data error
  // Position of the unit in curriculum order, or npos.
  std::size_t unit_index(std::string_view unit_id) const;

  // Direct prerequisites of id, sorted by id.
  const std::vector<ObjectiveId>& predecessors(std::string_view id) const;

 private:
  std::vector<Unit> units_;
  std::vector<LearningObjective> objectives_;
  std::vector<Edge> edges_;
  std::map<ObjectiveId, std::size_t, std::less<>> index_;
  std::map<ObjectiveId, std::vector<ObjectiveId>, std::less<>> preds_;
};

struct AttemptRecord {
  std::string student_id;
  std::string question_id;
  Timestamp timestamp;
  double duration = 0.0;  // seconds
  bool correct = false;
  ObjectiveSet objectives;
  Difficulty difficulty = Difficulty::Easy;
  Mode mode = Mode::Exercise;

  bool operator==(const AttemptRecord&) const = default;
};

struct QuestionInfo {
  ObjectiveSet objectives;
  Difficulty difficulty = Difficulty::Easy;
};

// Question bank reconstructed from attempt records. Inconsistent tags for the
// same question id are a data error.
class QuestionCatalog {
 public:
  static QuestionCatalog from_records(const std::vector<AttemptRecord>& records);

  void add(const std::string& question_id, const QuestionInfo& info);
  const std::map<std::string, QuestionInfo>& entries() const { return entries_; }
  // Questions tagged with the objective.
  std::vector<const QuestionInfo*> tagged(std::string_view objective) const;

 private:
  std::map<std::string, QuestionInfo> entries_;
};

// Canonical "A+B+C" key for an objective set.
std::string set_key(const ObjectiveSet& set);
ObjectiveSet parse_set_key(std::string_view key);

}  // namespace learnstory
