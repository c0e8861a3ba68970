#pragma once

#include <optional>
#include <string>
#include <vector>

#include "learnstory/model.hpp"

namespace learnstory {

struct GraphViolation {
  enum class Kind { Cycle, DanglingEdge, DuplicateId, EmptyId, OrphanObjective, SelfEdge, UnknownUnit };
  Kind kind;
  std::vector<std::string> ids;  // objectives (or unit) involved, sorted
  std::string message;
};

std::string_view to_string(GraphViolation::Kind kind);

using ValidationReport = std::vector<GraphViolation>;

// Violations are returned as data; an empty report means the graph is usable.
ValidationReport validate_graph(const ObjectiveGraph& graph);

// Kahn elimination; nullopt when a cycle prevents consuming every node.
// Ties are broken by id.
std::optional<std::vector<ObjectiveId>> topological_order(const ObjectiveGraph& graph);

// Transitive prerequisites of obj, nearest first. Objectives at the same
// breadth-first distance are ordered by id. Excludes obj itself.
std::vector<ObjectiveId> ancestors(const ObjectiveGraph& graph, const ObjectiveId& obj);

// Multi-objective tag sets co-practised with obj that contain none of obj's
// ancestors, most attempted first (ties by set key). When allowed is given,
// every member of a set must lie in it.
struct AssociatedSet {
  ObjectiveSet objectives;
  std::size_t attempts = 0;
};
std::vector<AssociatedSet> associated_sets(const std::vector<AttemptRecord>& records,
                                           const ObjectiveGraph& graph, const ObjectiveId& obj,
                                           const ObjectiveSet* allowed = nullptr);

}  // namespace learnstory
