#include "learnstory/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "learnstory/error.hpp"

namespace learnstory {

std::string_view to_string(GraphViolation::Kind kind) {
  using K = GraphViolation::Kind;
  switch (kind) {
    case K::Cycle: return "cycle";
    case K::DanglingEdge: return "dangling-edge";
    case K::DuplicateId: return "duplicate-id";
    case K::EmptyId: return "empty-id";
    case K::OrphanObjective: return "orphan-objective";
    case K::SelfEdge: return "self-edge";
    case K::UnknownUnit: return "unknown-unit";
  }
  return "?";
}

namespace {

using Adjacency = std::map<ObjectiveId, std::vector<ObjectiveId>>;

// Tarjan's strongly connected components; only components that contain a
// cycle (size > 1) are returned, each sorted.
std::vector<std::vector<ObjectiveId>> cyclic_components(const std::set<ObjectiveId>& nodes,
                                                        const Adjacency& succ) {
  std::map<ObjectiveId, int> index, low;
  std::set<ObjectiveId> on_stack;
  std::vector<ObjectiveId> stack;
  std::vector<std::vector<ObjectiveId>> out;
  int counter = 0;

  std::function<void(const ObjectiveId&)> visit = [&](const ObjectiveId& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    if (auto it = succ.find(v); it != succ.end()) {
      for (const auto& w : it->second) {
        if (!nodes.count(w)) continue;
        if (!index.count(w)) {
          visit(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack.count(w)) {
          low[v] = std::min(low[v], index[w]);
        }
      }
    }
    if (low[v] == index[v]) {
      std::vector<ObjectiveId> comp;
      ObjectiveId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        comp.push_back(w);
      } while (w != v);
      if (comp.size() > 1) {
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  };
  for (const auto& v : nodes) {
    if (!index.count(v)) visit(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string join(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) {
    if (!s.empty()) s += ", ";
    s += id;
  }
  return s;
}

}  // namespace

ValidationReport validate_graph(const ObjectiveGraph& graph) {
  using K = GraphViolation::Kind;
  ValidationReport report;

  std::map<ObjectiveId, int> declared;
  for (const auto& o : graph.objectives()) {
    if (o.id.empty()) {
      report.push_back({K::EmptyId, {}, "objective with empty id"});
      continue;
    }
    if (++declared[o.id] == 2) {
      report.push_back({K::DuplicateId, {o.id}, "objective '" + o.id + "' declared more than once"});
    }
  }
  std::set<std::string> unit_ids;
  for (const auto& u : graph.units()) {
    if (!unit_ids.insert(u.id).second) {
      report.push_back({K::DuplicateId, {u.id}, "unit '" + u.id + "' declared more than once"});
    }
  }

  std::map<ObjectiveId, std::vector<std::string>> membership;
  for (const auto& u : graph.units()) {
    for (const auto& id : u.objectives) {
      membership[id].push_back(u.id);
      if (!declared.count(id)) {
        report.push_back({K::OrphanObjective, {id},
                          "unit '" + u.id + "' lists undeclared objective '" + id + "'"});
      }
    }
  }
  for (const auto& o : graph.objectives()) {
    if (o.id.empty()) continue;
    if (!unit_ids.count(o.unit_id)) {
      report.push_back({K::UnknownUnit, {o.id, o.unit_id},
                        "objective '" + o.id + "' refers to undeclared unit '" + o.unit_id + "'"});
    }
    const auto& units = membership[o.id];
    if (units.size() != 1 || units.front() != o.unit_id) {
      report.push_back({K::OrphanObjective, {o.id},
                        "objective '" + o.id + "' must appear in exactly one unit, its own"});
    }
  }

  Adjacency succ;
  for (const auto& e : graph.edges()) {
    if (e.from == e.to) {
      report.push_back({K::SelfEdge, {e.from}, "self-edge on '" + e.from + "'"});
      continue;
    }
    std::vector<std::string> missing;
    if (!declared.count(e.from)) missing.push_back(e.from);
    if (!declared.count(e.to)) missing.push_back(e.to);
    if (!missing.empty()) {
      std::sort(missing.begin(), missing.end());
      report.push_back({K::DanglingEdge, missing,
                        "edge " + e.from + " -> " + e.to + " references undeclared " + join(missing)});
      continue;
    }
    succ[e.from].push_back(e.to);
  }

  // Kahn elimination; whatever survives sits on or behind a cycle.
  std::map<ObjectiveId, int> indegree;
  for (const auto& [id, _] : declared) indegree[id] = 0;
  for (const auto& [from, tos] : succ) {
    for (const auto& to : tos) ++indegree[to];
  }
  std::vector<ObjectiveId> ready;
  for (const auto& [id, d] : indegree) {
    if (d == 0) ready.push_back(id);
  }
  std::set<ObjectiveId> remaining;
  for (const auto& [id, _] : declared) remaining.insert(id);
  while (!ready.empty()) {
    auto v = ready.back();
    ready.pop_back();
    remaining.erase(v);
    for (const auto& w : succ[v]) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  if (!remaining.empty()) {
    for (auto& comp : cyclic_components(remaining, succ)) {
      auto msg = "prerequisite cycle through " + join(comp);
      report.push_back({K::Cycle, std::move(comp), std::move(msg)});
    }
  }
  return report;
}

std::optional<std::vector<ObjectiveId>> topological_order(const ObjectiveGraph& graph) {
  std::map<ObjectiveId, int> indegree;
  std::map<ObjectiveId, std::vector<ObjectiveId>> succ;
  for (const auto& o : graph.objectives()) indegree.emplace(o.id, 0);
  for (const auto& e : graph.edges()) {
    if (!indegree.count(e.from) || !indegree.count(e.to)) continue;
    succ[e.from].push_back(e.to);
    ++indegree[e.to];
  }
  std::set<ObjectiveId> ready;
  for (const auto& [id, d] : indegree) {
    if (d == 0) ready.insert(id);
  }
  std::vector<ObjectiveId> order;
  while (!ready.empty()) {
    auto v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (const auto& w : succ[v]) {
      if (--indegree[w] == 0) ready.insert(w);
    }
  }
  if (order.size() != indegree.size()) return std::nullopt;
  return order;
}

std::vector<ObjectiveId> ancestors(const ObjectiveGraph& graph, const ObjectiveId& obj) {
  if (!graph.contains(obj)) fail(ErrorKind::Data, "unknown objective '" + obj + "'");
  std::vector<ObjectiveId> out;
  std::set<ObjectiveId> seen{obj};
  std::vector<ObjectiveId> frontier{obj};
  while (!frontier.empty()) {
    std::set<ObjectiveId> next;
    for (const auto& v : frontier) {
      for (const auto& p : graph.predecessors(v)) {
        if (!seen.count(p)) next.insert(p);
      }
    }
    frontier.assign(next.begin(), next.end());
    for (const auto& v : frontier) {
      seen.insert(v);
      out.push_back(v);
    }
  }
  return out;
}

std::vector<AssociatedSet> associated_sets(const std::vector<AttemptRecord>& records,
                                           const ObjectiveGraph& graph, const ObjectiveId& obj,
                                           const ObjectiveSet* allowed) {
  const auto anc = ancestors(graph, obj);
  const std::set<ObjectiveId> excluded(anc.begin(), anc.end());

  std::map<ObjectiveSet, std::size_t> counts;
  for (const auto& r : records) {
    if (r.objectives.size() < 2 || !r.objectives.count(obj)) continue;
    bool keep = true;
    for (const auto& id : r.objectives) {
      if (excluded.count(id) || (allowed && !allowed->count(id))) {
        keep = false;
        break;
      }
    }
    if (keep) ++counts[r.objectives];
  }
  std::vector<AssociatedSet> out;
  out.reserve(counts.size());
  for (auto& [set, n] : counts) out.push_back({set, n});
  std::sort(out.begin(), out.end(), [](const AssociatedSet& a, const AssociatedSet& b) {
    if (a.attempts != b.attempts) return a.attempts > b.attempts;
    return set_key(a.objectives) < set_key(b.objectives);
  });
  return out;
}

}  // namespace learnstory
