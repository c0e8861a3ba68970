#include "learnstory/model.hpp"

#include <algorithm>

#include "learnstory/error.hpp"

namespace learnstory {

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "Easy";
    case Difficulty::Medium: return "Medium";
    case Difficulty::Hard: return "Hard";
  }
  return "?";
}

std::string_view to_string(Mode m) { return m == Mode::Exercise ? "Exercise" : "Test"; }

std::string_view to_string(ModeFilter m) {
  switch (m) {
    case ModeFilter::Exercise: return "Exercise";
    case ModeFilter::Test: return "Test";
    case ModeFilter::All: return "All";
  }
  return "?";
}

Difficulty parse_difficulty(std::string_view s) {
  for (auto d : kDifficulties) {
    if (to_string(d) == s) return d;
  }
  fail(ErrorKind::Data, "unknown difficulty '" + std::string(s) + "'");
}

Mode parse_mode(std::string_view s) {
  if (s == "Exercise") return Mode::Exercise;
  if (s == "Test") return Mode::Test;
  fail(ErrorKind::Data, "unknown assessment mode '" + std::string(s) + "'");
}

ModeFilter parse_mode_filter(std::string_view s) {
  for (auto m : kModeFilters) {
    if (to_string(m) == s) return m;
  }
  fail(ErrorKind::Data, "unknown mode filter '" + std::string(s) + "'");
}

ObjectiveGraph::ObjectiveGraph(std::vector<Unit> units, std::vector<LearningObjective> objectives,
                               std::vector<Edge> edges)
    : units_(std::move(units)), objectives_(std::move(objectives)), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < objectives_.size(); ++i) {
    index_.emplace(objectives_[i].id, i);  // first declaration wins; duplicates are reported by validate_graph
  }
  for (const auto& e : edges_) preds_[e.to].push_back(e.from);
  for (auto& [_, p] : preds_) {
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
  }
}

bool ObjectiveGraph::contains(std::string_view id) const { return index_.find(id) != index_.end(); }

const LearningObjective& ObjectiveGraph::objective(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorKind::Data, "unknown objective '" + std::string(id) + "'");
  return objectives_[it->second];
}

const Unit* ObjectiveGraph::find_unit(std::string_view unit_id) const {
  for (const auto& u : units_) {
    if (u.id == unit_id) return &u;
  }
  return nullptr;
}

const Unit& ObjectiveGraph::unit(std::string_view unit_id) const {
  if (const Unit* u = find_unit(unit_id)) return *u;
  fail(ErrorKind::Data, "unknown unit '" + std::string(unit_id) + "'");
}

std::size_t ObjectiveGraph::unit_index(std::string_view unit_id) const {
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].id == unit_id) return i;
  }
  return static_cast<std::size_t>(-1);
}

const std::vector<ObjectiveId>& ObjectiveGraph::predecessors(std::string_view id) const {
  static const std::vector<ObjectiveId> kNone;
  auto it = preds_.find(id);
  return it == preds_.end() ? kNone : it->second;
}

QuestionCatalog QuestionCatalog::from_records(const std::vector<AttemptRecord>& records) {
  QuestionCatalog catalog;
  for (const auto& r : records) catalog.add(r.question_id, {r.objectives, r.difficulty});
  return catalog;
}

void QuestionCatalog::add(const std::string& question_id, const QuestionInfo& info) {
  auto [it, inserted] = entries_.emplace(question_id, info);
  if (!inserted &&
      (it->second.objectives != info.objectives || it->second.difficulty != info.difficulty)) {
    fail(ErrorKind::Data, "question '" + question_id + "' has inconsistent tags across records");
  }
}

std::vector<const QuestionInfo*> QuestionCatalog::tagged(std::string_view objective) const {
  std::vector<const QuestionInfo*> out;
  for (const auto& [_, info] : entries_) {
    if (info.objectives.count(std::string(objective))) out.push_back(&info);
  }
  return out;
}

std::string set_key(const ObjectiveSet& set) {
  std::string key;
  for (const auto& id : set) {
    if (!key.empty()) key += '+';
    key += id;
  }
  return key;
}

ObjectiveSet parse_set_key(std::string_view key) {
  ObjectiveSet out;
  std::size_t start = 0;
  while (start <= key.size()) {
    auto end = key.find('+', start);
    if (end == std::string_view::npos) end = key.size();
    if (end > start) out.emplace(key.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace learnstory
