#include "learnstory/cache.hpp"

#include <algorithm>
#include <set>

#include "learnstory/error.hpp"
#include "learnstory/graph.hpp"
#include "learnstory/hash.hpp"
#include "learnstory/io.hpp"

namespace learnstory {

namespace {

constexpr const char* kIndexSchema = "learnstory.cache-index/1";

std::string_view selector_kind_name(ObjectiveSelector::Kind k) {
  switch (k) {
    case ObjectiveSelector::Kind::Single: return "Single";
    case ObjectiveSelector::Kind::AllOf: return "AllOf";
    case ObjectiveSelector::Kind::AnyOf: return "AnyOf";
  }
  return "?";
}

ObjectiveSelector::Kind parse_selector_kind(std::string_view s) {
  if (s == "Single") return ObjectiveSelector::Kind::Single;
  if (s == "AllOf") return ObjectiveSelector::Kind::AllOf;
  if (s == "AnyOf") return ObjectiveSelector::Kind::AnyOf;
  fail(ErrorKind::Data, "unknown selector kind '" + std::string(s) + "'");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json cell_to_json(const std::optional<CohortCell>& c) {
  if (!c) return nullptr;
  return {{"mean_accuracy", c->mean_accuracy},
          {"mean_duration", c->mean_duration},
          {"mean_count", c->mean_count},
          {"cohort_size", c->cohort_size}};
}

std::optional<CohortCell> cell_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return CohortCell{j.at("mean_accuracy").get<double>(), j.at("mean_duration").get<double>(),
                    j.at("mean_count").get<double>(), j.at("cohort_size").get<std::size_t>()};
}

json cohort_to_json(const CohortSeries& c) {
  json intervals = json::array();
  for (const auto& cell : c.intervals) intervals.push_back(cell_to_json(cell));
  return {{"intervals", intervals}, {"overall", cell_to_json(c.overall)}};
}

CohortSeries cohort_from_json(const json& j) {
  CohortSeries c;
  for (const auto& cell : j.at("intervals")) c.intervals.push_back(cell_from_json(cell));
  c.overall = cell_from_json(j.at("overall"));
  return c;
}

json mode_series_to_json(const ModeSeries& s) {
  json out = json::object();
  for (auto m : kModeFilters) out[std::string(to_string(m))] = series_to_json(s[static_cast<std::size_t>(m)]);
  return out;
}

ModeSeries mode_series_from_json(const json& j) {
  ModeSeries s;
  for (auto m : kModeFilters) s[static_cast<std::size_t>(m)] = series_from_json(j.at(std::string(to_string(m))));
  return s;
}

json mode_cohort_to_json(const ModeCohort& c) {
  json out = json::object();
  for (auto m : kModeFilters) out[std::string(to_string(m))] = cohort_to_json(c[static_cast<std::size_t>(m)]);
  return out;
}

ModeCohort mode_cohort_from_json(const json& j) {
  ModeCohort c;
  for (auto m : kModeFilters) c[static_cast<std::size_t>(m)] = cohort_from_json(j.at(std::string(to_string(m))));
  return c;
}

std::string index_key(const std::string& student, const std::string& unit) {
  return student + "|" + unit;
}

ObjectiveSet unit_objective_set(const ObjectiveGraph& graph, const std::string& unit_id) {
  const auto& u = graph.unit(unit_id);
  return {u.objectives.begin(), u.objectives.end()};
}

}  // namespace

std::optional<DifficultyProfile> difficulty_profile(const QuestionCatalog& catalog,
                                                    const ObjectiveId& objective) {
  const auto questions = catalog.tagged(objective);
  if (questions.empty()) return std::nullopt;
  std::array<std::size_t, 3> counts{};
  for (const auto* q : questions) ++counts[static_cast<std::size_t>(q->difficulty)];
  DifficultyProfile p;
  p.question_count = questions.size();
  for (std::size_t i = 0; i < 3; ++i) {
    p.proportions[i] = static_cast<double>(counts[i]) / static_cast<double>(questions.size());
  }
  return p;
}

json series_to_json(const PerformanceSeries& s) {
  json points = json::array();
  for (const auto& p : s.points) {
    points.push_back({{"n", p.count},
                      {"correct", p.correct},
                      {"duration_sum", p.total_duration},
                      {"mean_duration", optional_number(p.mean_duration())},
                      {"accuracy", optional_number(p.accuracy())}});
  }
  return {{"student_id", s.subject.student_id},
          {"selector",
           {{"kind", std::string(selector_kind_name(s.subject.selector.kind))},
            {"objectives", std::vector<std::string>(s.subject.selector.objectives.begin(),
                                                    s.subject.selector.objectives.end())}}},
          {"mode", std::string(to_string(s.subject.mode))},
          {"points", points}};
}

PerformanceSeries series_from_json(const json& j) {
  PerformanceSeries s;
  s.subject.student_id = j.at("student_id").get<std::string>();
  s.subject.selector.kind = parse_selector_kind(j.at("selector").at("kind").get<std::string>());
  for (const auto& o : j.at("selector").at("objectives")) s.subject.selector.objectives.insert(o.get<std::string>());
  s.subject.mode = parse_mode_filter(j.at("mode").get<std::string>());
  for (const auto& p : j.at("points")) {
    s.points.push_back({p.at("n").get<std::size_t>(), p.at("correct").get<std::size_t>(),
                        p.at("duration_sum").get<double>()});
  }
  return s;
}

json scheme_to_json(const IntervalScheme& s) {
  return {{"origin", format_timestamp(s.origin)},
          {"width_seconds", s.width.count()},
          {"count", s.count}};
}

IntervalScheme scheme_from_json(const json& j) {
  IntervalScheme s;
  s.origin = parse_timestamp(j.at("origin").get<std::string>());
  s.width = std::chrono::seconds{j.at("width_seconds").get<std::int64_t>()};
  s.count = j.at("count").get<std::size_t>();
  return s;
}

json to_json(const CacheEntry& e) {
  json schemes = json::object();
  for (const auto& [id, s] : e.schemes) schemes[id] = scheme_to_json(s);

  json objectives = json::object();
  for (const auto& [id, m] : e.objectives) {
    json tallies = json::object();
    for (auto d : kDifficulties) {
      const auto& t = m.by_difficulty[static_cast<std::size_t>(d)];
      tallies[std::string(to_string(d))] = {{"attempts", t.attempts}, {"correct", t.correct}};
    }
    json profile = nullptr;
    if (m.profile) {
      profile = {{"easy", m.profile->proportions[0]},
                 {"medium", m.profile->proportions[1]},
                 {"hard", m.profile->proportions[2]},
                 {"question_count", m.profile->question_count}};
    }
    objectives[id] = {{"unit_id", m.unit_id},
                      {"series", mode_series_to_json(m.series)},
                      {"cohort", mode_cohort_to_json(m.cohort)},
                      {"by_difficulty", tallies},
                      {"profile", profile}};
  }

  json units = json::object();
  for (const auto& [id, u] : e.units) {
    units[id] = {{"series", mode_series_to_json(u.series)}, {"cohort", mode_cohort_to_json(u.cohort)}};
  }

  json associated = json::object();
  for (const auto& [id, sets] : e.associated) {
    json arr = json::array();
    for (const auto& a : sets) {
      arr.push_back({{"objectives", std::vector<std::string>(a.objectives.begin(), a.objectives.end())},
                     {"attempts", a.attempts},
                     {"series", mode_series_to_json(a.series)}});
    }
    associated[id] = arr;
  }

  return {{"schema", e.schema},
          {"student_id", e.student_id},
          {"unit_id", e.unit_id},
          {"input_hash", e.input_hash},
          {"cohort_students", e.cohort_students},
          {"schemes", schemes},
          {"objectives", objectives},
          {"units", units},
          {"associated", associated}};
}

CacheEntry cache_entry_from_json(const json& j) {
  try {
    CacheEntry e;
    e.schema = j.at("schema").get<std::string>();
    if (e.schema != kCacheSchema) fail(ErrorKind::Storage, "unsupported cache schema '" + e.schema + "'");
    e.student_id = j.at("student_id").get<std::string>();
    e.unit_id = j.at("unit_id").get<std::string>();
    e.input_hash = j.at("input_hash").get<std::string>();
    e.cohort_students = j.at("cohort_students").get<std::size_t>();
    for (const auto& [id, s] : j.at("schemes").items()) e.schemes.emplace(id, scheme_from_json(s));
    for (const auto& [id, m] : j.at("objectives").items()) {
      ObjectiveMetrics om;
      om.unit_id = m.at("unit_id").get<std::string>();
      om.series = mode_series_from_json(m.at("series"));
      om.cohort = mode_cohort_from_json(m.at("cohort"));
      for (auto d : kDifficulties) {
        const auto& t = m.at("by_difficulty").at(std::string(to_string(d)));
        om.by_difficulty[static_cast<std::size_t>(d)] = {t.at("attempts").get<std::size_t>(),
                                                         t.at("correct").get<std::size_t>()};
      }
      if (const auto& p = m.at("profile"); !p.is_null()) {
        om.profile = DifficultyProfile{{p.at("easy").get<double>(), p.at("medium").get<double>(),
                                        p.at("hard").get<double>()},
                                       p.at("question_count").get<std::size_t>()};
      }
      e.objectives.emplace(id, std::move(om));
    }
    for (const auto& [id, u] : j.at("units").items()) {
      e.units.emplace(id, UnitMetrics{mode_series_from_json(u.at("series")),
                                      mode_cohort_from_json(u.at("cohort"))});
    }
    for (const auto& [id, sets] : j.at("associated").items()) {
      auto& out = e.associated[id];
      for (const auto& a : sets) {
        AssociatedMetrics am;
        for (const auto& o : a.at("objectives")) am.objectives.insert(o.get<std::string>());
        am.attempts = a.at("attempts").get<std::size_t>();
        am.series = mode_series_from_json(a.at("series"));
        out.push_back(std::move(am));
      }
    }
    return e;
  } catch (const json::exception& ex) {
    fail(ErrorKind::Storage, std::string("malformed cache entry: ") + ex.what());
  }
}

const ObjectiveMetrics* CacheEntry::find_objective(std::string_view id) const {
  auto it = objectives.find(std::string(id));
  return it == objectives.end() ? nullptr : &it->second;
}

const ObjectiveMetrics& CacheEntry::objective(std::string_view id) const {
  if (const auto* m = find_objective(id)) return *m;
  fail(ErrorKind::Data, "objective '" + std::string(id) + "' is not in the cache entry");
}

const UnitMetrics& CacheEntry::unit(std::string_view id) const {
  auto it = units.find(std::string(id));
  if (it == units.end()) fail(ErrorKind::Data, "unit '" + std::string(id) + "' is not in the cache entry");
  return it->second;
}

const IntervalScheme& CacheEntry::scheme(std::string_view unit_id) const {
  auto it = schemes.find(std::string(unit_id));
  if (it == schemes.end()) fail(ErrorKind::Data, "no interval scheme for unit '" + std::string(unit_id) + "'");
  return it->second;
}

ObjectiveSet cache_scope(const ObjectiveGraph& graph, const std::string& unit_id) {
  const auto last = graph.unit_index(unit_id);
  if (last == static_cast<std::size_t>(-1)) fail(ErrorKind::Data, "unknown unit '" + unit_id + "'");
  ObjectiveSet scope;
  for (std::size_t i = 0; i <= last; ++i) {
    for (const auto& id : graph.units()[i].objectives) {
      scope.insert(id);
      for (auto& a : ancestors(graph, id)) scope.insert(std::move(a));
    }
  }
  return scope;
}

AggregationContext make_aggregation_context(const ObjectiveGraph& graph,
                                            const std::vector<AttemptRecord>& records,
                                            const SchemeOptions& options, std::string input_hash,
                                            std::string cohort_scope) {
  if (cohort_scope != "all" && cohort_scope != "unit") {
    fail(ErrorKind::Config, "cohort_scope must be 'all' or 'unit'");
  }
  AggregationContext ctx;
  ctx.graph = &graph;
  ctx.records = &records;
  ctx.schemes = derive_unit_schemes(records, graph, options);
  ctx.catalog = QuestionCatalog::from_records(records);
  ctx.input_hash = std::move(input_hash);
  ctx.cohort_scope = std::move(cohort_scope);
  for (const auto& r : records) ctx.by_student[r.student_id].push_back(r);
  if (ctx.cohort_scope == "all") {
    ctx.cohort = build_cohort_stats(records, ctx.schemes, graph);
  } else {
    for (const auto& unit : graph.units()) {
      const ObjectiveSet objs(unit.objectives.begin(), unit.objectives.end());
      std::set<std::string> active;
      for (const auto& r : records) {
        for (const auto& id : r.objectives) {
          if (objs.count(id)) {
            active.insert(r.student_id);
            break;
          }
        }
      }
      std::vector<AttemptRecord> scoped;
      for (const auto& r : records) {
        if (active.count(r.student_id)) scoped.push_back(r);
      }
      ctx.cohort_by_unit.emplace(unit.id, build_cohort_stats(scoped, ctx.schemes, graph));
    }
  }
  return ctx;
}

const CohortStats& AggregationContext::cohort_for(const std::string& unit_id) const {
  if (cohort_scope == "all") return cohort;
  auto it = cohort_by_unit.find(unit_id);
  if (it == cohort_by_unit.end()) fail(ErrorKind::Data, "unknown unit '" + unit_id + "'");
  return it->second;
}

namespace {

ModeSeries build_mode_series(const std::vector<AttemptRecord>& records, const IntervalScheme* scheme,
                             const std::string& student, const ObjectiveSelector& selector) {
  ModeSeries out;
  for (auto m : kModeFilters) {
    auto& s = out[static_cast<std::size_t>(m)];
    s.subject = {student, selector, m};
    if (scheme) s = build_series(records, *scheme, s.subject);
  }
  return out;
}

ModeCohort lookup_cohort(const CohortStats& stats, const std::string& key, const IntervalScheme* scheme) {
  ModeCohort out;
  for (auto m : kModeFilters) {
    auto& c = out[static_cast<std::size_t>(m)];
    if (const auto* found = stats.find(key, m)) {
      c = *found;
    } else if (scheme) {
      c.intervals.assign(scheme->count, std::nullopt);
    }
  }
  return out;
}

}  // namespace

CacheEntry build_cache_entry(const AggregationContext& ctx, const std::string& student_id,
                             const std::string& unit_id) {
  const auto& graph = *ctx.graph;
  static const std::vector<AttemptRecord> kNoRecords;
  auto sit = ctx.by_student.find(student_id);
  const auto& mine = sit == ctx.by_student.end() ? kNoRecords : sit->second;
  const auto& cohort = ctx.cohort_for(unit_id);

  CacheEntry e;
  e.student_id = student_id;
  e.unit_id = unit_id;
  e.input_hash = ctx.input_hash;
  e.cohort_students = cohort.students;

  auto scheme_of = [&](const std::string& unit) -> const IntervalScheme* {
    auto it = ctx.schemes.find(unit);
    return it == ctx.schemes.end() ? nullptr : &it->second;
  };

  const auto scope = cache_scope(graph, unit_id);
  std::set<std::string> scope_units;
  for (const auto& id : scope) {
    const auto& obj = graph.objective(id);
    scope_units.insert(obj.unit_id);
    const auto* scheme = scheme_of(obj.unit_id);
    ObjectiveMetrics m;
    m.unit_id = obj.unit_id;
    m.series = build_mode_series(mine, scheme, student_id, ObjectiveSelector::single(id));
    m.cohort = lookup_cohort(cohort, id, scheme);
    for (const auto& r : mine) {
      if (!r.objectives.count(id) || !scheme || !scheme->index_of(r.timestamp)) continue;
      auto& t = m.by_difficulty[static_cast<std::size_t>(r.difficulty)];
      ++t.attempts;
      t.correct += r.correct ? 1 : 0;
    }
    m.profile = difficulty_profile(ctx.catalog, id);
    e.objectives.emplace(id, std::move(m));
  }

  for (const auto& unit : scope_units) {
    if (const auto* scheme = scheme_of(unit)) e.schemes.emplace(unit, *scheme);
    const auto objs = unit_objective_set(graph, unit);
    e.units.emplace(unit, UnitMetrics{build_mode_series(mine, scheme_of(unit), student_id,
                                                        ObjectiveSelector::any_of(objs)),
                                      lookup_cohort(cohort, unit_key(unit), scheme_of(unit))});
  }

  // Associated sets for the focus objectives (this unit and every earlier one),
  // limited to the report unit plus the objective's own unit.
  const auto report_objs = unit_objective_set(graph, unit_id);
  const auto last = graph.unit_index(unit_id);
  for (std::size_t i = 0; i <= last; ++i) {
    for (const auto& id : graph.units()[i].objectives) {
      const auto& own_unit = graph.objective(id).unit_id;
      ObjectiveSet allowed = report_objs;
      const auto own = unit_objective_set(graph, own_unit);
      allowed.insert(own.begin(), own.end());
      std::vector<AssociatedMetrics> sets;
      for (const auto& a : associated_sets(mine, graph, id, &allowed)) {
        sets.push_back({a.objectives, a.attempts,
                        build_mode_series(mine, scheme_of(own_unit), student_id,
                                          ObjectiveSelector::all_of(a.objectives))});
      }
      if (!sets.empty()) e.associated.emplace(id, std::move(sets));
    }
  }
  return e;
}

std::string inputs_hash(const ObjectiveGraph& graph, const std::vector<AttemptRecord>& records,
                        const std::string& config_fingerprint) {
  std::string buf = graph_to_json(graph).dump();
  buf += '\n';
  for (const auto& r : records) {
    buf += record_to_json(r).dump();
    buf += '\n';
  }
  buf += config_fingerprint;
  return sha256_hex(buf);
}

std::string serialize_entry(const CacheEntry& entry) { return to_json(entry).dump(1) + "\n"; }

std::string CacheStore::write(const CacheEntry& entry) const { return write(std::vector<CacheEntry>{entry}).front(); }

std::vector<std::string> CacheStore::write(const std::vector<CacheEntry>& entries) const {
  json idx = index();
  std::set<std::string> replaced;
  std::vector<std::string> files;
  for (const auto& entry : entries) {
    const auto body = serialize_entry(entry);
    const auto file = sha256_hex(body).substr(0, 16) + ".json";
    write_file_atomic(dir_ / file, body);
    const auto key = index_key(entry.student_id, entry.unit_id);
    if (idx["entries"].contains(key)) replaced.insert(idx["entries"][key].value("file", ""));
    idx["entries"][key] = {{"file", file},
                           {"input_hash", entry.input_hash},
                           {"student_id", entry.student_id},
                           {"unit_id", entry.unit_id}};
    files.push_back(file);
  }
  write_file_atomic(dir_ / "index.json", idx.dump(1) + "\n");

  std::set<std::string> live;
  for (const auto& [_, v] : idx["entries"].items()) live.insert(v.value("file", ""));
  for (const auto& old : replaced) {
    std::error_code ec;
    if (!old.empty() && !live.count(old)) std::filesystem::remove(dir_ / old, ec);
  }
  return files;
}

json CacheStore::index() const {
  const auto path = dir_ / "index.json";
  if (!std::filesystem::exists(path)) {
    return {{"schema", kIndexSchema}, {"entries", json::object()}};
  }
  json idx;
  try {
    idx = json::parse(read_file(path));
  } catch (const std::exception& ex) {
    fail(ErrorKind::Storage, "unreadable cache index " + path.string() + ": " + ex.what());
  }
  if (idx.value("schema", "") != kIndexSchema) fail(ErrorKind::Storage, "unsupported cache index schema");
  return idx;
}

std::optional<CacheEntry> CacheStore::read(const std::string& student_id, const std::string& unit_id) const {
  const json idx = index();
  const auto key = index_key(student_id, unit_id);
  if (!idx.at("entries").contains(key)) return std::nullopt;
  const auto file = idx["entries"][key].at("file").get<std::string>();
  std::string text;
  try {
    text = read_file(dir_ / file);
  } catch (const Error&) {
    fail(ErrorKind::Storage, "cache entry file missing: " + (dir_ / file).string());
  }
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::Storage, "corrupt cache entry " + file);
  return cache_entry_from_json(j);
}

CacheEntry CacheStore::require(const std::string& student_id, const std::string& unit_id) const {
  auto e = read(student_id, unit_id);
  if (!e) {
    fail(ErrorKind::Runtime, "no cache entry for student '" + student_id + "' unit '" + unit_id +
                                 "' in " + dir_.string() + "; run aggregate first");
  }
  return std::move(*e);
}

bool CacheStore::is_stale(const std::string& student_id, const std::string& unit_id,
                          const std::string& current_input_hash) const {
  const json idx = index();
  const auto key = index_key(student_id, unit_id);
  if (!idx.at("entries").contains(key)) return true;
  return idx["entries"][key].value("input_hash", "") != current_input_hash;
}

}  // namespace learnstory
