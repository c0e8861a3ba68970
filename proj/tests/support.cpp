#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <fstream>
#include <random>

#include "learnstory/io.hpp"
#include "learnstory/pipeline.hpp"

namespace testing {

CacheEntry Fixture::entry(const std::string& student, const std::string& unit) const {
  return build_cache_entry(*ctx, student, unit);
}

ReportDocument Fixture::report(const std::string& student, const std::string& unit) const {
  const auto e = entry(student, unit);
  TemplateBackend backend;
  return generate_report(e, data.graph, config, backend, "2025-01-01T00:00:00Z");
}

std::unique_ptr<Fixture> make_fixture(SynthOutput data, EngineConfig config) {
  auto f = std::make_unique<Fixture>();
  f->data = std::move(data);
  f->config = std::move(config);
  const auto hash = inputs_hash(f->data.graph, f->data.records, f->config.aggregation_fingerprint());
  f->ctx = std::make_unique<AggregationContext>(make_aggregation_context(
      f->data.graph, f->data.records, f->config.scheme_options(), hash, f->config.cohort_scope));
  return f;
}

const Fixture& steven() {
  static const auto f = make_fixture(synthesize({7, 200, "steven"}));
  return *f;
}

const Fixture& sparse() {
  static const auto f = make_fixture(synthesize({7, 60, "sparse"}));
  return *f;
}

Timestamp at(int day, int seconds) {
  using namespace std::chrono;
  return sys_days{year{2024} / January / 1} + days{day} + std::chrono::seconds{seconds};
}

AttemptRecord rec(std::string student, std::string question, Timestamp t, double duration, bool correct,
                  ObjectiveSet objectives, Difficulty difficulty, Mode mode) {
  AttemptRecord r;
  r.student_id = std::move(student);
  r.question_id = std::move(question);
  r.timestamp = t;
  r.duration = duration;
  r.correct = correct;
  r.objectives = std::move(objectives);
  r.difficulty = difficulty;
  r.mode = mode;
  return r;
}

ObjectiveGraph flat_graph(const std::vector<std::string>& objectives, std::vector<Edge> edges) {
  std::vector<LearningObjective> objs;
  for (const auto& id : objectives) objs.push_back({id, "Objective " + id, "U"});
  return ObjectiveGraph({{"U", "Unit U", objectives}}, std::move(objs), std::move(edges));
}

ObjectiveGraph random_dag(std::mt19937_64& rng, std::size_t n, double edge_probability, std::size_t units) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back((i < 10 ? "O0" : "O") + std::to_string(i));
  // Topological position -> name, shuffled so ids carry no order information.
  std::vector<std::string> pos = names;
  std::shuffle(pos.begin(), pos.end(), rng);
  std::bernoulli_distribution coin(edge_probability);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.push_back({pos[i], pos[j]});
    }
  }
  units = std::max<std::size_t>(1, std::min(units, n));
  std::vector<Unit> us;
  for (std::size_t u = 0; u < units; ++u) us.push_back({"U" + std::to_string(u + 1), "Unit", {}});
  std::vector<LearningObjective> objs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = i * units / n;
    us[u].objectives.push_back(pos[i]);
    objs.push_back({pos[i], "Objective " + pos[i], us[u].id});
  }
  return ObjectiveGraph(std::move(us), std::move(objs), std::move(edges));
}

SynthOutput random_unit_cohort(std::mt19937_64& rng, std::size_t objectives, std::size_t weeks,
                               std::size_t students) {
  std::vector<std::string> ids;
  std::vector<LearningObjective> objs{{"P1", "Prior", "P"}};
  for (std::size_t i = 0; i < objectives; ++i) {
    ids.push_back("Q" + std::to_string(i + 1));
    objs.push_back({ids.back(), "Objective " + ids.back(), "U"});
  }
  std::vector<Edge> edges{{"P1", ids.front()}};
  if (objectives > 2 && rng() % 2) edges.push_back({ids[0], ids[2]});
  SynthOutput out;
  out.graph = ObjectiveGraph({{"P", "Unit P", {"P1"}}, {"U", "Unit U", ids}}, objs, edges);
  out.focal_student = "s0";
  out.report_unit = "U";

  const int span = static_cast<int>(weeks) * 7;
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  std::size_t q = 0;
  for (std::size_t s = 0; s < students; ++s) {
    const std::string sid = "s" + std::to_string(s);
    // Per-student style: a trend in accuracy and a base pace.
    const double skill = unit01(rng), drift = unit01(rng) - 0.5, pace = 30 + 200 * unit01(rng);
    const std::size_t n = (s == 0 ? 15 : 3) + rng() % 25;
    for (std::size_t i = 0; i < n; ++i) {
      const int day = static_cast<int>(rng() % static_cast<std::uint64_t>(span));
      ObjectiveSet tags{ids[rng() % ids.size()]};
      if (objectives > 1 && rng() % 5 == 0) tags.insert(ids[rng() % ids.size()]);
      const double p = std::clamp(skill + drift * day / span, 0.05, 0.95);
      const auto diff = kDifficulties[rng() % 3];
      // Durations on a coarse grid so some series repeat exactly.
      const double dur = (rng() % 3 == 0) ? 60.0 : std::round(pace * (0.5 + unit01(rng)));
      out.records.push_back(rec(sid, "q" + std::to_string(q++), at(day, static_cast<int>(rng() % 86400)), dur,
                                unit01(rng) < p, tags, diff, rng() % 4 == 0 ? Mode::Test : Mode::Exercise));
    }
    if (rng() % 2) out.records.push_back(rec(sid, "qp" + std::to_string(s), at(0, 3600), 40, true, {"P1"}));
  }
  sort_records(out.records);
  return out;
}

std::vector<AttemptRecord> random_records(std::mt19937_64& rng, std::size_t n, std::size_t students,
                                          const std::vector<std::string>& objs, int days) {
  std::vector<AttemptRecord> rs;
  std::uniform_real_distribution<double> dur(0.0, 300.0);
  for (std::size_t i = 0; i < n; ++i) {
    ObjectiveSet tags{objs[rng() % objs.size()]};
    if (rng() % 4 == 0) tags.insert(objs[rng() % objs.size()]);
    rs.push_back(rec("s" + std::to_string(rng() % students), "q" + std::to_string(i),
                     at(static_cast<int>(rng() % days), static_cast<int>(rng() % 86400)),
                     std::round(dur(rng) * 4) / 4, rng() % 3 != 0, tags,
                     kDifficulties[rng() % 3], rng() % 4 == 0 ? Mode::Test : Mode::Exercise));
  }
  return rs;
}

SynthOutput dag_cohort(std::mt19937_64& rng, std::size_t n) {
  SynthOutput out;
  out.graph = random_dag(rng, n, 0.3, 1 + rng() % 3);
  out.focal_student = "s0";
  out.report_unit = out.graph.units().back().id;
  std::vector<ObjectiveId> ids;
  for (const auto& o : out.graph.objectives()) ids.push_back(o.id);
  std::size_t q = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    for (const auto& id : ids) {
      const auto reps = (s == 0 ? 1 : 0) + rng() % 4;
      for (std::size_t r = 0; r < reps; ++r) {
        ObjectiveSet tags{id};
        if (rng() % 3 == 0) tags.insert(ids[rng() % ids.size()]);
        out.records.push_back(rec("s" + std::to_string(s), "q" + std::to_string(q++),
                                  at(static_cast<int>(rng() % 28)), 10.0 + rng() % 100, rng() % 2 == 0, tags,
                                  kDifficulties[rng() % 3], rng() % 3 ? Mode::Exercise : Mode::Test));
      }
    }
  }
  sort_records(out.records);
  return out;
}

TempDir::TempDir(const std::string& prefix) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    auto p = base / (prefix + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    if (std::filesystem::create_directory(p)) {
      path_ = std::move(p);
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::unique_ptr<DiskFixture> make_disk_fixture(const SynthOutput& data, const EngineConfig& config,
                                               const std::optional<std::string>& student) {
  auto f = std::make_unique<DiskFixture>();
  const auto& root = f->dir.path();
  f->graph_file = root / "graph.json";
  f->cache_dir = root / "cache";
  save_graph(data.graph, f->graph_file);
  {
    std::ofstream out(root / "records.ndjson");
    write_records(out, data.records);
  }
  f->records = std::make_unique<RecordStore>(root / "records.ndjson");
  f->cache = std::make_unique<CacheStore>(f->cache_dir);
  const auto graph = load_graph(f->graph_file);
  const auto records = f->records->load(&graph);
  f->input_hash = aggregate_to_cache(graph, records, config, *f->cache, student).input_hash;
  std::filesystem::copy_file(f->graph_file, f->cache_dir / "graph.json",
                             std::filesystem::copy_options::overwrite_existing);
  return f;
}

}  // namespace testing
