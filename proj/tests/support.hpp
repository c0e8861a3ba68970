#pragma once

// Shared fixtures and small builders for the test executables.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "learnstory/cache.hpp"
#include "learnstory/config.hpp"
#include "learnstory/io.hpp"
#include "learnstory/model.hpp"
#include "learnstory/story.hpp"
#include "learnstory/synth.hpp"

namespace testing {

using namespace learnstory;

// Synthetic cohort plus its aggregation context. Held by pointer because the
// context refers into the data.
struct Fixture {
  SynthOutput data;
  EngineConfig config;
  std::unique_ptr<AggregationContext> ctx;

  CacheEntry entry(const std::string& student, const std::string& unit) const;
  ReportDocument report(const std::string& student, const std::string& unit) const;
};

std::unique_ptr<Fixture> make_fixture(SynthOutput data, EngineConfig config = {});

// Process-wide cached fixtures.
const Fixture& steven();
const Fixture& sparse();

inline constexpr const char* kSteven = "learner-0001";

Timestamp at(int day, int seconds = 0);  // 2024-01-01T00:00:00Z + offset

AttemptRecord rec(std::string student, std::string question, Timestamp t, double duration, bool correct,
                  ObjectiveSet objectives, Difficulty difficulty = Difficulty::Easy,
                  Mode mode = Mode::Exercise);

// One unit "U" holding the given objectives, plus edges.
ObjectiveGraph flat_graph(const std::vector<std::string>& objectives, std::vector<Edge> edges = {});

// Random DAG on n nodes named "O00".."O{n-1}": an edge i->j (i<j) with the
// given probability, then node order shuffled in ids so edges are not sorted.
ObjectiveGraph random_dag(std::mt19937_64& rng, std::size_t n, double edge_probability,
                          std::size_t units = 1);

// Small random cohort for oracle comparisons: a prior unit "P" (objective
// "P1") and a report unit "U" with `objectives` objectives, activity over
// `weeks` weeks. The focal student is "s0".
SynthOutput random_unit_cohort(std::mt19937_64& rng, std::size_t objectives, std::size_t weeks,
                               std::size_t students);

// n random records for `students` students ("s0".."s{k-1}") tagged with one
// or two of objs, spread over `days` days from at(0).
std::vector<AttemptRecord> random_records(std::mt19937_64& rng, std::size_t n, std::size_t students,
                                          const std::vector<std::string>& objs, int days);

// Random DAG over 1..3 units with activity by four students on every
// objective; "s0" touches each one. Report unit is the last unit.
SynthOutput dag_cohort(std::mt19937_64& rng, std::size_t n);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "learnstory-test");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Records and graph written to disk, aggregated into <dir>/cache through a
// counting RecordStore. The graph is also copied into the cache directory.
struct DiskFixture {
  TempDir dir;
  std::filesystem::path graph_file;
  std::filesystem::path cache_dir;
  std::unique_ptr<RecordStore> records;
  std::unique_ptr<CacheStore> cache;
  std::string input_hash;
};

std::unique_ptr<DiskFixture> make_disk_fixture(const SynthOutput& data, const EngineConfig& config = {},
                                               const std::optional<std::string>& student = std::nullopt);

}  // namespace testing
