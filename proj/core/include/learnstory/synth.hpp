#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "learnstory/model.hpp"

namespace learnstory {

struct SynthOptions {
  std::uint64_t seed = 7;
  std::size_t cohort_size = 200;  // including the focal student
  std::string scenario = "steven";  // "steven" | "sparse" | "cohort"
};

struct SynthOutput {
  ObjectiveGraph graph;
  std::vector<AttemptRecord> records;  // canonical order
  std::string focal_student;           // empty for "cohort"
  std::string report_unit;
};

// Deterministic for a given options tuple.
SynthOutput synthesize(const SynthOptions& options);

// Generic cohort for load tests: `objectives` objectives in one report unit
// (plus one prior unit), activity spread across `intervals` weekly intervals.
SynthOutput synthesize_load(std::uint64_t seed, std::size_t students, std::size_t objectives,
                            std::size_t intervals);

}  // namespace learnstory
