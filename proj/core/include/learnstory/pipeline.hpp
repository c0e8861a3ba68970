#pragma once

// End-to-end steps shared by the command line and the HTTP service.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "learnstory/cache.hpp"
#include "learnstory/config.hpp"
#include "learnstory/llm.hpp"
#include "learnstory/story.hpp"

namespace learnstory {

struct AggregateSummary {
  std::string input_hash;
  std::vector<std::string> files;
};

// Writes one cache entry per (student, unit) pair where the student has a
// record in the unit. Filters restrict the pairs.
AggregateSummary aggregate_to_cache(const ObjectiveGraph& graph, const std::vector<AttemptRecord>& records,
                                    const EngineConfig& config, const CacheStore& store,
                                    const std::optional<std::string>& student = std::nullopt,
                                    const std::optional<std::string>& unit = std::nullopt);

std::unique_ptr<NarrativeBackend> make_backend(const EngineConfig& config, Anonymizer anonymizer);

const TemplateLibrary& templates_for(const EngineConfig& config);

struct ReportParts {
  std::vector<ObjectiveDiagnosis> diagnoses;  // full ancestor closure
  std::vector<Insight> summative;
  std::vector<FeedbackItem> feedback;
};

ReportParts analyze(const CacheEntry& entry, const ObjectiveGraph& graph, const EngineConfig& config);

// Diagnose, mine, generate feedback, plan and render. Reads only the entry.
ReportDocument generate_report(const CacheEntry& entry, const ObjectiveGraph& graph,
                               const EngineConfig& config, const NarrativeBackend& backend,
                               const std::string& generated_at);

}  // namespace learnstory
