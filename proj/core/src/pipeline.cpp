#include "learnstory/pipeline.hpp"

#include <map>
#include <mutex>
#include <set>

#include "learnstory/error.hpp"

namespace learnstory {

AggregateSummary aggregate_to_cache(const ObjectiveGraph& graph, const std::vector<AttemptRecord>& records,
                                    const EngineConfig& config, const CacheStore& store,
                                    const std::optional<std::string>& student,
                                    const std::optional<std::string>& unit) {
  if (unit && !graph.find_unit(*unit)) fail(ErrorKind::Data, "unknown unit '" + *unit + "'");
  AggregateSummary out;
  out.input_hash = inputs_hash(graph, records, config.aggregation_fingerprint());
  const auto ctx =
      make_aggregation_context(graph, records, config.scheme_options(), out.input_hash, config.cohort_scope);

  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : records) {
    if (student && r.student_id != *student) continue;
    for (const auto& o : r.objectives) {
      const auto& u = graph.objective(o).unit_id;
      if (!unit || u == *unit) pairs.emplace(r.student_id, u);
    }
  }
  if (student && unit && pairs.empty()) pairs.emplace(*student, *unit);
  if (student && pairs.empty()) fail(ErrorKind::Data, "no records for student '" + *student + "'");
  constexpr std::size_t kBatch = 64;
  std::vector<CacheEntry> batch;
  auto flush = [&] {
    auto files = store.write(batch);
    out.files.insert(out.files.end(), files.begin(), files.end());
    batch.clear();
  };
  for (const auto& [s, u] : pairs) {
    batch.push_back(build_cache_entry(ctx, s, u));
    if (batch.size() == kBatch) flush();
  }
  if (!batch.empty()) flush();
  return out;
}

std::unique_ptr<NarrativeBackend> make_backend(const EngineConfig& config, Anonymizer anonymizer) {
  if (config.backend == BackendMode::Template) return std::make_unique<TemplateBackend>();
  if (config.llm_endpoint.empty()) fail(ErrorKind::Config, "backend 'llm' needs llm_endpoint");
  auto client = std::make_shared<HttpLlmClient>(
      LlmEndpoint{config.llm_endpoint, config.llm_api_key, config.llm_model, 30});
  return std::make_unique<LlmNarrativeBackend>(std::move(client), std::move(anonymizer), config.llm_max_in_flight);
}

const TemplateLibrary& templates_for(const EngineConfig& config) {
  if (!config.templates) return TemplateLibrary::builtin();
  // Loaded once per distinct path for the life of the process.
  static std::mutex mutex;
  static std::map<std::string, TemplateLibrary> loaded;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = config.templates->string();
  auto it = loaded.find(key);
  if (it == loaded.end()) it = loaded.emplace(key, TemplateLibrary::load(*config.templates)).first;
  return it->second;
}

ReportParts analyze(const CacheEntry& entry, const ObjectiveGraph& graph, const EngineConfig& config) {
  ReportParts parts;
  parts.diagnoses = diagnose(entry, graph, config.formative());
  parts.summative = mine_top_k(entry, graph, config.detector(), config.top_k);
  parts.feedback = generate_feedback(parts.diagnoses, config.pedagogy());
  return parts;
}

ReportDocument generate_report(const CacheEntry& entry, const ObjectiveGraph& graph,
                               const EngineConfig& config, const NarrativeBackend& backend,
                               const std::string& generated_at) {
  auto parts = analyze(entry, graph, config);
  for (auto& d : parts.diagnoses) {
    if (d.ancestors.size() > config.ancestor_cap) d.ancestors.resize(config.ancestor_cap);
  }
  const auto& templates = templates_for(config);
  PlanInputs in;
  in.entry = &entry;
  in.graph = &graph;
  in.diagnoses = &parts.diagnoses;
  in.insights = &parts.summative;
  in.feedback = &parts.feedback;
  in.templates = &templates;
  in.weak_unit = config.attention_mastery;
  const auto plans = plan_stages(in);

  ReportMetadata meta;
  meta.student = entry.student_id;
  meta.unit = entry.unit_id;
  meta.unit_title = graph.unit(entry.unit_id).title;
  meta.generated_at = generated_at;
  return render_report(plans, backend, std::move(meta), templates, parts.diagnoses);
}

}  // namespace learnstory
