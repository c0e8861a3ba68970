#pragma once

// Selection-grounded question answering over a generated report and its
// cache entry. The deterministic path is complete on its own; a language
// model, when configured, only rephrases from the same curated slices.

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "learnstory/cache.hpp"
#include "learnstory/chart.hpp"
#include "learnstory/formative.hpp"
#include "learnstory/llm.hpp"
#include "learnstory/pedagogy.hpp"
#include "learnstory/story.hpp"

namespace learnstory {

using nlohmann::json;

inline constexpr const char* kQaSchema = "learnstory.qa/1";

enum class Intent {
  WhyLowPerformance,
  CompareToPeers,
  ExplainSuggestion,
  ShowMetric,
  TrendOverTime,
  Unknown
};
std::string_view to_string(Intent i);

// Ordered keyword rules; the first matching rule wins.
Intent classify_intent(std::string_view question);

struct QARequest {
  std::string report_id;
  std::vector<std::string> selection;  // element ids, or "stage:S6" text spans
  std::string question;
};

QARequest qa_request_from_json(const json& j);
json to_json(const QARequest& r);

struct ResolvedSelection {
  ObjectiveSet objectives;
  std::set<std::string> units;
};

// Throws ResolutionError listing every unknown id.
class ResolutionError : public std::runtime_error {
 public:
  explicit ResolutionError(std::vector<std::string> bad_ids);
  const std::vector<std::string>& bad_ids() const { return bad_ids_; }

 private:
  std::vector<std::string> bad_ids_;
};

ResolvedSelection resolve_selection(const ReportDocument& report,
                                    const std::vector<std::string>& selection,
                                    const ObjectiveGraph& graph);

struct QAGrounding {
  ObjectiveSet objectives;
  json slices = json::object();
  Intent intent = Intent::Unknown;
};

struct QAResponse {
  std::string schema = kQaSchema;
  std::string answer;
  std::vector<ChartSpec> charts;
  QAGrounding grounding;
  BackendMode backend = BackendMode::Template;
  bool fell_back = false;
  std::string fallback_reason;
};

json to_json(const QAResponse& r);
QAResponse qa_response_from_json(const json& j);

struct QAContext {
  const ReportDocument* report = nullptr;
  const CacheEntry* entry = nullptr;
  const ObjectiveGraph* graph = nullptr;
  FormativeConfig formative;
  PedagogyConfig pedagogy;
  std::shared_ptr<const LlmClient> llm;  // null: deterministic only
  Anonymizer anonymizer;
};

QAResponse answer(const QARequest& request, const QAContext& ctx);

// Prompt the LLM path would send; exposed for auditing.
std::string build_qa_prompt(const QARequest& request, const QAGrounding& grounding,
                            const Anonymizer& anonymizer);

}  // namespace learnstory
