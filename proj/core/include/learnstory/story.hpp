#pragma once

// Twelve-stage narrative report: stage plan (what data feeds which stage),
// chart construction, and narration through a pluggable backend.

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "learnstory/cache.hpp"
#include "learnstory/chart.hpp"
#include "learnstory/formative.hpp"
#include "learnstory/insights.hpp"
#include "learnstory/pedagogy.hpp"

namespace learnstory {

using nlohmann::json;

inline constexpr const char* kReportSchema = "learnstory.report/1";
inline constexpr const char* kEngineVersion = "0.3.0";

enum class Phase { Departure, Initiation, Unification, Return };
enum class InfoGroup { OverviewIntro, SummaryInfo, FormativeGuidance };
std::string_view to_string(Phase p);
std::string_view to_string(InfoGroup g);

inline constexpr std::size_t kStageCount = 12;

struct StageInfo {
  std::string_view id;     // "S1".."S12"
  std::string_view title;
  Phase phase;
  InfoGroup info_group;
};
// The fixed stage table, S1..S12.
const std::array<StageInfo, kStageCount>& stage_table();

// Wording lives in a data file (core/data/stage_templates.json); the compiled
// in copy is used unless another file is loaded.
class TemplateLibrary {
 public:
  static const TemplateLibrary& builtin();
  static TemplateLibrary from_json(const json& doc);
  static TemplateLibrary load(const std::filesystem::path& path);

  // Stage template by stage id and variant ("text", "transitional", "empty").
  const std::string& stage(std::string_view stage_id, std::string_view variant) const;
  bool has_stage_variant(std::string_view stage_id, std::string_view variant) const;
  const std::string& phrase(std::string_view key) const;
  const json& doc() const { return doc_; }

 private:
  json doc_;
};

// Replaces {name} with slots[name]; unknown slots are a Runtime error.
std::string fill_template(std::string_view text, const std::map<std::string, std::string>& slots);

struct StagePlan {
  std::size_t index = 0;  // 0..11
  StageInfo info;
  bool transitional = false;
  std::string variant = "text";  // template variant to use
  std::vector<Insight> insights;
  std::vector<FeedbackItem> feedback;
  std::vector<ChartSpec> charts;
  json facts = json::object();  // numbers bound to this stage, with display strings
  std::map<std::string, std::string> slots;
  ObjectiveSet objectives;  // what a text selection on this stage refers to
};

struct PlanInputs {
  const CacheEntry* entry = nullptr;
  const ObjectiveGraph* graph = nullptr;
  const std::vector<ObjectiveDiagnosis>* diagnoses = nullptr;
  const std::vector<Insight>* insights = nullptr;  // summative, ranked
  const std::vector<FeedbackItem>* feedback = nullptr;
  const TemplateLibrary* templates = nullptr;
  double weak_unit = 0.6;  // prior units below this accuracy are called out
};

// Binds data to the twelve stages. Stages without data become transitional
// and carry no charts. No insight is bound to more than one stage.
std::vector<StagePlan> plan_stages(const PlanInputs& inputs);

enum class BackendMode { Template, RemoteLLM };
std::string_view to_string(BackendMode m);
BackendMode parse_backend_mode(std::string_view s);

struct StageNarration {
  std::string text;
  bool fell_back = false;
  std::string reason;
};

class NarrativeBackend {
 public:
  virtual ~NarrativeBackend() = default;
  virtual BackendMode mode() const = 0;
  // draft is the filled template; backends may rewrite it.
  virtual StageNarration narrate(const StagePlan& plan, const std::string& draft) const = 0;
  virtual std::size_t max_in_flight() const { return 1; }
};

class TemplateBackend final : public NarrativeBackend {
 public:
  BackendMode mode() const override { return BackendMode::Template; }
  StageNarration narrate(const StagePlan&, const std::string& draft) const override {
    return {draft, false, {}};
  }
};

struct ReportStage {
  std::string id;
  std::string title;
  Phase phase = Phase::Departure;
  InfoGroup info_group = InfoGroup::OverviewIntro;
  bool transitional = false;
  std::string narrative;
  std::vector<Insight> insights;
  std::vector<FeedbackItem> feedback;
  std::vector<ChartSpec> charts;
  json facts = json::object();
  ObjectiveSet objectives;
  bool operator==(const ReportStage&) const = default;
};

struct StageFallback {
  std::string stage;
  std::string reason;
  bool operator==(const StageFallback&) const = default;
};

struct ReportMetadata {
  std::string student;
  std::string unit;
  std::string unit_title;
  std::string generated_at;
  std::string engine_version = kEngineVersion;
  BackendMode backend = BackendMode::Template;
  std::vector<StageFallback> fallbacks;
  bool operator==(const ReportMetadata&) const = default;
};

struct ReportDocument {
  std::string schema = kReportSchema;
  ReportMetadata metadata;
  std::vector<ReportStage> stages;
  std::vector<ObjectiveDiagnosis> diagnoses;

  // Registry union across every chart in the document.
  std::map<std::string, ElementTag> element_registry() const;
  const ReportStage* find_stage(std::string_view id) const;
  bool operator==(const ReportDocument&) const = default;
};

json to_json(const ReportDocument& doc);
ReportDocument report_from_json(const json& j);
// Stable serialization (sorted keys, two-space indent).
std::string serialize_report(const ReportDocument& doc);

ReportDocument render_report(const std::vector<StagePlan>& plans, const NarrativeBackend& backend,
                             ReportMetadata metadata, const TemplateLibrary& templates,
                             const std::vector<ObjectiveDiagnosis>& diagnoses);

// Structure problems: stage count/order, phase and info-group partitions,
// duplicate insight ids, malformed charts, registry ids unknown to the graph.
std::vector<std::string> check_report(const ReportDocument& doc, const ObjectiveGraph* graph);

// The numeric layer of a document: everything except narrative text.
json structured_layer(const ReportDocument& doc);

}  // namespace learnstory
