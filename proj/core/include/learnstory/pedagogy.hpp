#pragma once

// Rule-based teacher stage: diagnosis -> categorized feedback items.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "learnstory/formative.hpp"

namespace learnstory {

using nlohmann::json;

enum class FeedbackCategory { Remediate, MedalAndMission, Reinforce, NotAssessed };
std::string_view to_string(FeedbackCategory c);

enum class Tone { Supportive };

enum class CauseKind { Ancestor, Associated };

struct FeedbackCause {
  CauseKind kind = CauseKind::Ancestor;
  ObjectiveSet objectives;  // one ancestor, or an associated set
  std::optional<double> mastery;  // ancestor mastery or set accuracy
  bool operator==(const FeedbackCause&) const = default;
};

struct FeedbackItem {
  std::string id;  // "fb:<objective>"
  ObjectiveId objective;
  FeedbackCategory category = FeedbackCategory::NotAssessed;
  std::optional<std::string> praise;
  std::optional<std::string> gap;
  std::optional<FeedbackCause> cause;
  std::string cause_text;   // phrasing of the cause, empty without one
  std::vector<std::string> actions;  // at least one
  Tone tone = Tone::Supportive;
  json provenance = json::object();  // diagnosis fields the rule read
  std::map<std::string, std::string> display;

  bool operator==(const FeedbackItem&) const = default;
};

json to_json(const FeedbackItem& item);
FeedbackItem feedback_from_json(const json& j);

struct PedagogyConfig {
  double reinforce = 0.85;   // mastery >= reinforce -> Reinforce
  double remediate = 0.6;    // mastery <  remediate -> Remediate
  double ancestor_mastery = 0.6;
  double demote_velocity = -0.05;  // Reinforce with steeper decline -> MedalAndMission
};

// Band rule alone (no demotion); half-open bands [0,0.6) [0.6,0.85) [0.85,1].
FeedbackCategory band(double mastery, const PedagogyConfig& config);
FeedbackCategory categorize(const ObjectiveDiagnosis& d, const PedagogyConfig& config);

// Ordered Remediate, MedalAndMission, Reinforce, NotAssessed; by id within a category.
std::vector<FeedbackItem> generate_feedback(const std::vector<ObjectiveDiagnosis>& diagnoses,
                                            const PedagogyConfig& config);

}  // namespace learnstory
