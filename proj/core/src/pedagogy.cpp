#include "learnstory/pedagogy.hpp"

#include <algorithm>

#include "learnstory/error.hpp"
#include "learnstory/format.hpp"

namespace learnstory {

std::string_view to_string(FeedbackCategory c) {
  switch (c) {
    case FeedbackCategory::Remediate: return "Remediate";
    case FeedbackCategory::MedalAndMission: return "MedalAndMission";
    case FeedbackCategory::Reinforce: return "Reinforce";
    case FeedbackCategory::NotAssessed: return "NotAssessed";
  }
  return "?";
}

namespace {

FeedbackCategory parse_category(std::string_view s) {
  for (auto c : {FeedbackCategory::Remediate, FeedbackCategory::MedalAndMission,
                 FeedbackCategory::Reinforce, FeedbackCategory::NotAssessed}) {
    if (to_string(c) == s) return c;
  }
  fail(ErrorKind::Data, "unknown feedback category '" + std::string(s) + "'");
}

std::string name_of(const ObjectiveDiagnosis& d) {
  return d.label.empty() || d.label == d.objective ? d.objective : d.objective + " (" + d.label + ")";
}

// Weakest ancestor below the threshold, else weakest associated set below it.
std::optional<FeedbackCause> weakest_cause(const ObjectiveDiagnosis& d, const PedagogyConfig& config) {
  const AncestorFinding* anc = nullptr;
  for (const auto& a : d.ancestors) {
    if (!a.mastery || *a.mastery >= config.ancestor_mastery) continue;
    if (!anc || *a.mastery < *anc->mastery) anc = &a;
  }
  if (anc) return FeedbackCause{CauseKind::Ancestor, {anc->objective}, anc->mastery};
  const AssociatedFinding* assoc = nullptr;
  for (const auto& a : d.associated) {
    if (!a.accuracy || *a.accuracy >= config.remediate) continue;
    if (!assoc || *a.accuracy < *assoc->accuracy) assoc = &a;
  }
  if (assoc) return FeedbackCause{CauseKind::Associated, assoc->objectives, assoc->accuracy};
  return std::nullopt;
}

std::string join_ids(const ObjectiveSet& s) {
  std::string out;
  for (const auto& id : s) {
    if (!out.empty()) out += " and ";
    out += id;
  }
  return out;
}

std::string_view harder_tier(const ObjectiveDiagnosis& d) {
  if (!d.profile) return "Hard";
  return d.profile->share(Difficulty::Hard) > 0.0 ? "Hard" : "Medium";
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

FeedbackCategory band(double mastery, const PedagogyConfig& config) {
  if (mastery >= config.reinforce) return FeedbackCategory::Reinforce;
  if (mastery >= config.remediate) return FeedbackCategory::MedalAndMission;
  return FeedbackCategory::Remediate;
}

FeedbackCategory categorize(const ObjectiveDiagnosis& d, const PedagogyConfig& config) {
  if (!d.mastery) return FeedbackCategory::NotAssessed;
  auto c = band(*d.mastery, config);
  if (c == FeedbackCategory::Reinforce && d.velocity && *d.velocity < config.demote_velocity) {
    c = FeedbackCategory::MedalAndMission;
  }
  return c;
}

namespace {

FeedbackItem make_item(const ObjectiveDiagnosis& d, const PedagogyConfig& config) {
  FeedbackItem it;
  it.id = "fb:" + d.objective;
  it.objective = d.objective;
  it.category = categorize(d, config);
  it.provenance = {{"mastery", opt(d.mastery)},
                   {"velocity", opt(d.velocity)},
                   {"needs_attention", d.needs_attention}};
  const auto name = name_of(d);
  if (d.mastery) it.display["mastery"] = fmtx::percent(*d.mastery);

  switch (it.category) {
    case FeedbackCategory::Reinforce:
      it.praise = "Solid command of " + name + ".";
      it.actions.push_back("Stretch yourself with " + std::string(harder_tier(d)) +
                           " questions on " + d.objective + ".");
      break;
    case FeedbackCategory::MedalAndMission: {
      if (d.peer.accuracy && *d.peer.accuracy > 0.0) {
        it.praise = "You are ahead of the class average on " + name + ".";
      } else if (d.velocity && *d.velocity > 0.0) {
        it.praise = "Your accuracy on " + name + " keeps improving.";
      } else if (d.test_accuracy && d.exercise_accuracy && *d.test_accuracy >= *d.exercise_accuracy) {
        it.praise = "Your test results on " + name + " hold up well.";
      } else {
        it.praise = "Good, steady work on " + name + ".";
      }
      if (d.velocity && *d.velocity < config.demote_velocity) {
        it.gap = "Recent accuracy on " + d.objective + " has slipped.";
        it.actions.push_back("Do a short review set on " + d.objective + " to lock it back in.");
      } else {
        it.gap = "A few mistakes remain on " + d.objective + ".";
        it.actions.push_back("Review the questions you missed on " + d.objective + " and retry them.");
      }
      break;
    }
    case FeedbackCategory::Remediate: {
      it.gap = name + " needs more work.";
      if (auto cause = weakest_cause(d, config)) {
        const auto ids = join_ids(cause->objectives);
        if (cause->kind == CauseKind::Ancestor) {
          it.cause_text = d.objective + " builds on " + ids + ".";
          it.actions.push_back("Revisiting " + ids + " will help; start there.");
          if (cause->mastery) it.display["cause_mastery"] = fmtx::percent(*cause->mastery);
        } else {
          it.cause_text = d.objective + " often appears alongside " + ids + ".";
          it.actions.push_back("Practise questions that combine " + d.objective + " with " + ids + ".");
          if (cause->mastery) it.display["cause_accuracy"] = fmtx::percent(*cause->mastery);
        }
        it.provenance["cause"] = {{"kind", cause->kind == CauseKind::Ancestor ? "ancestor" : "associated"},
                                  {"objectives", cause->objectives},
                                  {"value", opt(cause->mastery)}};
        it.cause = std::move(cause);
      }
      it.actions.push_back("Work through Easy questions on " + d.objective + " before moving up.");
      break;
    }
    case FeedbackCategory::NotAssessed:
      it.gap = "No data yet for " + name + ".";
      it.actions.push_back("Start with a few Easy questions on " + d.objective + ".");
      break;
  }
  return it;
}

}  // namespace

std::vector<FeedbackItem> generate_feedback(const std::vector<ObjectiveDiagnosis>& diagnoses,
                                            const PedagogyConfig& config) {
  std::vector<FeedbackItem> out;
  out.reserve(diagnoses.size());
  for (const auto& d : diagnoses) out.push_back(make_item(d, config));
  std::stable_sort(out.begin(), out.end(), [](const FeedbackItem& a, const FeedbackItem& b) {
    if (a.category != b.category) return a.category < b.category;
    return a.objective < b.objective;
  });
  return out;
}

json to_json(const FeedbackItem& item) {
  json cause = nullptr;
  if (item.cause) {
    cause = {{"kind", item.cause->kind == CauseKind::Ancestor ? "ancestor" : "associated"},
             {"objectives", item.cause->objectives},
             {"mastery", opt(item.cause->mastery)}};
  }
  return {{"id", item.id},
          {"objective", item.objective},
          {"category", std::string(to_string(item.category))},
          {"praise", item.praise ? json(*item.praise) : json(nullptr)},
          {"gap", item.gap ? json(*item.gap) : json(nullptr)},
          {"cause", cause},
          {"cause_text", item.cause_text},
          {"actions", item.actions},
          {"tone", "Supportive"},
          {"provenance", item.provenance},
          {"display", item.display}};
}

FeedbackItem feedback_from_json(const json& j) {
  FeedbackItem it;
  it.id = j.at("id").get<std::string>();
  it.objective = j.at("objective").get<std::string>();
  it.category = parse_category(j.at("category").get<std::string>());
  if (!j.at("praise").is_null()) it.praise = j.at("praise").get<std::string>();
  if (!j.at("gap").is_null()) it.gap = j.at("gap").get<std::string>();
  if (const auto& c = j.at("cause"); !c.is_null()) {
    FeedbackCause cause;
    cause.kind = c.at("kind").get<std::string>() == "ancestor" ? CauseKind::Ancestor : CauseKind::Associated;
    cause.objectives = c.at("objectives").get<ObjectiveSet>();
    if (!c.at("mastery").is_null()) cause.mastery = c.at("mastery").get<double>();
    it.cause = cause;
  }
  it.cause_text = j.value("cause_text", "");
  it.actions = j.at("actions").get<std::vector<std::string>>();
  it.provenance = j.value("provenance", json::object());
  it.display = j.value("display", std::map<std::string, std::string>{});
  return it;
}

}  // namespace learnstory
