#include "learnstory/formative.hpp"

#include <cmath>
#include <deque>
#include <map>

#include "learnstory/error.hpp"
#include "learnstory/graph.hpp"
#include "learnstory/stats.hpp"

namespace learnstory {

double RewardConfig::weight(Difficulty d) const {
  switch (d) {
    case Difficulty::Easy: return easy;
    case Difficulty::Medium: return medium;
    case Difficulty::Hard: return hard;
  }
  return 0.0;
}

bool RewardConfig::valid() const {
  return std::isfinite(easy) && std::isfinite(hard) && easy > 0.0 && easy <= medium && medium <= hard;
}

double reward_score(const DifficultyProfile& profile, const RewardConfig& config) {
  double s = 0.0;
  for (auto d : kDifficulties) s += config.weight(d) * profile.share(d);
  return s;
}

std::optional<double> actual_reward(const std::vector<AttemptRecord>& attempts,
                                    const RewardConfig& config) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& a : attempts) {
    const double w = config.weight(a.difficulty);
    den += w;
    if (a.correct) num += w;
  }
  if (attempts.empty() || den <= 0.0) return std::nullopt;
  return num / den;
}

std::optional<double> actual_reward(const std::array<DifficultyTally, 3>& tallies,
                                    const RewardConfig& config) {
  double num = 0.0;
  double den = 0.0;
  for (auto d : kDifficulties) {
    const auto& t = tallies[static_cast<std::size_t>(d)];
    num += config.weight(d) * static_cast<double>(t.correct);
    den += config.weight(d) * static_cast<double>(t.attempts);
  }
  if (den <= 0.0) return std::nullopt;
  return num / den;
}

std::optional<double> learning_velocity(const PerformanceSeries& series) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 0; k < series.points.size(); ++k) {
    if (auto a = series.points[k].accuracy()) {
      xs.push_back(static_cast<double>(k));
      ys.push_back(*a);
    }
  }
  if (xs.size() < 2) return std::nullopt;
  return stats::ols_slope(xs, ys);
}

namespace {

constexpr std::size_t kLevelInsights = 3;

const PerformanceSeries& all_modes(const ModeSeries& s) {
  return s[static_cast<std::size_t>(ModeFilter::All)];
}

// Breadth-first distance of every ancestor.
std::map<ObjectiveId, std::size_t> ancestor_distances(const ObjectiveGraph& graph,
                                                      const ObjectiveId& obj) {
  std::map<ObjectiveId, std::size_t> dist;
  std::deque<ObjectiveId> queue{obj};
  dist[obj] = 0;
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    for (const auto& p : graph.predecessors(cur)) {
      if (dist.emplace(p, dist[cur] + 1).second) queue.push_back(p);
    }
  }
  dist.erase(obj);
  return dist;
}

std::vector<Insight> scoped_insights(const CacheEntry& entry, const std::string& key,
                                     const ModeSeries& series, const std::string& unit_id,
                                     const DetectorConfig& config) {
  if (!entry.units.count(unit_id)) return {};
  return mine_scoped(entry, key, series, unit_id, config, kLevelInsights);
}

}  // namespace

ObjectiveDiagnosis diagnose_objective(const CacheEntry& entry, const ObjectiveGraph& graph,
                                      const ObjectiveId& objective, const FormativeConfig& config) {
  const auto& m = entry.objective(objective);
  ObjectiveDiagnosis d;
  d.objective = objective;
  d.label = graph.objective(objective).label;
  d.profile = m.profile;
  if (m.profile) d.reward_score = reward_score(*m.profile, config.weights);
  d.actual_reward = actual_reward(m.by_difficulty, config.weights);
  d.mastery = d.actual_reward;

  const auto total = all_modes(m.series).total();
  d.attempts = total.count;
  d.error_count = total.count - total.correct;
  if (total.count > 0) {
    d.error_rate = static_cast<double>(d.error_count) / static_cast<double>(total.count);
  }
  d.accuracy = total.accuracy();
  d.mean_duration = total.mean_duration();
  d.exercise_accuracy = m.series[static_cast<std::size_t>(ModeFilter::Exercise)].total().accuracy();
  d.test_accuracy = m.series[static_cast<std::size_t>(ModeFilter::Test)].total().accuracy();
  d.velocity = learning_velocity(all_modes(m.series));
  d.insights = scoped_insights(entry, objective, m.series, m.unit_id, config.detector);

  const auto& peer = m.cohort[static_cast<std::size_t>(ModeFilter::All)].overall;
  if (peer) {
    d.peer.cohort_size = peer->cohort_size;
    d.peer.peer_accuracy = peer->mean_accuracy;
    if (d.accuracy) d.peer.accuracy = *d.accuracy - peer->mean_accuracy;
    if (d.mean_duration) d.peer.mean_duration = *d.mean_duration - peer->mean_duration;
    d.peer.count = static_cast<double>(total.count) - peer->mean_count;
  }

  const auto dist = ancestor_distances(graph, objective);
  for (const auto& a : ancestors(graph, objective)) {
    AncestorFinding f;
    f.objective = a;
    f.distance = dist.at(a);
    if (const auto* am = entry.find_objective(a)) {
      f.mastery = actual_reward(am->by_difficulty, config.weights);
      f.attempts = all_modes(am->series).total().count;
      f.insights = scoped_insights(entry, a, am->series, am->unit_id, config.detector);
    }
    d.ancestors.push_back(std::move(f));
  }

  if (auto it = entry.associated.find(objective); it != entry.associated.end()) {
    for (const auto& s : it->second) {
      AssociatedFinding f;
      f.objectives = s.objectives;
      f.attempts = s.attempts;
      const auto t = all_modes(s.series).total();
      f.accuracy = t.accuracy();
      f.mean_duration = t.mean_duration();
      f.insights = scoped_insights(entry, set_key(s.objectives), s.series, m.unit_id, config.detector);
      d.associated.push_back(std::move(f));
    }
  }

  if (d.mastery && *d.mastery < config.attention.mastery) {
    d.attention_reasons.push_back("mastery below threshold");
  }
  if (d.velocity && *d.velocity < 0.0) d.attention_reasons.push_back("declining accuracy");
  for (const auto& a : d.ancestors) {
    if (a.mastery && *a.mastery < config.attention.ancestor_mastery) {
      d.attention_reasons.push_back("weak prerequisite " + a.objective);
    }
  }
  d.needs_attention = !d.attention_reasons.empty();
  return d;
}

std::vector<ObjectiveDiagnosis> diagnose(const CacheEntry& entry, const ObjectiveGraph& graph,
                                         const FormativeConfig& config) {
  if (!config.weights.valid()) fail(ErrorKind::Config, "reward weights must be positive and non-decreasing");
  std::vector<ObjectiveDiagnosis> out;
  for (const auto& id : graph.unit(entry.unit_id).objectives) {
    out.push_back(diagnose_objective(entry, graph, id, config));
  }
  return out;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

json insights_json(const std::vector<Insight>& v) {
  json arr = json::array();
  for (const auto& i : v) arr.push_back(to_json(i));
  return arr;
}

std::vector<Insight> insights_from(const json& j) {
  std::vector<Insight> out;
  for (const auto& i : j) out.push_back(insight_from_json(i));
  return out;
}

}  // namespace

json to_json(const ObjectiveDiagnosis& d) {
  json ancestors = json::array();
  for (const auto& a : d.ancestors) {
    ancestors.push_back({{"objective", a.objective},
                         {"distance", a.distance},
                         {"mastery", opt(a.mastery)},
                         {"attempts", a.attempts},
                         {"insights", insights_json(a.insights)}});
  }
  json associated = json::array();
  for (const auto& a : d.associated) {
    associated.push_back({{"objectives", a.objectives},
                          {"attempts", a.attempts},
                          {"accuracy", opt(a.accuracy)},
                          {"mean_duration", opt(a.mean_duration)},
                          {"insights", insights_json(a.insights)}});
  }
  json profile = nullptr;
  if (d.profile) {
    profile = {{"easy", d.profile->proportions[0]},
               {"medium", d.profile->proportions[1]},
               {"hard", d.profile->proportions[2]},
               {"question_count", d.profile->question_count}};
  }
  return {{"objective", d.objective},
          {"label", d.label},
          {"reward_score", opt(d.reward_score)},
          {"actual_reward", opt(d.actual_reward)},
          {"mastery", opt(d.mastery)},
          {"attempts", d.attempts},
          {"error_count", d.error_count},
          {"error_rate", opt(d.error_rate)},
          {"accuracy", opt(d.accuracy)},
          {"exercise_accuracy", opt(d.exercise_accuracy)},
          {"test_accuracy", opt(d.test_accuracy)},
          {"mean_duration", opt(d.mean_duration)},
          {"velocity", opt(d.velocity)},
          {"profile", profile},
          {"insights", insights_json(d.insights)},
          {"ancestors", ancestors},
          {"associated", associated},
          {"peer",
           {{"accuracy", opt(d.peer.accuracy)},
            {"mean_duration", opt(d.peer.mean_duration)},
            {"count", opt(d.peer.count)},
            {"peer_accuracy", opt(d.peer.peer_accuracy)},
            {"cohort_size", d.peer.cohort_size}}},
          {"needs_attention", d.needs_attention},
          {"attention_reasons", d.attention_reasons}};
}

ObjectiveDiagnosis diagnosis_from_json(const json& j) {
  ObjectiveDiagnosis d;
  d.objective = j.at("objective").get<std::string>();
  d.label = j.value("label", "");
  d.reward_score = opt_from(j, "reward_score");
  d.actual_reward = opt_from(j, "actual_reward");
  d.mastery = opt_from(j, "mastery");
  d.attempts = j.at("attempts").get<std::size_t>();
  d.error_count = j.at("error_count").get<std::size_t>();
  d.error_rate = opt_from(j, "error_rate");
  d.accuracy = opt_from(j, "accuracy");
  d.exercise_accuracy = opt_from(j, "exercise_accuracy");
  d.test_accuracy = opt_from(j, "test_accuracy");
  d.mean_duration = opt_from(j, "mean_duration");
  d.velocity = opt_from(j, "velocity");
  if (const auto& p = j.at("profile"); !p.is_null()) {
    DifficultyProfile prof;
    prof.proportions = {p.at("easy").get<double>(), p.at("medium").get<double>(),
                        p.at("hard").get<double>()};
    prof.question_count = p.at("question_count").get<std::size_t>();
    d.profile = prof;
  }
  d.insights = insights_from(j.at("insights"));
  for (const auto& a : j.at("ancestors")) {
    d.ancestors.push_back({a.at("objective").get<std::string>(), a.at("distance").get<std::size_t>(),
                           opt_from(a, "mastery"), a.at("attempts").get<std::size_t>(),
                           insights_from(a.at("insights"))});
  }
  for (const auto& a : j.at("associated")) {
    d.associated.push_back({a.at("objectives").get<ObjectiveSet>(), a.at("attempts").get<std::size_t>(),
                            opt_from(a, "accuracy"), opt_from(a, "mean_duration"),
                            insights_from(a.at("insights"))});
  }
  const auto& p = j.at("peer");
  d.peer = {opt_from(p, "accuracy"), opt_from(p, "mean_duration"), opt_from(p, "count"),
            opt_from(p, "peer_accuracy"), p.at("cohort_size").get<std::size_t>()};
  d.needs_attention = j.at("needs_attention").get<bool>();
  d.attention_reasons = j.at("attention_reasons").get<std::vector<std::string>>();
  return d;
}

}  // namespace learnstory
