#pragma once

// Formative diagnosis: reward scores from difficulty distributions, realized
// (difficulty-weighted) reward, error rate, learning velocity, and the
// current / ancestor / associated breakdown per unit objective.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "learnstory/cache.hpp"
#include "learnstory/insights.hpp"

namespace learnstory {

using nlohmann::json;

struct RewardConfig {
  double easy = 1.0;
  double medium = 2.0;
  double hard = 3.0;

  double weight(Difficulty d) const;
  // Positive and non-decreasing with difficulty.
  bool valid() const;
};

struct AttentionConfig {
  double mastery = 0.6;           // objective needs attention below this
  double ancestor_mastery = 0.6;  // prerequisite considered weak below this
};

double reward_score(const DifficultyProfile& profile, const RewardConfig& config);

// sum w(c_i) u_i / sum w(c_i); nullopt without attempts.
std::optional<double> actual_reward(const std::vector<AttemptRecord>& attempts,
                                    const RewardConfig& config);
std::optional<double> actual_reward(const std::array<DifficultyTally, 3>& tallies,
                                    const RewardConfig& config);

// OLS slope of accuracy over interval index, present points only.
std::optional<double> learning_velocity(const PerformanceSeries& series);

struct PeerDelta {
  std::optional<double> accuracy;       // student - peer mean
  std::optional<double> mean_duration;  // seconds
  std::optional<double> count;
  std::optional<double> peer_accuracy;
  std::size_t cohort_size = 0;
  bool operator==(const PeerDelta&) const = default;
};

struct AncestorFinding {
  ObjectiveId objective;
  std::size_t distance = 1;
  std::optional<double> mastery;
  std::size_t attempts = 0;
  std::vector<Insight> insights;
  bool operator==(const AncestorFinding&) const = default;
};

struct AssociatedFinding {
  ObjectiveSet objectives;
  std::size_t attempts = 0;
  std::optional<double> accuracy;
  std::optional<double> mean_duration;
  std::vector<Insight> insights;
  bool operator==(const AssociatedFinding&) const = default;
};

struct ObjectiveDiagnosis {
  ObjectiveId objective;
  std::string label;
  std::optional<double> reward_score;   // potential, from the question bank
  std::optional<double> actual_reward;  // realized
  std::optional<double> mastery;        // == actual_reward
  std::size_t attempts = 0;
  std::size_t error_count = 0;
  std::optional<double> error_rate;
  std::optional<double> accuracy;       // plain, all modes
  std::optional<double> exercise_accuracy;
  std::optional<double> test_accuracy;
  std::optional<double> mean_duration;
  std::optional<double> velocity;
  std::optional<DifficultyProfile> profile;
  std::vector<Insight> insights;
  std::vector<AncestorFinding> ancestors;    // nearest first, full closure
  std::vector<AssociatedFinding> associated;
  PeerDelta peer;
  bool needs_attention = false;
  std::vector<std::string> attention_reasons;

  bool operator==(const ObjectiveDiagnosis&) const = default;
};

json to_json(const ObjectiveDiagnosis& d);
ObjectiveDiagnosis diagnosis_from_json(const json& j);

struct FormativeConfig {
  RewardConfig weights;
  AttentionConfig attention;
  DetectorConfig detector;
};

// One diagnosis per unit objective, in unit order. Reads the cache entry only.
std::vector<ObjectiveDiagnosis> diagnose(const CacheEntry& entry, const ObjectiveGraph& graph,
                                         const FormativeConfig& config);

// Diagnosis for any objective carried by the entry (used by Q&A for prior units).
ObjectiveDiagnosis diagnose_objective(const CacheEntry& entry, const ObjectiveGraph& graph,
                                      const ObjectiveId& objective, const FormativeConfig& config);

}  // namespace learnstory
