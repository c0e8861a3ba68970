#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "learnstory/aggregation.hpp"
#include "learnstory/formative.hpp"
#include "learnstory/pedagogy.hpp"
#include "learnstory/story.hpp"

namespace learnstory {

using nlohmann::json;

// Every tunable in one place. Layers apply in order defaults < config file <
// environment (LEARNSTORY_<KEY>) < command-line flags.
struct EngineConfig {
  double interval_width_days = 7.0;
  std::optional<std::string> origin;  // ISO-8601; default midnight of earliest record per unit
  std::optional<std::size_t> interval_count;

  RewardConfig weights;
  double attention_mastery = 0.6;
  double ancestor_mastery = 0.6;
  double reinforce_mastery = 0.85;
  double demote_velocity = -0.05;

  double insight_floor = 0.8;
  std::size_t top_k = 3;
  std::size_t permutations = 1000;
  std::uint64_t seed = 42;
  std::size_t ancestor_cap = 3;

  BackendMode backend = BackendMode::Template;
  std::string llm_endpoint;
  std::string llm_api_key;
  std::string llm_model;
  std::size_t llm_max_in_flight = 4;

  std::filesystem::path cache_dir = "cache";
  std::string cohort_scope = "all";  // "all" | "unit"
  std::optional<std::filesystem::path> templates;

  // Applies one key; throws a Config error for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void apply(const json& object);
  // Range checks: thresholds in [0,1], k >= 1, ordered weights, known scope.
  void validate() const;

  SchemeOptions scheme_options() const;
  DetectorConfig detector() const;
  FormativeConfig formative() const;
  PedagogyConfig pedagogy() const;
  // Keys that change cache contents, canonical JSON.
  std::string aggregation_fingerprint() const;
  json to_json() const;
};

// Recognized keys, in documentation order.
const std::vector<std::string>& config_keys();

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

EngineConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env,
                            const std::map<std::string, std::string>& flags);

}  // namespace learnstory
