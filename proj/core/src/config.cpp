#include "learnstory/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "learnstory/error.hpp"
#include "learnstory/io.hpp"

namespace learnstory {

namespace {

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || !std::isfinite(v)) {
    fail(ErrorKind::Config, "config key '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  const bool digits = !value.empty() && std::all_of(value.begin(), value.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
  try {
    if (digits) v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (!digits || used != value.size()) {
    fail(ErrorKind::Config, "config key '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  return v;
}

std::string env_name(const std::string& key) {
  std::string s = "LEARNSTORY_";
  for (char c : key) s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

void check_unit_interval(const char* key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    fail(ErrorKind::Config, std::string("config key '") + key + "' must lie in [0, 1]");
  }
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "interval_width_days", "origin",          "interval_count",    "weight_easy",
      "weight_medium",       "weight_hard",     "attention_mastery", "ancestor_mastery",
      "reinforce_mastery",   "demote_velocity", "insight_floor",     "top_k",
      "permutations",        "seed",            "ancestor_cap",      "backend",
      "llm_endpoint",        "llm_api_key",     "llm_model",         "llm_max_in_flight",
      "cache_dir",           "cohort_scope",    "templates"};
  return keys;
}

void EngineConfig::set(const std::string& key, const std::string& value) {
  if (key == "interval_width_days") {
    interval_width_days = to_double(key, value);
  } else if (key == "origin") {
    if (value.empty()) {
      origin.reset();
    } else {
      try {
        parse_timestamp(value);
      } catch (const Error&) {
        fail(ErrorKind::Config, "config key 'origin' expects an ISO-8601 UTC timestamp, got '" + value + "'");
      }
      origin = value;
    }
  } else if (key == "interval_count") {
    if (value.empty()) {
      interval_count.reset();
    } else {
      interval_count = to_unsigned(key, value);
    }
  } else if (key == "weight_easy") {
    weights.easy = to_double(key, value);
  } else if (key == "weight_medium") {
    weights.medium = to_double(key, value);
  } else if (key == "weight_hard") {
    weights.hard = to_double(key, value);
  } else if (key == "attention_mastery") {
    attention_mastery = to_double(key, value);
  } else if (key == "ancestor_mastery") {
    ancestor_mastery = to_double(key, value);
  } else if (key == "reinforce_mastery") {
    reinforce_mastery = to_double(key, value);
  } else if (key == "demote_velocity") {
    demote_velocity = to_double(key, value);
  } else if (key == "insight_floor") {
    insight_floor = to_double(key, value);
  } else if (key == "top_k") {
    top_k = to_unsigned(key, value);
  } else if (key == "permutations") {
    permutations = to_unsigned(key, value);
  } else if (key == "seed") {
    seed = to_unsigned(key, value);
  } else if (key == "ancestor_cap") {
    ancestor_cap = to_unsigned(key, value);
  } else if (key == "backend") {
    backend = parse_backend_mode(value);
  } else if (key == "llm_endpoint") {
    llm_endpoint = value;
  } else if (key == "llm_api_key") {
    llm_api_key = value;
  } else if (key == "llm_model") {
    llm_model = value;
  } else if (key == "llm_max_in_flight") {
    llm_max_in_flight = to_unsigned(key, value);
  } else if (key == "cache_dir") {
    if (value.empty()) fail(ErrorKind::Config, "config key 'cache_dir' must not be empty");
    cache_dir = value;
  } else if (key == "cohort_scope") {
    cohort_scope = value;
  } else if (key == "templates") {
    if (value.empty()) {
      templates.reset();
    } else {
      templates = value;
    }
  } else {
    fail(ErrorKind::Config, "unknown config key '" + key + "'");
  }
}

void EngineConfig::apply(const json& object) {
  if (!object.is_object()) fail(ErrorKind::Config, "config file must hold a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (value.is_string()) {
      set(key, value.get<std::string>());
    } else if (value.is_number() || value.is_boolean()) {
      set(key, value.dump());
    } else if (value.is_null()) {
      set(key, "");
    } else {
      fail(ErrorKind::Config, "config key '" + key + "' must be a string or number");
    }
  }
}

void EngineConfig::validate() const {
  if (!(interval_width_days > 0.0)) fail(ErrorKind::Config, "interval_width_days must be positive");
  if (interval_count && *interval_count == 0) fail(ErrorKind::Config, "interval_count must be at least 1");
  if (!weights.valid()) {
    fail(ErrorKind::Config, "reward weights must be positive with easy <= medium <= hard");
  }
  check_unit_interval("attention_mastery", attention_mastery);
  check_unit_interval("ancestor_mastery", ancestor_mastery);
  check_unit_interval("reinforce_mastery", reinforce_mastery);
  check_unit_interval("insight_floor", insight_floor);
  if (reinforce_mastery < attention_mastery) {
    fail(ErrorKind::Config, "reinforce_mastery must not be below attention_mastery");
  }
  if (!(demote_velocity >= -1.0 && demote_velocity <= 0.0)) {
    fail(ErrorKind::Config, "demote_velocity must lie in [-1, 0]");
  }
  if (top_k < 1) fail(ErrorKind::Config, "top_k must be at least 1");
  if (permutations < 1) fail(ErrorKind::Config, "permutations must be at least 1");
  if (llm_max_in_flight < 1) fail(ErrorKind::Config, "llm_max_in_flight must be at least 1");
  if (cohort_scope != "all" && cohort_scope != "unit") {
    fail(ErrorKind::Config, "cohort_scope must be 'all' or 'unit'");
  }
  if (backend == BackendMode::RemoteLLM && llm_endpoint.empty()) {
    fail(ErrorKind::Config, "backend 'llm' needs llm_endpoint");
  }
}

SchemeOptions EngineConfig::scheme_options() const {
  SchemeOptions o;
  o.width = std::chrono::seconds(std::llround(interval_width_days * 86400.0));
  if (origin) o.origin = parse_timestamp(*origin);
  o.count = interval_count;
  return o;
}

DetectorConfig EngineConfig::detector() const { return {insight_floor, permutations, seed}; }

FormativeConfig EngineConfig::formative() const {
  return {weights, {attention_mastery, ancestor_mastery}, detector()};
}

PedagogyConfig EngineConfig::pedagogy() const {
  return {reinforce_mastery, attention_mastery, ancestor_mastery, demote_velocity};
}

std::string EngineConfig::aggregation_fingerprint() const {
  const json j{{"interval_width_days", interval_width_days},
               {"origin", origin ? json(*origin) : json(nullptr)},
               {"interval_count", interval_count ? json(*interval_count) : json(nullptr)},
               {"cohort_scope", cohort_scope}};
  return j.dump();
}

json EngineConfig::to_json() const {
  return {{"interval_width_days", interval_width_days},
          {"origin", origin ? json(*origin) : json(nullptr)},
          {"interval_count", interval_count ? json(*interval_count) : json(nullptr)},
          {"weight_easy", weights.easy},
          {"weight_medium", weights.medium},
          {"weight_hard", weights.hard},
          {"attention_mastery", attention_mastery},
          {"ancestor_mastery", ancestor_mastery},
          {"reinforce_mastery", reinforce_mastery},
          {"demote_velocity", demote_velocity},
          {"insight_floor", insight_floor},
          {"top_k", top_k},
          {"permutations", permutations},
          {"seed", seed},
          {"ancestor_cap", ancestor_cap},
          {"backend", std::string(to_string(backend))},
          {"llm_endpoint", llm_endpoint},
          {"llm_api_key", llm_api_key.empty() ? "" : "***"},
          {"llm_model", llm_model},
          {"llm_max_in_flight", llm_max_in_flight},
          {"cache_dir", cache_dir.string()},
          {"cohort_scope", cohort_scope},
          {"templates", templates ? json(templates->string()) : json(nullptr)}};
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

EngineConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env,
                            const std::map<std::string, std::string>& flags) {
  EngineConfig cfg;
  if (file) {
    std::string text;
    try {
      text = read_file(*file);
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("cannot read config file: ") + e.what());
    }
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      fail(ErrorKind::Config, "config file " + file->string() + " is not valid JSON: " + e.what());
    }
    cfg.apply(doc);
  }
  if (env) {
    for (const auto& key : config_keys()) {
      if (auto v = env(env_name(key))) cfg.set(key, *v);
    }
  }
  for (const auto& [key, value] : flags) cfg.set(key, value);
  cfg.validate();
  return cfg;
}

}  // namespace learnstory
