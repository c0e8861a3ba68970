#pragma once

// Optional remote language-model adapter. Prompts carry anonymized tokens only
// and every number is injected from the structured layer; responses that drop
// or invent numbers are rejected by the caller.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "learnstory/story.hpp"

namespace learnstory {

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Throws on transport failure.
  virtual std::string complete(const std::string& prompt) const = 0;
};

struct LlmEndpoint {
  std::string url;      // http://host:port/path
  std::string api_key;  // sent as a bearer token when non-empty
  std::string model;
  int timeout_seconds = 30;
};

// POSTs {"model", "prompt"} as JSON. Accepts {"text": ...}, or
// {"choices": [{"text"}]} / {"choices": [{"message": {"content"}}]}.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(LlmEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string complete(const std::string& prompt) const override;

 private:
  LlmEndpoint endpoint_;
};

// Replaces raw identifiers with stable tokens ("Learner-1", ...).
class Anonymizer {
 public:
  Anonymizer() = default;
  explicit Anonymizer(const std::vector<std::string>& raw_ids);

  const std::string& token(const std::string& raw_id);
  std::string scrub(std::string text) const;

 private:
  std::map<std::string, std::string> tokens_;
};

class LlmNarrativeBackend final : public NarrativeBackend {
 public:
  LlmNarrativeBackend(std::shared_ptr<const LlmClient> client, Anonymizer anonymizer,
                      std::size_t max_in_flight = 4, std::string prompt_template_id = "stage/1");

  BackendMode mode() const override { return BackendMode::RemoteLLM; }
  StageNarration narrate(const StagePlan& plan, const std::string& draft) const override;
  std::size_t max_in_flight() const override { return max_in_flight_; }

  std::string build_prompt(const StagePlan& plan, const std::string& draft) const;

 private:
  std::shared_ptr<const LlmClient> client_;
  Anonymizer anonymizer_;
  std::size_t max_in_flight_;
  std::string prompt_template_id_;
};

// Client used by tests and offline demos: returns canned text and records prompts.
class RecordingLlmClient final : public LlmClient {
 public:
  using Responder = std::function<std::string(const std::string& prompt)>;
  explicit RecordingLlmClient(Responder responder) : responder_(std::move(responder)) {}

  std::string complete(const std::string& prompt) const override;
  std::vector<std::string> prompts() const;

 private:
  Responder responder_;
  mutable std::mutex mutex_;
  mutable std::vector<std::string> prompts_;
};

}  // namespace learnstory
