#include "learnstory/llm.hpp"

#include <httplib.h>

#include <algorithm>

#include "json.hpp"
#include "learnstory/error.hpp"
#include "learnstory/numerals.hpp"

namespace learnstory {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0) {
    fail(ErrorKind::Config, "language model endpoint must be an http:// URL, got '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string extract_text(const nlohmann::json& body) {
  if (auto t = body.find("text"); t != body.end() && t->is_string()) return t->get<std::string>();
  if (auto c = body.find("choices"); c != body.end() && c->is_array() && !c->empty()) {
    const auto& first = c->front();
    if (auto t = first.find("text"); t != first.end() && t->is_string()) return t->get<std::string>();
    if (auto m = first.find("message"); m != first.end()) {
      if (auto t = m->find("content"); t != m->end() && t->is_string()) return t->get<std::string>();
    }
  }
  fail(ErrorKind::Runtime, "language model response has no text field");
}

// "A", "B", ..., "Z", "AA", ... so tokens carry no digits.
std::string letters(std::size_t n) {
  std::string s;
  ++n;
  while (n > 0) {
    --n;
    s.insert(s.begin(), static_cast<char>('A' + n % 26));
    n /= 26;
  }
  return s;
}

}  // namespace

std::string HttpLlmClient::complete(const std::string& prompt) const {
  const auto url = parse_url(endpoint_.url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(endpoint_.timeout_seconds, 0);
  client.set_read_timeout(endpoint_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
  const nlohmann::json body{{"model", endpoint_.model}, {"prompt", prompt}};
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) fail(ErrorKind::Runtime, "language model request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    fail(ErrorKind::Runtime, "language model returned HTTP " + std::to_string(res->status));
  }
  try {
    return extract_text(nlohmann::json::parse(res->body));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Runtime, std::string("language model response is not JSON: ") + e.what());
  }
}

Anonymizer::Anonymizer(const std::vector<std::string>& raw_ids) {
  for (const auto& id : raw_ids) token(id);
}

const std::string& Anonymizer::token(const std::string& raw_id) {
  auto it = tokens_.find(raw_id);
  if (it != tokens_.end()) return it->second;
  return tokens_.emplace(raw_id, "Learner-" + letters(tokens_.size())).first->second;
}

std::string Anonymizer::scrub(std::string text) const {
  // Longest ids first so an id that contains another is replaced whole.
  std::vector<const std::pair<const std::string, std::string>*> order;
  for (const auto& kv : tokens_) order.push_back(&kv);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->first.size() > b->first.size(); });
  for (const auto* kv : order) {
    if (kv->first.empty()) continue;
    std::size_t pos = 0;
    while ((pos = text.find(kv->first, pos)) != std::string::npos) {
      text.replace(pos, kv->first.size(), kv->second);
      pos += kv->second.size();
    }
  }
  return text;
}

LlmNarrativeBackend::LlmNarrativeBackend(std::shared_ptr<const LlmClient> client, Anonymizer anonymizer,
                                         std::size_t max_in_flight, std::string prompt_template_id)
    : client_(std::move(client)),
      anonymizer_(std::move(anonymizer)),
      max_in_flight_(std::max<std::size_t>(1, max_in_flight)),
      prompt_template_id_(std::move(prompt_template_id)) {}

std::string LlmNarrativeBackend::build_prompt(const StagePlan& plan, const std::string& draft) const {
  std::string numbers;
  for (const auto& n : extract_numerals(draft)) {
    if (!numbers.empty()) numbers += ", ";
    numbers += n;
  }
  std::string prompt = "template: " + prompt_template_id_ + "\n";
  prompt += "stage: " + std::string(plan.info.title) + "\n";
  prompt += "Rewrite the draft as a short passage of a learning report addressed to the learner as "
            "\"you\", in a supportive tone. Copy every number exactly as written and add no other numbers.\n";
  prompt += "numbers: " + (numbers.empty() ? std::string("none") : numbers) + "\n";
  prompt += "draft:\n" + draft + "\n";
  return anonymizer_.scrub(std::move(prompt));
}

StageNarration LlmNarrativeBackend::narrate(const StagePlan& plan, const std::string& draft) const {
  std::string text;
  try {
    text = client_->complete(build_prompt(plan, draft));
  } catch (const std::exception& e) {
    return {draft, true, std::string("transport: ") + e.what()};
  }
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {draft, true, "empty response"};

  const auto required = extract_numerals(draft);
  const auto got = extract_numerals(text);
  for (const auto& n : required) {
    if (!got.count(n)) return {draft, true, "response dropped number " + n};
  }
  for (const auto& n : got) {
    if (!required.count(n)) return {draft, true, "response introduced number " + n};
  }
  return {std::move(text), false, {}};
}

std::string RecordingLlmClient::complete(const std::string& prompt) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    prompts_.push_back(prompt);
  }
  return responder_(prompt);
}

std::vector<std::string> RecordingLlmClient::prompts() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return prompts_;
}

}  // namespace learnstory
