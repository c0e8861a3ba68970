#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "learnstory/model.hpp"

namespace learnstory {

using nlohmann::json;

// ISO-8601 with second resolution: "2024-03-05T14:07:00Z", an optional
// fractional part (truncated) and an optional "+hh:mm" / "-hh:mm" offset.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);  // always UTC, "Z" suffix
Timestamp midnight_utc(Timestamp t);

ObjectiveGraph graph_from_json(const json& doc);
json graph_to_json(const ObjectiveGraph& graph);
// Rejects graphs with validation violations (Data error listing them).
ObjectiveGraph load_graph(const std::filesystem::path& path);
void save_graph(const ObjectiveGraph& graph, const std::filesystem::path& path);

AttemptRecord record_from_json(const json& j);
json record_to_json(const AttemptRecord& r);

// Records whose objectives are not graph nodes, or with negative duration,
// are rejected with the offending line number.
std::vector<AttemptRecord> parse_records(std::istream& in, const ObjectiveGraph* graph = nullptr);
void write_records(std::ostream& out, const std::vector<AttemptRecord>& records);

// Canonical order: student, timestamp, question id.
void sort_records(std::vector<AttemptRecord>& records);

// Raw record source. Every load is counted so callers can prove that
// request-time paths never scan raw records.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path path) : path_(std::move(path)) {}

  std::vector<AttemptRecord> load(const ObjectiveGraph* graph = nullptr) const;
  std::string raw_bytes() const;
  const std::filesystem::path& path() const { return path_; }
  std::size_t reads() const { return reads_.load(); }

 private:
  std::filesystem::path path_;
  mutable std::atomic<std::size_t> reads_{0};
};

std::string read_file(const std::filesystem::path& path);
// Write to a sibling temp file then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace learnstory
