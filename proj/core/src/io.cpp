#include "learnstory/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "learnstory/error.hpp"
#include "learnstory/graph.hpp"

namespace learnstory {

namespace {

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

[[noreturn]] void bad_time(std::string_view text) {
  fail(ErrorKind::Data, "invalid ISO-8601 timestamp '" + std::string(text) + "'");
}

int digits(std::string_view text, std::size_t pos, std::size_t n, std::string_view whole) {
  if (pos + n > text.size()) bad_time(whole);
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + n, value);
  if (ec != std::errc() || ptr != text.data() + pos + n) bad_time(whole);
  return value;
}

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::strict); }

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  // YYYY-MM-DD[THH:MM[:SS[.fff]]][Z|+hh:mm|-hh:mm]
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') bad_time(text);
  const int year = digits(text, 0, 4, text);
  const int month = digits(text, 5, 2, text);
  const int day = digits(text, 8, 2, text);
  if (month < 1 || month > 12 || day < 1 || day > 31) bad_time(text);
  int hour = 0, minute = 0, second = 0;
  std::size_t pos = 10;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    hour = digits(text, pos + 1, 2, text);
    if (pos + 3 >= text.size() || text[pos + 3] != ':') bad_time(text);
    minute = digits(text, pos + 4, 2, text);
    pos += 6;
    if (pos < text.size() && text[pos] == ':') {
      second = digits(text, pos + 1, 2, text);
      pos += 3;
      if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
      }
    }
  }
  if (hour > 23 || minute > 59 || second > 60) bad_time(text);
  std::int64_t offset = 0;
  if (pos < text.size()) {
    if (text[pos] == 'Z' && pos + 1 == text.size()) {
      pos = text.size();
    } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size() &&
               text[pos + 3] == ':') {
      const int sign = text[pos] == '+' ? 1 : -1;
      offset = sign * (digits(text, pos + 1, 2, text) * 3600 + digits(text, pos + 4, 2, text) * 60);
    } else {
      bad_time(text);
    }
  }
  const auto days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  const std::int64_t secs = days * 86400 + hour * 3600 + minute * 60 + second - offset;
  return Timestamp{std::chrono::seconds{secs}};
}

std::string format_timestamp(Timestamp t) {
  const std::int64_t secs = t.time_since_epoch().count();
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(y),
                m, d, static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

Timestamp midnight_utc(Timestamp t) {
  std::int64_t secs = t.time_since_epoch().count();
  std::int64_t days = secs / 86400;
  if (secs % 86400 < 0) --days;
  return Timestamp{std::chrono::seconds{days * 86400}};
}

ObjectiveGraph graph_from_json(const json& doc) {
  try {
    std::vector<Unit> units;
    for (const auto& u : doc.at("units")) {
      units.push_back({u.at("id").get<std::string>(), u.value("title", u.at("id").get<std::string>()),
                       u.at("objectives").get<std::vector<std::string>>()});
    }
    std::vector<LearningObjective> objectives;
    for (const auto& o : doc.at("objectives")) {
      objectives.push_back({o.at("id").get<std::string>(), o.value("label", std::string{}),
                            o.at("unit_id").get<std::string>()});
    }
    std::vector<Edge> edges;
    for (const auto& e : doc.value("edges", json::array())) {
      if (!e.is_array() || e.size() != 2) fail(ErrorKind::Data, "edge must be a [from, to] pair");
      edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
    }
    return ObjectiveGraph(std::move(units), std::move(objectives), std::move(edges));
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed graph document: ") + e.what());
  }
}

json graph_to_json(const ObjectiveGraph& graph) {
  json units = json::array();
  for (const auto& u : graph.units()) {
    units.push_back({{"id", u.id}, {"title", u.title}, {"objectives", u.objectives}});
  }
  json objectives = json::array();
  for (const auto& o : graph.objectives()) {
    objectives.push_back({{"id", o.id}, {"label", o.label}, {"unit_id", o.unit_id}});
  }
  json edges = json::array();
  for (const auto& e : graph.edges()) edges.push_back(json::array({e.from, e.to}));
  return {{"units", units}, {"objectives", objectives}, {"edges", edges}};
}

ObjectiveGraph load_graph(const std::filesystem::path& path) {
  const auto text = read_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::Data, "graph file is not valid JSON: " + path.string());
  auto graph = graph_from_json(doc);
  const auto violations = validate_graph(graph);
  if (!violations.empty()) {
    std::string msg = "invalid graph " + path.string() + ":";
    for (const auto& v : violations) msg += "\n  " + std::string(to_string(v.kind)) + ": " + v.message;
    fail(ErrorKind::Data, msg);
  }
  return graph;
}

void save_graph(const ObjectiveGraph& graph, const std::filesystem::path& path) {
  write_file_atomic(path, graph_to_json(graph).dump(2) + "\n");
}

AttemptRecord record_from_json(const json& j) {
  try {
    AttemptRecord r;
    r.student_id = j.at("student_id").get<std::string>();
    r.question_id = j.at("question_id").get<std::string>();
    r.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
    r.duration = j.at("duration").get<double>();
    const auto& c = j.at("correct");
    r.correct = c.is_boolean() ? c.get<bool>() : c.get<int>() != 0;
    for (const auto& o : j.at("objectives")) r.objectives.insert(o.get<std::string>());
    r.difficulty = parse_difficulty(j.at("difficulty").get<std::string>());
    r.mode = parse_mode(j.at("mode").get<std::string>());
    if (r.student_id.empty()) fail(ErrorKind::Data, "empty student_id");
    if (r.objectives.empty()) fail(ErrorKind::Data, "record has no objectives");
    if (!(r.duration >= 0.0) || !std::isfinite(r.duration)) fail(ErrorKind::Data, "negative or non-finite duration");
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("malformed record: ") + e.what());
  }
}

json record_to_json(const AttemptRecord& r) {
  return {{"student_id", r.student_id},
          {"question_id", r.question_id},
          {"timestamp", format_timestamp(r.timestamp)},
          {"duration", r.duration},
          {"correct", r.correct},
          {"objectives", std::vector<std::string>(r.objectives.begin(), r.objectives.end())},
          {"difficulty", std::string(to_string(r.difficulty))},
          {"mode", std::string(to_string(r.mode))}};
}

std::vector<AttemptRecord> parse_records(std::istream& in, const ObjectiveGraph* graph) {
  std::vector<AttemptRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) fail(ErrorKind::Data, "not valid JSON");
      auto r = record_from_json(j);
      if (graph) {
        for (const auto& o : r.objectives) {
          if (!graph->contains(o)) fail(ErrorKind::Data, "objective '" + o + "' is not in the graph");
        }
      }
      out.push_back(std::move(r));
    } catch (const Error& e) {
      fail(e.kind(), "records line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_records(std::ostream& out, const std::vector<AttemptRecord>& records) {
  for (const auto& r : records) out << dump_line(record_to_json(r)) << '\n';
}

void sort_records(std::vector<AttemptRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const AttemptRecord& a, const AttemptRecord& b) {
    return std::tie(a.student_id, a.timestamp, a.question_id) <
           std::tie(b.student_id, b.timestamp, b.question_id);
  });
}

std::vector<AttemptRecord> RecordStore::load(const ObjectiveGraph* graph) const {
  ++reads_;
  std::ifstream in(path_);
  if (!in) fail(ErrorKind::Data, "cannot open records file " + path_.string());
  return parse_records(in, graph);
}

std::string RecordStore::raw_bytes() const {
  ++reads_;
  return read_file(path_);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Data, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorKind::Storage, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Storage, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) fail(ErrorKind::Storage, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::Storage, "cannot rename into " + path.string());
  }
}

}  // namespace learnstory
