#include "learnstory/qa.hpp"

#include <algorithm>
#include <cctype>

#include "learnstory/error.hpp"
#include "learnstory/format.hpp"
#include "learnstory/graph.hpp"
#include "learnstory/numerals.hpp"

namespace learnstory {

std::string_view to_string(Intent i) {
  switch (i) {
    case Intent::WhyLowPerformance: return "WhyLowPerformance";
    case Intent::CompareToPeers: return "CompareToPeers";
    case Intent::ExplainSuggestion: return "ExplainSuggestion";
    case Intent::ShowMetric: return "ShowMetric";
    case Intent::TrendOverTime: return "TrendOverTime";
    case Intent::Unknown: return "Unknown";
  }
  return "?";
}

namespace {

Intent parse_intent(std::string_view s) {
  for (auto i : {Intent::WhyLowPerformance, Intent::CompareToPeers, Intent::ExplainSuggestion,
                 Intent::ShowMetric, Intent::TrendOverTime, Intent::Unknown}) {
    if (to_string(i) == s) return i;
  }
  return Intent::Unknown;
}

bool has_any(const std::string& text, std::initializer_list<std::string_view> words) {
  return std::any_of(words.begin(), words.end(),
                     [&](std::string_view w) { return text.find(w) != std::string::npos; });
}

}  // namespace

Intent classify_intent(std::string_view question) {
  std::string q(question);
  std::transform(q.begin(), q.end(), q.begin(), [](unsigned char c) { return std::tolower(c); });
  const bool why = has_any(q, {"why"});
  if (why && has_any(q, {"low", "wrong", "bad", "poor", "struggl", "weak", "fail"})) {
    return Intent::WhyLowPerformance;
  }
  if (why && has_any(q, {"suggest", "recommend", "advice", "advise"})) return Intent::ExplainSuggestion;
  if (has_any(q, {"compar", "others", "other students", "peer", "classmate", "cohort", "class average",
                  "the class", "everyone"})) {
    return Intent::CompareToPeers;
  }
  if (has_any(q, {"over time", "progress", "history", "trend", "improv", "each week", "weekly"})) {
    return Intent::TrendOverTime;
  }
  if (has_any(q, {"show", "how many", "average number", "how much", "average", "how long", "what is my",
                  "what's my"})) {
    return Intent::ShowMetric;
  }
  return Intent::Unknown;
}

QARequest qa_request_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Data, "Q&A request must be a JSON object");
  QARequest r;
  r.report_id = j.value("report_id", "");
  if (auto s = j.find("selection"); s != j.end()) {
    if (!s->is_array()) fail(ErrorKind::Data, "selection must be an array of element ids");
    for (const auto& id : *s) {
      if (!id.is_string()) fail(ErrorKind::Data, "selection ids must be strings");
      r.selection.push_back(id.get<std::string>());
    }
  }
  auto q = j.find("question");
  if (q == j.end() || !q->is_string()) fail(ErrorKind::Data, "question must be a string");
  r.question = q->get<std::string>();
  return r;
}

json to_json(const QARequest& r) {
  return {{"report_id", r.report_id}, {"selection", r.selection}, {"question", r.question}};
}

namespace {

std::string describe_bad(const std::vector<std::string>& bad) {
  std::string s = "unknown selection ids:";
  for (const auto& b : bad) s += " " + b;
  return bad.empty() ? "selection is empty" : s;
}

}  // namespace

ResolutionError::ResolutionError(std::vector<std::string> bad_ids)
    : std::runtime_error(describe_bad(bad_ids)), bad_ids_(std::move(bad_ids)) {}

ResolvedSelection resolve_selection(const ReportDocument& report, const std::vector<std::string>& selection,
                                    const ObjectiveGraph& graph) {
  if (selection.empty()) throw ResolutionError({});
  const auto registry = report.element_registry();
  ResolvedSelection out;
  std::vector<std::string> bad;
  for (const auto& id : selection) {
    if (id.rfind("stage:", 0) == 0) {
      const auto* stage = report.find_stage(std::string_view(id).substr(6));
      if (!stage) {
        bad.push_back(id);
        continue;
      }
      out.objectives.insert(stage->objectives.begin(), stage->objectives.end());
      continue;
    }
    auto it = registry.find(id);
    if (it == registry.end()) {
      bad.push_back(id);
      continue;
    }
    const auto& tag = it->second;
    if (tag.metric == "unit" && graph.find_unit(tag.unit_id)) {
      const auto& objs = graph.unit(tag.unit_id).objectives;
      out.objectives.insert(objs.begin(), objs.end());
    }
    out.objectives.insert(tag.objectives.begin(), tag.objectives.end());
  }
  if (!bad.empty()) throw ResolutionError(std::move(bad));
  for (const auto& o : out.objectives) {
    if (graph.contains(o)) out.units.insert(graph.objective(o).unit_id);
  }
  return out;
}

namespace {

constexpr std::size_t kAncestorCap = 3;
constexpr std::size_t idx(ModeFilter m) { return static_cast<std::size_t>(m); }

std::string pct(const std::optional<double>& v) { return v ? fmtx::percent(*v) : "not assessed"; }

// Cache-only view of one objective.
struct ObjectiveView {
  ObjectiveId id;
  std::string label;
  std::string unit_id;
  std::size_t attempts = 0;
  std::size_t correct = 0;
  std::optional<double> mastery, accuracy, exercise_accuracy, test_accuracy, mean_duration, velocity;
  std::optional<double> peer_accuracy, peer_mean_count;
  std::size_t cohort_size = 0;
  std::vector<std::pair<ObjectiveId, std::optional<double>>> ancestors;  // nearest first, capped
  std::vector<AssociatedMetrics> associated;
  std::vector<std::optional<double>> weekly;
};

ObjectiveView view_of(const QAContext& ctx, const ObjectiveId& id) {
  const auto& m = ctx.entry->objective(id);
  ObjectiveView v;
  v.id = id;
  v.label = ctx.graph->objective(id).label;
  v.unit_id = m.unit_id;
  const auto& all = m.series[idx(ModeFilter::All)];
  const auto t = all.total();
  v.attempts = t.count;
  v.correct = t.correct;
  v.accuracy = t.accuracy();
  v.mean_duration = t.mean_duration();
  v.exercise_accuracy = m.series[idx(ModeFilter::Exercise)].total().accuracy();
  v.test_accuracy = m.series[idx(ModeFilter::Test)].total().accuracy();
  v.mastery = actual_reward(m.by_difficulty, ctx.formative.weights);
  v.velocity = learning_velocity(all);
  if (const auto& peer = m.cohort[idx(ModeFilter::All)].overall) {
    v.peer_accuracy = peer->mean_accuracy;
    v.peer_mean_count = peer->mean_count;
    v.cohort_size = peer->cohort_size;
  }
  for (const auto& a : ancestors(*ctx.graph, id)) {
    if (v.ancestors.size() == kAncestorCap) break;
    const auto* am = ctx.entry->find_objective(a);
    v.ancestors.emplace_back(a, am ? actual_reward(am->by_difficulty, ctx.formative.weights) : std::nullopt);
  }
  if (auto it = ctx.entry->associated.find(id); it != ctx.entry->associated.end()) v.associated = it->second;
  for (const auto& p : all.points) v.weekly.push_back(p.accuracy());
  return v;
}

json slice_of(const ObjectiveView& v) {
  json anc = json::array();
  for (const auto& [a, m] : v.ancestors) anc.push_back({{"objective", a}, {"mastery", pct(m)}});
  json assoc = json::array();
  for (const auto& a : v.associated) {
    assoc.push_back({{"objectives", set_key(a.objectives)},
                     {"attempts", a.attempts},
                     {"accuracy", pct(a.series[idx(ModeFilter::All)].total().accuracy())}});
  }
  json weekly = json::array();
  for (std::size_t k = 0; k < v.weekly.size(); ++k) {
    weekly.push_back({{"week", fmtx::interval_label(k)}, {"accuracy", v.weekly[k] ? json(fmtx::percent(*v.weekly[k])) : json(nullptr)}});
  }
  return {{"objective", v.id},
          {"label", v.label},
          {"unit", v.unit_id},
          {"attempts", v.attempts},
          {"correct", v.correct},
          {"mastery", pct(v.mastery)},
          {"accuracy", pct(v.accuracy)},
          {"exercise_accuracy", pct(v.exercise_accuracy)},
          {"test_accuracy", pct(v.test_accuracy)},
          {"mean_duration", v.mean_duration ? fmtx::seconds(*v.mean_duration) : "none"},
          {"velocity", v.velocity ? fmtx::signed_number(*v.velocity * 100.0, 2) + " points per week" : "none"},
          {"peer_accuracy", pct(v.peer_accuracy)},
          {"peer_mean_attempts", v.peer_mean_count ? fmtx::number(*v.peer_mean_count, 2) : "none"},
          {"cohort_size", v.cohort_size},
          {"ancestors", anc},
          {"associated", assoc},
          {"weekly_accuracy", weekly}};
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

std::vector<std::string> ids_of(const std::vector<ObjectiveView>& views) {
  std::vector<std::string> ids;
  for (const auto& v : views) ids.push_back(v.id);
  return ids;
}

ChartSpec peer_bar(const std::vector<ObjectiveView>& views) {
  ChartBuilder chart("qa-peers", ChartKind::Bar, "You and the class");
  chart.axes({"objective", ""}, {"accuracy", "%"}).series("You");
  for (const auto& v : views) chart.point("you-" + v.id, v.id, v.accuracy, {{v.id}, v.unit_id, "accuracy"});
  chart.series("Class average");
  for (const auto& v : views) chart.point("class-" + v.id, v.id, v.peer_accuracy, {{v.id}, v.unit_id, "accuracy"});
  return std::move(chart).build();
}

enum class MetricKind { Attempts, Solved, Accuracy, Duration, Mastery };

MetricKind metric_for(const std::string& question) {
  std::string q = question;
  std::transform(q.begin(), q.end(), q.begin(), [](unsigned char c) { return std::tolower(c); });
  if (has_any(q, {"time", "duration", "how long", "seconds"})) return MetricKind::Duration;
  if (has_any(q, {"solved", "correct answers", "right answers"})) return MetricKind::Solved;
  if (has_any(q, {"accura", "score", "percent"})) return MetricKind::Accuracy;
  if (has_any(q, {"master"})) return MetricKind::Mastery;
  return MetricKind::Attempts;
}

struct Drafted {
  std::string text;
  std::vector<ChartSpec> charts;
  ObjectiveSet cited;
};

Drafted why_low(const std::vector<ObjectiveView>& views, double weak_ancestor, json& slices) {
  Drafted d;
  const ObjectiveView* weakest = nullptr;
  for (const auto& v : views) {
    const auto score = v.mastery ? v.mastery : v.accuracy;
    if (!score) continue;
    const auto best = weakest ? (weakest->mastery ? weakest->mastery : weakest->accuracy) : std::nullopt;
    if (!weakest || *score < *best) weakest = &v;
  }
  d.charts.push_back(peer_bar(views));
  for (const auto& v : views) d.cited.insert(v.id);
  if (!weakest) {
    d.text = "There is no recorded work on " + join(ids_of(views), ", ") + " yet, so nothing is low so far.";
    return d;
  }
  const auto& w = *weakest;
  slices["weakest"] = w.id;
  std::string text = "Your weakest objective here is " + w.id + ", at " + pct(w.mastery) + " mastery (" +
                     pct(w.accuracy) + " accuracy";
  if (w.peer_accuracy) text += " against a class average of " + pct(w.peer_accuracy);
  text += ").";
  for (const auto& [a, m] : w.ancestors) {
    if (m && *m < weak_ancestor) {
      text += " " + w.id + " builds on " + a + ", where your mastery is " + pct(m) + "; revisiting it will help.";
      d.cited.insert(a);
      break;
    }
  }
  if (!w.associated.empty()) {
    const auto& a = w.associated.front();
    text += " It often appears alongside " + join(std::vector<std::string>(a.objectives.begin(), a.objectives.end()), " and ") +
            ", with " + pct(a.series[idx(ModeFilter::All)].total().accuracy()) + " accuracy on those combined questions.";
    d.cited.insert(a.objectives.begin(), a.objectives.end());
  }
  d.text = text;
  return d;
}

Drafted compare(const std::vector<ObjectiveView>& views) {
  Drafted d;
  std::vector<std::string> parts;
  for (const auto& v : views) {
    d.cited.insert(v.id);
    if (!v.accuracy) {
      parts.push_back("You have no attempts on " + v.id + " yet.");
    } else if (!v.peer_accuracy) {
      parts.push_back("On " + v.id + " you scored " + pct(v.accuracy) + "; there is no class data to compare.");
    } else {
      const char* where = *v.accuracy > *v.peer_accuracy ? "above" : (*v.accuracy < *v.peer_accuracy ? "below" : "level with");
      parts.push_back("On " + v.id + " you scored " + pct(v.accuracy) + ", " + where + " the class average of " +
                      pct(v.peer_accuracy) + ".");
    }
  }
  d.text = join(parts, " ");
  d.charts.push_back(peer_bar(views));
  return d;
}

Drafted explain(const std::vector<ObjectiveView>& views, const ReportDocument& report, const QAContext& ctx,
                json& slices) {
  Drafted d;
  std::vector<std::string> parts;
  ChartBuilder chart("qa-gap", ChartKind::Bar, "Mastery and the next band");
  chart.axes({"objective", ""}, {"mastery", "%"}).series("You");
  const auto* s11 = report.find_stage("S11");
  json used = json::object();
  for (const auto& v : views) {
    d.cited.insert(v.id);
    const FeedbackItem* item = nullptr;
    if (s11) {
      for (const auto& f : s11->feedback) {
        if (f.objective == v.id) item = &f;
      }
    }
    chart.point("you-" + v.id, v.id, v.mastery, {{v.id}, v.unit_id, "mastery"});
    if (!item) {
      parts.push_back("The report has no suggestion for " + v.id + ".");
      continue;
    }
    used[v.id] = to_json(*item);
    std::string why;
    switch (item->category) {
      case FeedbackCategory::Reinforce:
        why = "your mastery of " + pct(v.mastery) + " is in the top band, so the suggestion is a stretch goal.";
        break;
      case FeedbackCategory::MedalAndMission:
        why = "your mastery of " + pct(v.mastery) + " is good but not yet in the top band, so there is one focused step.";
        if (v.velocity && *v.velocity < ctx.pedagogy.demote_velocity) {
          why += " Your accuracy has also been slipping (" + fmtx::signed_number(*v.velocity * 100.0, 2) +
                 " points per week).";
        }
        break;
      case FeedbackCategory::Remediate:
        why = "your mastery of " + pct(v.mastery) + " is below the bar.";
        if (!item->cause_text.empty()) why += " " + item->cause_text;
        if (item->cause) d.cited.insert(item->cause->objectives.begin(), item->cause->objectives.end());
        break;
      case FeedbackCategory::NotAssessed:
        why = "there is no data on it yet.";
        break;
    }
    parts.push_back("The suggestion for " + v.id + " (" + join(item->actions, " ") + ") is there because " + why);
  }
  slices["feedback"] = used;
  d.text = join(parts, " ");
  d.charts.push_back(std::move(chart).build());
  return d;
}

Drafted show_metric(const std::vector<ObjectiveView>& views, const std::string& question, json& slices) {
  Drafted d;
  const auto kind = metric_for(question);
  std::string name, unit;
  auto value = [&](const ObjectiveView& v) -> std::optional<double> {
    switch (kind) {
      case MetricKind::Attempts: return static_cast<double>(v.attempts);
      case MetricKind::Solved: return static_cast<double>(v.correct);
      case MetricKind::Accuracy: return v.accuracy;
      case MetricKind::Duration: return v.mean_duration;
      case MetricKind::Mastery: return v.mastery;
    }
    return std::nullopt;
  };
  auto show = [&](double x) {
    switch (kind) {
      case MetricKind::Attempts:
      case MetricKind::Solved: return fmtx::number(x, 2);
      case MetricKind::Duration: return fmtx::seconds(x);
      default: return fmtx::percent(x);
    }
  };
  switch (kind) {
    case MetricKind::Attempts: name = "questions attempted", unit = "questions"; break;
    case MetricKind::Solved: name = "questions solved", unit = "questions"; break;
    case MetricKind::Accuracy: name = "accuracy", unit = "%"; break;
    case MetricKind::Duration: name = "time per question", unit = "s"; break;
    case MetricKind::Mastery: name = "mastery", unit = "%"; break;
  }
  ChartBuilder chart("qa-metric", ChartKind::Bar, name + " per objective");
  chart.axes({"objective", ""}, {name, unit}).series("You");
  std::vector<std::string> parts;
  double sum = 0.0;
  std::size_t n = 0;
  json values = json::object();
  for (const auto& v : views) {
    d.cited.insert(v.id);
    const auto x = value(v);
    chart.point("you-" + v.id, v.id, x, {{v.id}, v.unit_id, name});
    if (!x) continue;
    sum += *x;
    ++n;
    values[v.id] = show(*x);
    parts.push_back(v.id + " " + show(*x));
  }
  slices["metric"] = {{"name", name}, {"values", values}};
  if (n == 0) {
    d.text = "There is no " + name + " recorded for " + join(ids_of(views), ", ") + " yet.";
  } else if (n == 1) {
    d.text = "Your " + name + ": " + parts.front() + ".";
  } else {
    const auto avg = show(sum / static_cast<double>(n));
    slices["metric"]["average"] = avg;
    slices["metric"]["objective_count"] = n;
    d.text = "Your " + name + " averages " + avg + " per objective: " + join(parts, ", ") + ".";
  }
  d.charts.push_back(std::move(chart).build());
  return d;
}

Drafted trend(const std::vector<ObjectiveView>& views) {
  Drafted d;
  std::vector<std::string> parts;
  std::map<std::string, std::vector<const ObjectiveView*>> by_unit;
  for (const auto& v : views) by_unit[v.unit_id].push_back(&v);
  for (const auto& [unit, vs] : by_unit) {
    ChartBuilder chart("qa-trend-" + unit, ChartKind::Line, "Weekly accuracy");
    chart.axes({"week", ""}, {"accuracy", "%"});
    for (const auto* v : vs) {
      chart.series(v->id);
      for (std::size_t k = 0; k < v->weekly.size(); ++k) {
        chart.point(v->id + "-" + std::to_string(k), fmtx::interval_label(k), v->weekly[k], {{v->id}, unit, "accuracy"});
      }
    }
    d.charts.push_back(std::move(chart).build());
  }
  for (const auto& v : views) {
    d.cited.insert(v.id);
    std::optional<std::size_t> first, last;
    for (std::size_t k = 0; k < v.weekly.size(); ++k) {
      if (!v.weekly[k]) continue;
      if (!first) first = k;
      last = k;
    }
    if (!first) {
      parts.push_back("There is no weekly data on " + v.id + " yet.");
    } else if (first == last) {
      parts.push_back("On " + v.id + " you have one week of data, " + fmtx::interval_label(*first) + " at " +
                      pct(v.weekly[*first]) + ".");
    } else {
      std::string s = "On " + v.id + " your accuracy went from " + pct(v.weekly[*first]) + " in " +
                      fmtx::interval_label(*first) + " to " + pct(v.weekly[*last]) + " in " + fmtx::interval_label(*last);
      if (v.velocity) s += ", a trend of " + fmtx::signed_number(*v.velocity * 100.0, 2) + " points per week";
      parts.push_back(s + ".");
    }
  }
  d.text = join(parts, " ");
  return d;
}

Drafted summary(const std::vector<ObjectiveView>& views) {
  Drafted d;
  std::vector<std::string> parts;
  ChartBuilder chart("qa-summary", ChartKind::Bar, "Mastery per objective");
  chart.axes({"objective", ""}, {"mastery", "%"}).series("You");
  for (const auto& v : views) {
    d.cited.insert(v.id);
    chart.point("you-" + v.id, v.id, v.mastery, {{v.id}, v.unit_id, "mastery"});
    if (!v.attempts) {
      parts.push_back(v.id + ": not assessed yet.");
    } else {
      parts.push_back(v.id + ": " + pct(v.mastery) + " mastery, " + pct(v.accuracy) + " accuracy over " +
                      std::to_string(v.attempts) + " questions.");
    }
  }
  d.text = "Here is what the report holds for your selection. " + join(parts, " ");
  d.charts.push_back(std::move(chart).build());
  return d;
}

}  // namespace

std::string build_qa_prompt(const QARequest& request, const QAGrounding& grounding, const Anonymizer& anonymizer) {
  std::string prompt = "template: qa/1\n";
  prompt += "Answer the learner's question about their learning report using only the data below. "
            "Reply with a JSON object {\"answer\": string}. Use only numbers that appear in the data.\n";
  prompt += "intent: " + std::string(to_string(grounding.intent)) + "\n";
  prompt += "question: " + request.question + "\n";
  prompt += "data: " + grounding.slices.dump() + "\n";
  return anonymizer.scrub(std::move(prompt));
}

QAResponse answer(const QARequest& request, const QAContext& ctx) {
  if (!ctx.report || !ctx.entry || !ctx.graph) fail(ErrorKind::Runtime, "Q&A needs a report, cache entry and graph");
  if (request.question.find_first_not_of(" \t\r\n") == std::string::npos) {
    fail(ErrorKind::Data, "question must be non-empty");
  }
  const auto resolved = resolve_selection(*ctx.report, request.selection, *ctx.graph);

  QAResponse r;
  r.grounding.intent = classify_intent(request.question);
  std::vector<ObjectiveView> views;
  json per = json::object();
  std::vector<std::string> outside;
  for (const auto& o : resolved.objectives) {
    if (!ctx.entry->find_objective(o)) {
      outside.push_back(o);
      continue;
    }
    views.push_back(view_of(ctx, o));
    per[o] = slice_of(views.back());
  }
  auto& slices = r.grounding.slices;
  slices["objectives"] = per;
  if (!outside.empty()) slices["not_in_report_scope"] = outside;
  json units = json::object();
  for (const auto& u : resolved.units) {
    auto it = ctx.entry->units.find(u);
    if (it == ctx.entry->units.end()) continue;
    const auto& unit = ctx.graph->unit(u);
    const auto& peer = it->second.cohort[idx(ModeFilter::All)].overall;
    units[u] = {{"title", unit.title},
                {"accuracy", pct(it->second.series[idx(ModeFilter::All)].total().accuracy())},
                {"peer_accuracy", peer ? pct(peer->mean_accuracy) : "none"}};
  }
  slices["units"] = units;

  Drafted d;
  if (views.empty()) {
    d.text = "The selection covers objectives that this report has no data for yet.";
  } else {
    switch (r.grounding.intent) {
      case Intent::WhyLowPerformance: d = why_low(views, ctx.formative.attention.ancestor_mastery, slices); break;
      case Intent::CompareToPeers: d = compare(views); break;
      case Intent::ExplainSuggestion: d = explain(views, *ctx.report, ctx, slices); break;
      case Intent::ShowMetric: d = show_metric(views, request.question, slices); break;
      case Intent::TrendOverTime: d = trend(views); break;
      case Intent::Unknown: d = summary(views); break;
    }
  }
  r.answer = std::move(d.text);
  r.charts = std::move(d.charts);
  r.grounding.objectives = d.cited;

  if (ctx.llm) {
    r.backend = BackendMode::RemoteLLM;
    try {
      const auto raw = ctx.llm->complete(build_qa_prompt(request, r.grounding, ctx.anonymizer));
      const auto body = json::parse(raw);
      const auto text = body.at("answer").get<std::string>();
      const auto allowed = collect_numerals(slices);
      const auto bad = unsupported_numerals(text, allowed);
      if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        r.fell_back = true;
        r.fallback_reason = "empty answer";
      } else if (!bad.empty()) {
        r.fell_back = true;
        r.fallback_reason = "answer introduced number " + bad.front();
      } else {
        r.answer = text;
      }
    } catch (const std::exception& e) {
      r.fell_back = true;
      r.fallback_reason = e.what();
    }
  }
  return r;
}

json to_json(const QAResponse& r) {
  json charts = json::array();
  for (const auto& c : r.charts) charts.push_back(to_json(c));
  return {{"schema", r.schema},
          {"answer", r.answer},
          {"charts", charts},
          {"grounding",
           {{"objectives", r.grounding.objectives},
            {"slices", r.grounding.slices},
            {"intent", std::string(to_string(r.grounding.intent))}}},
          {"backend", std::string(to_string(r.backend))},
          {"fell_back", r.fell_back},
          {"fallback_reason", r.fallback_reason}};
}

QAResponse qa_response_from_json(const json& j) {
  QAResponse r;
  r.schema = j.value("schema", kQaSchema);
  r.answer = j.at("answer").get<std::string>();
  for (const auto& c : j.at("charts")) r.charts.push_back(chart_from_json(c));
  const auto& g = j.at("grounding");
  r.grounding.objectives = g.at("objectives").get<ObjectiveSet>();
  r.grounding.slices = g.at("slices");
  r.grounding.intent = parse_intent(g.at("intent").get<std::string>());
  r.backend = parse_backend_mode(j.value("backend", "template"));
  r.fell_back = j.value("fell_back", false);
  r.fallback_reason = j.value("fallback_reason", "");
  return r;
}

}  // namespace learnstory
