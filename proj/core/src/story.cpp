#include "learnstory/story.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include "learnstory/error.hpp"
#include "learnstory/format.hpp"

namespace learnstory {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Departure: return "Departure";
    case Phase::Initiation: return "Initiation";
    case Phase::Unification: return "Unification";
    case Phase::Return: return "Return";
  }
  return "?";
}

std::string_view to_string(InfoGroup g) {
  switch (g) {
    case InfoGroup::OverviewIntro: return "OverviewIntro";
    case InfoGroup::SummaryInfo: return "SummaryInfo";
    case InfoGroup::FormativeGuidance: return "FormativeGuidance";
  }
  return "?";
}

namespace {

Phase parse_phase(std::string_view s) {
  for (auto p : {Phase::Departure, Phase::Initiation, Phase::Unification, Phase::Return}) {
    if (to_string(p) == s) return p;
  }
  fail(ErrorKind::Data, "unknown phase '" + std::string(s) + "'");
}

InfoGroup parse_info_group(std::string_view s) {
  for (auto g : {InfoGroup::OverviewIntro, InfoGroup::SummaryInfo, InfoGroup::FormativeGuidance}) {
    if (to_string(g) == s) return g;
  }
  fail(ErrorKind::Data, "unknown info group '" + std::string(s) + "'");
}

}  // namespace

const std::array<StageInfo, kStageCount>& stage_table() {
  static const std::array<StageInfo, kStageCount> table{{
      {"S1", "Ordinary World", Phase::Departure, InfoGroup::OverviewIntro},
      {"S2", "Call to Adventure", Phase::Departure, InfoGroup::OverviewIntro},
      {"S3", "Refusal of the Call", Phase::Departure, InfoGroup::OverviewIntro},
      {"S4", "Meeting the Mentor", Phase::Initiation, InfoGroup::SummaryInfo},
      {"S5", "Crossing the Threshold", Phase::Initiation, InfoGroup::SummaryInfo},
      {"S6", "Tests, Allies, Enemies", Phase::Initiation, InfoGroup::SummaryInfo},
      {"S7", "Approach to the Inmost Cave", Phase::Unification, InfoGroup::SummaryInfo},
      {"S8", "The Ordeal", Phase::Unification, InfoGroup::SummaryInfo},
      {"S9", "The Reward", Phase::Unification, InfoGroup::SummaryInfo},
      {"S10", "The Road Back", Phase::Return, InfoGroup::FormativeGuidance},
      {"S11", "The Resurrection", Phase::Return, InfoGroup::FormativeGuidance},
      {"S12", "Return with the Elixir", Phase::Return, InfoGroup::FormativeGuidance},
  }};
  return table;
}

std::string_view to_string(BackendMode m) {
  return m == BackendMode::Template ? "template" : "llm";
}

BackendMode parse_backend_mode(std::string_view s) {
  if (s == "template") return BackendMode::Template;
  if (s == "llm") return BackendMode::RemoteLLM;
  fail(ErrorKind::Config, "backend must be 'template' or 'llm', got '" + std::string(s) + "'");
}

namespace {

constexpr std::size_t idx(ModeFilter m) { return static_cast<std::size_t>(m); }

std::string lower_measure(Measure m) {
  switch (m) {
    case Measure::Count: return "count";
    case Measure::MeanDuration: return "mean_duration";
    case Measure::Accuracy: return "accuracy";
  }
  return "value";
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

class Planner {
 public:
  explicit Planner(const PlanInputs& in)
      : in_(in),
        entry_(*in.entry),
        graph_(*in.graph),
        t_(*in.templates),
        unit_(graph_.unit(entry_.unit_id)),
        unit_objs_(unit_.objectives.begin(), unit_.objectives.end()) {}

  std::vector<StagePlan> run() {
    std::vector<StagePlan> plans;
    for (std::size_t i = 0; i < kStageCount; ++i) {
      StagePlan p;
      p.index = i;
      p.info = stage_table()[i];
      p.objectives = unit_objs_;
      plans.push_back(std::move(p));
    }
    route_insights();
    s1(plans[0]);
    s2(plans[1]);
    s3(plans[2]);
    transitional(plans[3]);
    s5(plans[4]);
    summative(plans[5], ModeFilter::Exercise, s6_insights_);
    transitional(plans[6]);
    summative(plans[7], ModeFilter::Test, s8_insights_);
    s9(plans[8]);
    transitional(plans[9]);
    s11(plans[10]);
    s12(plans[11]);
    return plans;
  }

 private:
  const PlanInputs& in_;
  const CacheEntry& entry_;
  const ObjectiveGraph& graph_;
  const TemplateLibrary& t_;
  const Unit& unit_;
  ObjectiveSet unit_objs_;
  std::vector<Insight> s6_insights_;
  std::vector<Insight> s8_insights_;

  static void empty(StagePlan& p) {
    p.transitional = true;
    p.variant = "empty";
    p.charts.clear();
  }

  static void transitional(StagePlan& p) {
    p.transitional = true;
    p.variant = "transitional";
  }

  std::string unit_title(const Unit& u) const { return u.title.empty() ? u.id : u.title; }

  void route_insights() {
    std::set<std::string> seen;
    if (!in_.insights) return;
    for (const auto& ins : *in_.insights) {
      if (!seen.insert(ins.id).second) continue;
      (ins.subspace.mode == ModeFilter::Test ? s8_insights_ : s6_insights_).push_back(ins);
    }
  }

  ObjectiveSet objectives_of(const Subspace& s) const {
    if (s.all_objectives()) return unit_objs_;
    return parse_set_key(s.objective);
  }

  std::string insight_sentence(const Insight& ins) const {
    std::map<std::string, std::string> slots = ins.display;
    const auto m = std::string(to_string(ins.subspace.measure));
    slots["measure"] = t_.phrase("measure." + m);
    slots["share_measure"] = t_.phrase("share." + m);
    slots["mode"] = t_.phrase("mode." + std::string(to_string(ins.subspace.mode)));
    if (ins.subspace.all_objectives()) {
      slots["subject"] = t_.phrase("subject.all");
    } else {
      const auto objs = parse_set_key(ins.subspace.objective);
      std::vector<std::string> ids(objs.begin(), objs.end());
      slots["subject"] = fill_template(t_.phrase(objs.size() > 1 ? "subject.set" : "subject.one"),
                                       {{"objective", join(ids, " and ")}});
    }
    return fill_template(t_.phrase("insight." + std::string(to_string(ins.kind))), slots);
  }

  static void fact(StagePlan& p, const std::string& key, double value, std::string display) {
    p.facts[key] = {{"value", value}, {"display", display}};
    p.slots[key] = std::move(display);
  }

  static void text_fact(StagePlan& p, const std::string& key, std::string text) {
    p.facts[key] = text;
    p.slots[key] = std::move(text);
  }

  std::optional<double> unit_accuracy(const std::string& unit_id, ModeFilter mode) const {
    auto it = entry_.units.find(unit_id);
    if (it == entry_.units.end()) return std::nullopt;
    return it->second.series[idx(mode)].total().accuracy();
  }

  void s1(StagePlan& p) {
    const auto here = graph_.unit_index(unit_.id);
    std::vector<const Unit*> prior;
    for (std::size_t i = 0; i < here; ++i) prior.push_back(&graph_.units()[i]);
    text_fact(p, "unit_title", unit_title(unit_));
    if (prior.empty()) return empty(p);

    p.objectives.clear();
    const Unit* best = nullptr;
    const Unit* weak = nullptr;
    std::optional<double> best_acc, weak_acc;
    json units = json::object();
    ChartBuilder chart("S1-units", ChartKind::NodeLink, "Your path through the units");
    chart.axes({"unit", ""}, {"accuracy", "%"}).series("units");
    std::map<std::string, std::string> unit_of_point;
    auto add_unit = [&](const Unit& u) {
      const auto acc = unit_accuracy(u.id, ModeFilter::All);
      ElementTag tag{ObjectiveSet(u.objectives.begin(), u.objectives.end()), u.id, "unit"};
      chart.point(u.id, unit_title(u), acc, std::move(tag));
      return acc;
    };
    for (const auto* u : prior) {
      p.objectives.insert(u->objectives.begin(), u->objectives.end());
      const auto acc = add_unit(*u);
      units[u->id] = {{"title", unit_title(*u)},
                      {"accuracy", acc ? json(*acc) : json(nullptr)},
                      {"display", acc ? fmtx::percent(*acc) : "not assessed"}};
      if (!acc) continue;
      if (!best_acc || *acc > *best_acc) best = u, best_acc = acc;
      if (!weak_acc || *acc < *weak_acc) weak = u, weak_acc = acc;
    }
    add_unit(unit_);
    std::set<std::pair<std::string, std::string>> links;
    std::set<std::string> charted;
    for (const auto* u : prior) charted.insert(u->id);
    charted.insert(unit_.id);
    for (const auto& e : graph_.edges()) {
      const auto& a = graph_.objective(e.from).unit_id;
      const auto& b = graph_.objective(e.to).unit_id;
      if (a != b && charted.count(a) && charted.count(b)) links.emplace(a, b);
    }
    for (const auto& [a, b] : links) chart.link(a, b);

    p.facts["units"] = units;
    fact(p, "prior_count", static_cast<double>(prior.size()), std::to_string(prior.size()));
    p.slots["best"] = "";
    p.slots["weak"] = "";
    if (best) {
      text_fact(p, "best_unit", unit_title(*best));
      fact(p, "best_accuracy", *best_acc, fmtx::percent(*best_acc));
      p.slots["best"] = fill_template(t_.phrase("s1.best"), p.slots);
      if (weak != best && *weak_acc < in_.weak_unit) {
        text_fact(p, "weak_unit", unit_title(*weak));
        fact(p, "weak_accuracy", *weak_acc, fmtx::percent(*weak_acc));
        p.slots["weak"] = fill_template(t_.phrase("s1.weak"), p.slots);
        chart.annotate(weak->id, "toughest earlier unit");
      } else {
        p.slots["weak"] = t_.phrase("s1.no_weak");
      }
    }
    p.charts.push_back(std::move(chart).build());
  }

  void s2(StagePlan& p) {
    text_fact(p, "unit_title", unit_title(unit_));
    if (unit_.objectives.empty()) return empty(p);
    std::vector<std::string> names;
    for (const auto& id : unit_.objectives) {
      const auto& o = graph_.objective(id);
      names.push_back(o.label.empty() || o.label == id ? id : id + " (" + o.label + ")");
    }
    p.facts["objectives"] = names;
    fact(p, "objective_count", static_cast<double>(names.size()), std::to_string(names.size()));
    p.slots["objective_list"] = join(names, ", ");
  }

  void s3(StagePlan& p) {
    ChartBuilder chart("S3-difficulty", ChartKind::Bar, "Question difficulty per objective");
    chart.axes({"objective", ""}, {"share of questions", "%"});
    const ObjectiveDiagnosis* hardest = nullptr;
    json profiles = json::object();
    for (auto d : kDifficulties) {
      chart.series(std::string(to_string(d)));
      for (const auto& dg : *in_.diagnoses) {
        if (!dg.profile) continue;
        chart.point(std::string(to_string(d)) + "-" + dg.objective, dg.objective, dg.profile->share(d),
                    {{dg.objective}, unit_.id, "difficulty_share"});
      }
    }
    for (const auto& dg : *in_.diagnoses) {
      if (!dg.profile) continue;
      const double hard = dg.profile->share(Difficulty::Hard);
      profiles[dg.objective] = {{"hard_share", fmtx::percent(hard)},
                                {"questions", dg.profile->question_count},
                                {"reward_score", dg.reward_score ? fmtx::number(*dg.reward_score, 2) : ""}};
      if (!hardest || hard > hardest->profile->share(Difficulty::Hard)) hardest = &dg;
    }
    if (!hardest) return empty(p);
    p.facts["profiles"] = profiles;
    const double hard = hardest->profile->share(Difficulty::Hard);
    std::map<std::string, std::string> slots{
        {"objective", hardest->objective},
        {"hard_share", fmtx::percent(hard)},
        {"reward", hardest->reward_score ? fmtx::number(*hardest->reward_score, 2) : ""}};
    p.facts["hardest"] = {{"objective", hardest->objective},
                          {"hard_share", {{"value", hard}, {"display", slots["hard_share"]}}},
                          {"reward", slots["reward"]}};
    p.slots["hardest"] = fill_template(t_.phrase("s3.hardest"), slots);
    p.charts.push_back(std::move(chart).build());
  }

  void s5(StagePlan& p) {
    const auto& s = entry_.unit(unit_.id).series[idx(ModeFilter::Exercise)];
    const auto total = s.total();
    if (total.count == 0) return empty(p);
    const auto weeks = static_cast<std::size_t>(
        std::count_if(s.points.begin(), s.points.end(), [](const SeriesPoint& pt) { return pt.count > 0; }));
    fact(p, "exercise_count", static_cast<double>(total.count), std::to_string(total.count));
    fact(p, "exercise_weeks", static_cast<double>(weeks), std::to_string(weeks));
  }

  ChartSpec accuracy_line(const std::string& id, ModeFilter mode, const std::vector<Insight>& insights) const {
    const auto& um = entry_.unit(unit_.id);
    const auto& s = um.series[idx(mode)];
    const auto& cohort = um.cohort[idx(mode)];
    ChartBuilder chart(id, ChartKind::Line,
                       "Your " + t_.phrase("mode." + std::string(to_string(mode))) + " accuracy by week");
    chart.axes({"week", ""}, {"accuracy", "%"}).series("You");
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      chart.point("you-" + std::to_string(k), fmtx::interval_label(k), s.points[k].accuracy(),
                  {unit_objs_, unit_.id, "accuracy"});
    }
    chart.series("Class average");
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      std::optional<double> y;
      if (k < cohort.intervals.size() && cohort.intervals[k]) y = cohort.intervals[k]->mean_accuracy;
      chart.point("class-" + std::to_string(k), fmtx::interval_label(k), y,
                  {unit_objs_, unit_.id, "accuracy"});
    }
    for (const auto& ins : insights) {
      std::optional<std::size_t> at;
      if (const auto* o = std::get_if<OutlierEvidence>(&ins.evidence)) at = o->index;
      if (const auto* c = std::get_if<ChangePointEvidence>(&ins.evidence)) at = c->index;
      if (at && *at < s.points.size()) chart.annotate("you-" + std::to_string(*at), insight_sentence(ins));
    }
    return std::move(chart).build();
  }

  ChartSpec peer_bar(const std::string& id, ModeFilter mode) const {
    ChartBuilder chart(id, ChartKind::Bar, "You and the class, per objective");
    chart.axes({"objective", ""}, {"accuracy", "%"}).series("You");
    for (const auto& o : unit_.objectives) {
      chart.point("you-" + o, o, entry_.objective(o).series[idx(mode)].total().accuracy(),
                  {{o}, unit_.id, "accuracy"});
    }
    chart.series("Class average");
    for (const auto& o : unit_.objectives) {
      const auto& c = entry_.objective(o).cohort[idx(mode)].overall;
      chart.point("class-" + o, o, c ? std::optional<double>(c->mean_accuracy) : std::nullopt,
                  {{o}, unit_.id, "accuracy"});
    }
    return std::move(chart).build();
  }

  ChartSpec insight_line(const std::string& id, const Insight& ins) const {
    const auto objs = objectives_of(ins.subspace);
    ChartBuilder chart(id, ChartKind::Line, insight_sentence(ins));
    chart.axes({"week", ""}, {t_.phrase("measure." + std::string(to_string(ins.subspace.measure))), ""})
        .series(ins.id);
    for (std::size_t k = 0; k < ins.series.size(); ++k) {
      chart.point("w" + std::to_string(k), fmtx::interval_label(k), ins.series[k],
                  {objs, ins.unit_id, lower_measure(ins.subspace.measure)});
    }
    return std::move(chart).build();
  }

  void summative(StagePlan& p, ModeFilter mode, const std::vector<Insight>& insights) {
    const auto& um = entry_.unit(unit_.id);
    const bool test_stage = mode == ModeFilter::Test;
    const bool has_records = um.series[idx(mode)].total().count > 0;
    std::vector<std::string> sentences;
    for (const auto& ins : insights) sentences.push_back(insight_sentence(ins));
    p.slots["insights"] = join(sentences, " ");

    if (test_stage) {
      if (!has_records) return empty(p);
      const auto acc = um.series[idx(mode)].total().accuracy();
      fact(p, "test_accuracy", *acc, fmtx::percent(*acc));
      const auto& peer = um.cohort[idx(mode)].overall;
      if (peer) {
        fact(p, "peer_accuracy", peer->mean_accuracy, fmtx::percent(peer->mean_accuracy));
        fact(p, "cohort_size", static_cast<double>(peer->cohort_size), std::to_string(peer->cohort_size));
      }
      p.slots["comparison"] = fill_template(t_.phrase(peer ? "s8.compare" : "s8.alone"), p.slots);
      json per = json::object();
      for (const auto& o : unit_.objectives) {
        if (auto a = entry_.objective(o).series[idx(mode)].total().accuracy()) per[o] = fmtx::percent(*a);
      }
      p.facts["objective_test_accuracy"] = per;
    } else if (insights.empty()) {
      return empty(p);
    }

    p.insights = insights;
    for (const auto& ins : insights) {
      const auto objs = objectives_of(ins.subspace);
      p.objectives.insert(objs.begin(), objs.end());
    }
    const std::string prefix = std::string(p.info.id);
    p.charts.push_back(accuracy_line(prefix + "-line", mode, insights));
    p.charts.push_back(peer_bar(prefix + "-peers", mode));
    std::size_t n = 0;
    for (const auto& ins : insights) {
      if (!ins.series.empty()) p.charts.push_back(insight_line(prefix + "-insight-" + std::to_string(++n), ins));
    }
  }

  void s9(StagePlan& p) {
    ChartBuilder chart("S9-mastery", ChartKind::RadialProgress, "Mastery per objective");
    chart.axes({"objective", ""}, {"mastery", "%"}).series("mastery");
    std::vector<std::string> parts;
    const ObjectiveDiagnosis* strongest = nullptr;
    json mastery = json::object();
    for (const auto& d : *in_.diagnoses) {
      chart.point(d.objective, d.objective, d.mastery, {{d.objective}, unit_.id, "mastery"});
      if (!d.mastery) continue;
      const auto shown = fmtx::percent(*d.mastery);
      mastery[d.objective] = shown;
      parts.push_back(d.objective + " " + shown);
      if (!strongest || *d.mastery > *strongest->mastery) strongest = &d;
    }
    if (!strongest) return empty(p);
    p.facts["mastery"] = mastery;
    p.slots["mastery_list"] = join(parts, ", ");
    p.slots["strongest"] = fill_template(
        t_.phrase("s9.strongest"), {{"objective", strongest->objective}, {"mastery", fmtx::percent(*strongest->mastery)}});
    p.charts.push_back(std::move(chart).build());
  }

  void s11(StagePlan& p) {
    if (!in_.feedback || in_.feedback->empty()) return empty(p);
    std::vector<std::string> sentences;
    p.objectives.clear();
    for (const auto& item : *in_.feedback) {
      std::vector<std::string> parts;
      if (item.praise) parts.push_back(*item.praise);
      if (item.gap) parts.push_back(*item.gap);
      parts.push_back(item.cause_text);
      parts.insert(parts.end(), item.actions.begin(), item.actions.end());
      sentences.push_back(join(parts, " "));
      p.objectives.insert(item.objective);
      if (item.cause) p.objectives.insert(item.cause->objectives.begin(), item.cause->objectives.end());
    }
    p.feedback = *in_.feedback;
    p.slots["feedback"] = join(sentences, " ");
  }

  void s12(StagePlan& p) {
    const auto here = graph_.unit_index(unit_.id);
    if (here + 1 < graph_.units().size()) {
      const auto& next = graph_.units()[here + 1];
      text_fact(p, "next_unit", unit_title(next));
      p.slots["next_step"] = fill_template(t_.phrase("s12.next"), p.slots);
    } else {
      p.slots["next_step"] = t_.phrase("s12.final");
    }
    std::vector<std::string> focus;
    if (in_.feedback) {
      for (const auto& item : *in_.feedback) {
        if (item.category == FeedbackCategory::Remediate) focus.push_back(item.objective);
      }
    }
    if (focus.empty()) {
      p.slots["focus"] = t_.phrase("s12.ready");
    } else {
      p.facts["focus"] = focus;
      p.slots["focus"] = fill_template(t_.phrase("s12.focus"), {{"focus_list", join(focus, ", ")}});
    }
  }
};

}  // namespace

std::vector<StagePlan> plan_stages(const PlanInputs& inputs) {
  if (!inputs.entry || !inputs.graph || !inputs.diagnoses || !inputs.templates) {
    fail(ErrorKind::Runtime, "plan_stages needs entry, graph, diagnoses and templates");
  }
  return Planner(inputs).run();
}

namespace {

json insights_json(const std::vector<Insight>& v) {
  json a = json::array();
  for (const auto& i : v) a.push_back(to_json(i));
  return a;
}

json feedback_json(const std::vector<FeedbackItem>& v) {
  json a = json::array();
  for (const auto& i : v) a.push_back(to_json(i));
  return a;
}

json charts_json(const std::vector<ChartSpec>& v) {
  json a = json::array();
  for (const auto& c : v) a.push_back(to_json(c));
  return a;
}

}  // namespace

ReportDocument render_report(const std::vector<StagePlan>& plans, const NarrativeBackend& backend,
                             ReportMetadata metadata, const TemplateLibrary& templates,
                             const std::vector<ObjectiveDiagnosis>& diagnoses) {
  std::vector<std::string> drafts;
  drafts.reserve(plans.size());
  for (const auto& p : plans) drafts.push_back(fill_template(templates.stage(p.info.id, p.variant), p.slots));

  std::vector<StageNarration> narrations(plans.size());
  std::vector<std::exception_ptr> errors(plans.size());
  const std::size_t workers = std::clamp<std::size_t>(backend.max_in_flight(), 1, plans.size() ? plans.size() : 1);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < plans.size(); i = next++) {
      try {
        narrations[i] = backend.narrate(plans[i], drafts[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ReportDocument doc;
  metadata.backend = backend.mode();
  doc.diagnoses = diagnoses;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& p = plans[i];
    if (narrations[i].fell_back) metadata.fallbacks.push_back({std::string(p.info.id), narrations[i].reason});
    doc.stages.push_back({std::string(p.info.id), std::string(p.info.title), p.info.phase, p.info.info_group,
                          p.transitional, narrations[i].text, p.insights, p.feedback, p.charts, p.facts,
                          p.objectives});
  }
  doc.metadata = std::move(metadata);
  return doc;
}

std::map<std::string, ElementTag> ReportDocument::element_registry() const {
  std::map<std::string, ElementTag> out;
  for (const auto& s : stages) {
    for (const auto& c : s.charts) out.insert(c.registry.begin(), c.registry.end());
  }
  return out;
}

const ReportStage* ReportDocument::find_stage(std::string_view id) const {
  for (const auto& s : stages) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

json to_json(const ReportDocument& doc) {
  json stages = json::array();
  json index = json::array();
  for (const auto& s : doc.stages) {
    stages.push_back({{"id", s.id},
                      {"title", s.title},
                      {"phase", std::string(to_string(s.phase))},
                      {"info_group", std::string(to_string(s.info_group))},
                      {"transitional", s.transitional},
                      {"narrative", s.narrative},
                      {"insights", insights_json(s.insights)},
                      {"feedback", feedback_json(s.feedback)},
                      {"charts", charts_json(s.charts)},
                      {"facts", s.facts},
                      {"objectives", s.objectives}});
    index.push_back({{"id", s.id}, {"title", s.title}, {"phase", std::string(to_string(s.phase))}});
  }
  json fallbacks = json::array();
  for (const auto& f : doc.metadata.fallbacks) fallbacks.push_back({{"stage", f.stage}, {"reason", f.reason}});
  json diagnoses = json::array();
  for (const auto& d : doc.diagnoses) diagnoses.push_back(to_json(d));
  return {{"schema", doc.schema},
          {"metadata",
           {{"student", doc.metadata.student},
            {"unit", doc.metadata.unit},
            {"unit_title", doc.metadata.unit_title},
            {"generated_at", doc.metadata.generated_at},
            {"engine_version", doc.metadata.engine_version},
            {"backend", std::string(to_string(doc.metadata.backend))},
            {"fallbacks", fallbacks}}},
          {"index", index},
          {"stages", stages},
          {"diagnoses", diagnoses}};
}

ReportDocument report_from_json(const json& j) {
  if (j.value("schema", "") != kReportSchema) {
    fail(ErrorKind::Data, "report schema must be " + std::string(kReportSchema));
  }
  ReportDocument doc;
  const auto& m = j.at("metadata");
  doc.metadata.student = m.at("student").get<std::string>();
  doc.metadata.unit = m.at("unit").get<std::string>();
  doc.metadata.unit_title = m.value("unit_title", "");
  doc.metadata.generated_at = m.value("generated_at", "");
  doc.metadata.engine_version = m.value("engine_version", "");
  doc.metadata.backend = parse_backend_mode(m.value("backend", "template"));
  for (const auto& f : m.value("fallbacks", json::array())) {
    doc.metadata.fallbacks.push_back({f.at("stage").get<std::string>(), f.at("reason").get<std::string>()});
  }
  for (const auto& s : j.at("stages")) {
    ReportStage st;
    st.id = s.at("id").get<std::string>();
    st.title = s.at("title").get<std::string>();
    st.phase = parse_phase(s.at("phase").get<std::string>());
    st.info_group = parse_info_group(s.at("info_group").get<std::string>());
    st.transitional = s.at("transitional").get<bool>();
    st.narrative = s.at("narrative").get<std::string>();
    for (const auto& i : s.at("insights")) st.insights.push_back(insight_from_json(i));
    for (const auto& f : s.at("feedback")) st.feedback.push_back(feedback_from_json(f));
    for (const auto& c : s.at("charts")) st.charts.push_back(chart_from_json(c));
    st.facts = s.value("facts", json::object());
    st.objectives = s.value("objectives", ObjectiveSet{});
    doc.stages.push_back(std::move(st));
  }
  for (const auto& d : j.value("diagnoses", json::array())) doc.diagnoses.push_back(diagnosis_from_json(d));
  return doc;
}

std::string serialize_report(const ReportDocument& doc) { return to_json(doc).dump(2) + "\n"; }

std::vector<std::string> check_report(const ReportDocument& doc, const ObjectiveGraph* graph) {
  std::vector<std::string> problems;
  if (doc.stages.size() != kStageCount) {
    problems.push_back("expected 12 stages, found " + std::to_string(doc.stages.size()));
  }
  std::map<Phase, std::size_t> phases;
  std::map<InfoGroup, std::size_t> groups;
  std::set<std::string> insight_ids;
  for (std::size_t i = 0; i < doc.stages.size(); ++i) {
    const auto& s = doc.stages[i];
    ++phases[s.phase];
    ++groups[s.info_group];
    if (i < kStageCount) {
      const auto& info = stage_table()[i];
      if (s.id != info.id) problems.push_back("stage " + std::to_string(i + 1) + " is " + s.id);
      if (s.phase != info.phase || s.info_group != info.info_group) {
        problems.push_back(s.id + " has the wrong phase or information group");
      }
    }
    for (const auto& ins : s.insights) {
      if (!insight_ids.insert(ins.id).second) problems.push_back("insight " + ins.id + " bound twice");
    }
    if (s.transitional && !s.charts.empty()) problems.push_back(s.id + " is transitional but has charts");
    for (const auto& c : s.charts) {
      for (auto& p : check_chart(c)) problems.push_back(std::move(p));
      if (!graph) continue;
      for (const auto& [id, tag] : c.registry) {
        for (const auto& o : tag.objectives) {
          if (!graph->contains(o)) problems.push_back(id + " maps to unknown objective " + o);
        }
      }
    }
  }
  const std::vector<std::size_t> want_phase{3, 3, 3, 3};
  const std::vector<std::size_t> want_group{3, 6, 3};
  std::vector<std::size_t> got_phase, got_group;
  for (auto p : {Phase::Departure, Phase::Initiation, Phase::Unification, Phase::Return}) got_phase.push_back(phases[p]);
  for (auto g : {InfoGroup::OverviewIntro, InfoGroup::SummaryInfo, InfoGroup::FormativeGuidance}) {
    got_group.push_back(groups[g]);
  }
  if (got_phase != want_phase) problems.push_back("phase partition is not (3,3,3,3)");
  if (got_group != want_group) problems.push_back("information group partition is not (3,6,3)");
  return problems;
}

json structured_layer(const ReportDocument& doc) {
  json stages = json::array();
  for (const auto& s : doc.stages) {
    stages.push_back({{"insights", insights_json(s.insights)},
                      {"feedback", feedback_json(s.feedback)},
                      {"facts", s.facts}});
  }
  json diagnoses = json::array();
  for (const auto& d : doc.diagnoses) diagnoses.push_back(to_json(d));
  return {{"stages", stages}, {"diagnoses", diagnoses}};
}

}  // namespace learnstory
