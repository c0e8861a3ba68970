#include "learnstory/insights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "learnstory/error.hpp"
#include "learnstory/format.hpp"
#include "learnstory/stats.hpp"

namespace learnstory {

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::Count: return "Count";
    case Measure::MeanDuration: return "MeanDuration";
    case Measure::Accuracy: return "Accuracy";
  }
  return "?";
}

Measure parse_measure(std::string_view s) {
  for (auto m : kMeasures) {
    if (to_string(m) == s) return m;
  }
  fail(ErrorKind::Data, "unknown measure '" + std::string(s) + "'");
}

std::string_view to_string(InsightKind k) {
  switch (k) {
    case InsightKind::Majority: return "Majority";
    case InsightKind::Outlier: return "Outlier";
    case InsightKind::Trend: return "Trend";
    case InsightKind::ChangePoint: return "ChangePoint";
    case InsightKind::LowVariance: return "LowVariance";
  }
  return "?";
}

InsightKind parse_insight_kind(std::string_view s) {
  for (auto k : kInsightKinds) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorKind::Data, "unknown insight kind '" + std::string(s) + "'");
}

std::string Subspace::key() const {
  return std::string(to_string(mode)) + "|" + objective + "|" + std::string(to_string(measure));
}

std::vector<Subspace> enumerate_subspaces(const ObjectiveGraph& graph, const std::string& unit_id) {
  const auto& unit = graph.unit(unit_id);
  std::vector<Subspace> out;
  out.reserve(kModeFilters.size() * (unit.objectives.size() + 1) * kMeasures.size());
  for (auto mode : kModeFilters) {
    auto add = [&](const std::string& objective) {
      for (auto measure : kMeasures) out.push_back({mode, objective, measure});
    };
    for (const auto& id : unit.objectives) add(id);
    add(kAllObjectives);
  }
  return out;
}

InsightKind kind_of(const Evidence& e) { return static_cast<InsightKind>(e.index()); }

MeasureSeries measure_values(const PerformanceSeries& series, Measure measure) {
  MeasureSeries out;
  out.reserve(series.points.size());
  for (const auto& p : series.points) {
    switch (measure) {
      case Measure::Count: out.emplace_back(static_cast<double>(p.count)); break;
      case Measure::MeanDuration: out.push_back(p.mean_duration()); break;
      case Measure::Accuracy: out.push_back(p.accuracy()); break;
    }
  }
  return out;
}

namespace {

struct Present {
  std::vector<double> index;
  std::vector<double> value;
};

Present present_points(const MeasureSeries& series) {
  Present p;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series[k]) {
      p.index.push_back(static_cast<double>(k));
      p.value.push_back(*series[k]);
    }
  }
  return p;
}

bool at_least_as_extreme(double candidate, double observed) {
  if (std::isinf(observed)) return std::isinf(candidate);
  return candidate >= observed - stats::kTieTolerance * std::max(1.0, std::fabs(observed));
}

// (1 + #{permuted statistic >= observed}) / (1 + permutations); each
// permutation reshuffles the previous arrangement.
template <typename Statistic>
double permutation_p_value(std::vector<double> values, double observed, Statistic statistic,
                           const DetectorConfig& config) {
  stats::Lcg rng(config.seed);
  std::size_t extreme = 0;
  for (std::size_t i = 0; i < config.permutations; ++i) {
    stats::shuffle(values, rng);
    if (at_least_as_extreme(statistic(values), observed)) ++extreme;
  }
  return static_cast<double>(1 + extreme) / static_cast<double>(1 + config.permutations);
}

std::optional<InsightCore> outlier(const Present& p) {
  if (p.value.size() < 3) return std::nullopt;
  const double med = stats::median(p.value);
  std::vector<double> dev;
  dev.reserve(p.value.size());
  for (double v : p.value) dev.push_back(std::fabs(v - med));
  const double mad = stats::median(dev);
  double scale;
  if (mad > 0.0) {
    scale = 1.4826 * mad;
  } else {
    // More than half the points sit on the median; fall back to the mean
    // absolute deviation (consistency constant sqrt(pi/2)).
    const double mean_ad = stats::mean(dev);
    if (mean_ad == 0.0) return std::nullopt;
    scale = 1.253314 * mean_ad;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < dev.size(); ++i) {
    if (dev[i] > dev[best]) best = i;
  }
  const double z = dev[best] / scale;
  const double significance = 1.0 - stats::two_sided_normal_tail(z);
  return InsightCore{significance,
                     OutlierEvidence{static_cast<std::size_t>(p.index[best]), p.value[best], med, z}};
}

std::optional<InsightCore> trend(const Present& p, const DetectorConfig& config) {
  if (p.value.size() < 3) return std::nullopt;
  const auto r = stats::pearson(p.index, p.value);
  if (!r) return std::nullopt;
  const auto slope = stats::ols_slope(p.index, p.value);
  const auto& xs = p.index;
  const double pv = permutation_p_value(
      p.value, std::fabs(*r),
      [&xs](const std::vector<double>& ys) { return std::fabs(stats::pearson(xs, ys).value_or(0.0)); },
      config);
  return InsightCore{1.0 - pv, TrendEvidence{slope.value_or(0.0), *r, pv}};
}

std::optional<InsightCore> change_point(const Present& p, const DetectorConfig& config) {
  if (p.value.size() < 3) return std::nullopt;
  const auto split = stats::best_split(p.value);
  if (!split || split->statistic == 0.0) return std::nullopt;
  const double pv = permutation_p_value(
      p.value, split->statistic,
      [](const std::vector<double>& ys) { return stats::best_split(ys)->statistic; }, config);
  return InsightCore{1.0 - pv,
                     ChangePointEvidence{static_cast<std::size_t>(p.index[split->split]),
                                         split->mean_before, split->mean_after, pv}};
}

std::optional<InsightCore> low_variance(const Present& p) {
  if (p.value.size() < 2) return std::nullopt;
  const double m = stats::mean(p.value);
  if (!(m > 0.0)) return std::nullopt;
  const double cv = stats::stddev(p.value) / m;
  return InsightCore{std::max(0.0, 1.0 - cv / 0.1), LowVarianceEvidence{cv, m}};
}

}  // namespace

std::optional<InsightCore> evaluate(const MeasureSeries& series, InsightKind kind,
                                    const DetectorConfig& config) {
  const auto p = present_points(series);
  switch (kind) {
    case InsightKind::Outlier: return outlier(p);
    case InsightKind::Trend: return trend(p, config);
    case InsightKind::ChangePoint: return change_point(p, config);
    case InsightKind::LowVariance: return low_variance(p);
    case InsightKind::Majority: return std::nullopt;  // not a time-series detector
  }
  return std::nullopt;
}

std::optional<InsightCore> detect(const MeasureSeries& series, InsightKind kind,
                                  const DetectorConfig& config) {
  auto core = evaluate(series, kind, config);
  if (!core || !(core->significance > config.floor)) return std::nullopt;
  return core;
}

std::optional<InsightCore> detect_majority(const std::map<ObjectiveId, double>& totals,
                                           const DetectorConfig& config) {
  double sum = 0.0;
  for (const auto& [_, v] : totals) sum += v;
  if (!(sum > 0.0)) return std::nullopt;
  const ObjectiveId* dominant = nullptr;
  double best = -1.0;
  for (const auto& [id, v] : totals) {
    if (v > best) {
      best = v;
      dominant = &id;
    }
  }
  const double share = best / sum;
  if (!(share > 0.5) || !(share > config.floor)) return std::nullopt;
  return InsightCore{share, MajorityEvidence{*dominant, share}};
}

std::string insight_id(InsightKind kind, const Subspace& subspace) {
  return "ins:" + std::string(to_string(kind)) + ":" + subspace.key();
}

namespace {

std::string measure_value(Measure m, double v) {
  switch (m) {
    case Measure::Count: return fmtx::number(v, 2);
    case Measure::MeanDuration: return fmtx::seconds(v);
    case Measure::Accuracy: return fmtx::percent(v);
  }
  return fmtx::number(v);
}

std::string measure_slope(Measure m, double slope) {
  switch (m) {
    case Measure::Count: return fmtx::signed_number(slope, 2);
    case Measure::MeanDuration: return fmtx::signed_number(slope, 0) + " s";
    case Measure::Accuracy: return fmtx::signed_number(slope * 100.0, 2) + " points";
  }
  return fmtx::signed_number(slope);
}

std::map<std::string, std::string> display_for(const Insight& in) {
  std::map<std::string, std::string> d;
  const auto m = in.subspace.measure;
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, MajorityEvidence>) {
          d["dominant"] = e.dominant;
          d["share"] = fmtx::percent(e.share);
        } else if constexpr (std::is_same_v<T, OutlierEvidence>) {
          d["interval"] = fmtx::interval_label(e.index);
          d["value"] = measure_value(m, e.value);
          d["median"] = measure_value(m, e.median);
          d["direction"] = e.value > e.median ? "above" : "below";
        } else if constexpr (std::is_same_v<T, TrendEvidence>) {
          d["slope"] = measure_slope(m, e.slope);
          d["direction"] = e.slope >= 0 ? "rising" : "falling";
        } else if constexpr (std::is_same_v<T, ChangePointEvidence>) {
          d["interval"] = fmtx::interval_label(e.index);
          d["before"] = measure_value(m, e.mean_before);
          d["after"] = measure_value(m, e.mean_after);
          d["direction"] = e.mean_after >= e.mean_before ? "up" : "down";
        } else {
          d["cv"] = fmtx::percent(e.cv);
          d["mean"] = measure_value(m, e.mean);
        }
      },
      in.evidence);
  d["significance"] = fmtx::percent(in.significance);
  return d;
}

Insight make_insight(const Subspace& s, InsightCore core, double impact, const std::string& unit_id,
                     MeasureSeries series) {
  Insight in;
  in.kind = kind_of(core.evidence);
  in.subspace = s;
  in.id = insight_id(in.kind, s);
  in.evidence = std::move(core.evidence);
  in.significance = core.significance;
  in.impact = impact;
  in.score = core.significance * impact;
  in.unit_id = unit_id;
  in.series = std::move(series);
  in.display = display_for(in);
  return in;
}

json evidence_to_json(const Evidence& ev) {
  return std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, MajorityEvidence>) {
          return {{"dominant", e.dominant}, {"share", e.share}};
        } else if constexpr (std::is_same_v<T, OutlierEvidence>) {
          return {{"index", e.index}, {"value", e.value}, {"median", e.median}, {"z", e.z}};
        } else if constexpr (std::is_same_v<T, TrendEvidence>) {
          return {{"slope", e.slope}, {"r", e.r}, {"p_value", e.p_value}};
        } else if constexpr (std::is_same_v<T, ChangePointEvidence>) {
          return {{"index", e.index},
                  {"mean_before", e.mean_before},
                  {"mean_after", e.mean_after},
                  {"p_value", e.p_value}};
        } else {
          return {{"cv", e.cv}, {"mean", e.mean}};
        }
      },
      ev);
}

Evidence evidence_from_json(InsightKind kind, const json& j) {
  switch (kind) {
    case InsightKind::Majority:
      return MajorityEvidence{j.at("dominant").get<std::string>(), j.at("share").get<double>()};
    case InsightKind::Outlier:
      return OutlierEvidence{j.at("index").get<std::size_t>(), j.at("value").get<double>(),
                             j.at("median").get<double>(), j.at("z").get<double>()};
    case InsightKind::Trend:
      return TrendEvidence{j.at("slope").get<double>(), j.at("r").get<double>(),
                           j.at("p_value").get<double>()};
    case InsightKind::ChangePoint:
      return ChangePointEvidence{j.at("index").get<std::size_t>(), j.at("mean_before").get<double>(),
                                 j.at("mean_after").get<double>(), j.at("p_value").get<double>()};
    case InsightKind::LowVariance:
      return LowVarianceEvidence{j.at("cv").get<double>(), j.at("mean").get<double>()};
  }
  fail(ErrorKind::Data, "bad insight kind");
}

}  // namespace

json to_json(const Insight& in) {
  json series = json::array();
  for (const auto& v : in.series) series.push_back(v ? json(*v) : json(nullptr));
  return {{"id", in.id},
          {"kind", std::string(to_string(in.kind))},
          {"subspace",
           {{"mode", std::string(to_string(in.subspace.mode))},
            {"objective", in.subspace.objective},
            {"measure", std::string(to_string(in.subspace.measure))}}},
          {"evidence", evidence_to_json(in.evidence)},
          {"significance", in.significance},
          {"impact", in.impact},
          {"score", in.score},
          {"unit_id", in.unit_id},
          {"series", series},
          {"display", in.display}};
}

Insight insight_from_json(const json& j) {
  Insight in;
  in.id = j.at("id").get<std::string>();
  in.kind = parse_insight_kind(j.at("kind").get<std::string>());
  const auto& s = j.at("subspace");
  in.subspace = {parse_mode_filter(s.at("mode").get<std::string>()), s.at("objective").get<std::string>(),
                 parse_measure(s.at("measure").get<std::string>())};
  in.evidence = evidence_from_json(in.kind, j.at("evidence"));
  in.significance = j.at("significance").get<double>();
  in.impact = j.at("impact").get<double>();
  in.score = j.at("score").get<double>();
  in.unit_id = j.at("unit_id").get<std::string>();
  for (const auto& v : j.at("series")) {
    in.series.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  }
  in.display = j.at("display").get<std::map<std::string, std::string>>();
  return in;
}

bool ranks_before(const Insight& a, const Insight& b) {
  if (std::fabs(a.score - b.score) > kScoreTieTolerance) return a.score > b.score;
  if (a.kind != b.kind) return a.kind < b.kind;
  return a.subspace.key() < b.subspace.key();
}

std::vector<Insight> rank_insights(const std::vector<SubspaceData>& series,
                                   const std::vector<MajorityData>& majority,
                                   const DetectorConfig& config, std::size_t k,
                                   const std::string& unit_id) {
  std::map<std::string, Insight> by_id;  // at most one per (subspace, kind)
  for (const auto& s : series) {
    for (auto kind : {InsightKind::Outlier, InsightKind::Trend, InsightKind::ChangePoint,
                      InsightKind::LowVariance}) {
      if (auto core = detect(s.values, kind, config)) {
        auto in = make_insight(s.subspace, std::move(*core), s.impact, unit_id, s.values);
        by_id.insert_or_assign(in.id, std::move(in));
      }
    }
  }
  for (const auto& m : majority) {
    if (auto core = detect_majority(m.totals, config)) {
      auto in = make_insight(m.subspace, std::move(*core), m.impact, unit_id, {});
      by_id.insert_or_assign(in.id, std::move(in));
    }
  }
  std::vector<Insight> out;
  out.reserve(by_id.size());
  for (auto& [_, in] : by_id) out.push_back(std::move(in));
  std::sort(out.begin(), out.end(), ranks_before);
  if (k > 0 && out.size() > k) out.resize(k);
  return out;
}

namespace {

double share_of(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
}

double measure_total(const PerformanceSeries& s, Measure m) {
  const auto t = s.total();
  switch (m) {
    case Measure::Count: return static_cast<double>(t.count);
    case Measure::MeanDuration: return t.total_duration;
    case Measure::Accuracy: return static_cast<double>(t.correct);
  }
  return 0.0;
}

}  // namespace

void collect_unit_candidates(const CacheEntry& entry, const ObjectiveGraph& graph,
                             std::vector<SubspaceData>& series, std::vector<MajorityData>& majority) {
  const auto& unit_metrics = entry.unit(entry.unit_id);
  const auto unit_total = unit_metrics.series[static_cast<std::size_t>(ModeFilter::All)].total().count;
  const auto& unit = graph.unit(entry.unit_id);

  for (const auto& s : enumerate_subspaces(graph, entry.unit_id)) {
    const auto mi = static_cast<std::size_t>(s.mode);
    const PerformanceSeries& ps =
        s.all_objectives() ? unit_metrics.series[mi] : entry.objective(s.objective).series[mi];
    const double impact = share_of(ps.total().count, unit_total);
    series.push_back({s, measure_values(ps, s.measure), impact});
    if (s.all_objectives()) {
      MajorityData md{s, {}, impact};
      for (const auto& id : unit.objectives) {
        md.totals[id] = measure_total(entry.objective(id).series[mi], s.measure);
      }
      majority.push_back(std::move(md));
    }
  }
}

std::vector<Insight> mine_top_k(const CacheEntry& entry, const ObjectiveGraph& graph,
                                const DetectorConfig& config, std::size_t k) {
  std::vector<SubspaceData> series;
  std::vector<MajorityData> majority;
  collect_unit_candidates(entry, graph, series, majority);
  return rank_insights(series, majority, config, k, entry.unit_id);
}

std::vector<Insight> mine_scoped(const CacheEntry& entry, const std::string& objective_key,
                                 const ModeSeries& bundle, const std::string& unit_id,
                                 const DetectorConfig& config, std::size_t k) {
  const auto unit_total =
      entry.unit(unit_id).series[static_cast<std::size_t>(ModeFilter::All)].total().count;
  std::vector<SubspaceData> series;
  for (auto mode : kModeFilters) {
    const auto& ps = bundle[static_cast<std::size_t>(mode)];
    for (auto measure : kMeasures) {
      series.push_back({{mode, objective_key, measure}, measure_values(ps, measure),
                        share_of(ps.total().count, unit_total)});
    }
  }
  return rank_insights(series, {}, config, k, unit_id);
}

}  // namespace learnstory
