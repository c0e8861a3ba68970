#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "learnstory/error.hpp"
#include "learnstory/insights.hpp"
#include "learnstory/stats.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace learnstory;

namespace {

MeasureSeries ms(std::initializer_list<double> xs) {
  MeasureSeries out;
  for (double x : xs) out.emplace_back(x);
  return out;
}

DetectorConfig dc() { return {}; }

// Normal-equations slope: solve [n Sx; Sx Sxx][a b]' = [Sy Sxy]'.
double normal_equations_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("LCG output is fixed by its documented constants") {
  stats::Lcg g(42);
  CHECK(g.next32() == 2440530669u);
  CHECK(g.next32() == 968358053u);
  CHECK(g.next32() == 1773127077u);
  stats::Lcg h(1);
  for (int i = 0; i < 1000; ++i) CHECK(h.below(7) < 7u);
}

TEST_CASE("median, OLS slope and Pearson against independent oracles") {
  CHECK(stats::median({3, 1, 2}) == 2);
  CHECK(stats::median({4, 1, 2, 3}) == 2.5);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd(0, 1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng() % 10;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(static_cast<double>(i) + (rng() % 2) * 0.5);
      y.push_back(nd(rng));
    }
    const auto slope = stats::ols_slope(x, y);
    REQUIRE(slope);
    CHECK(std::fabs(*slope - normal_equations_slope(x, y)) < 1e-9);
    std::vector<double> sorted = y;
    std::sort(sorted.begin(), sorted.end());
    CHECK(stats::median(y) == oracle::med(y));
    const auto r = stats::pearson(x, y);
    REQUIRE(r);
    CHECK(std::fabs(*r - *oracle::corr(x, y)) < 1e-12);
  }
  CHECK_FALSE(stats::ols_slope(std::vector<double>{1}, std::vector<double>{1}).has_value());
  CHECK_FALSE(stats::pearson(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5}).has_value());
}

TEST_CASE("detector examples") {
  const auto flat = ms({5, 5, 5, 5});
  auto lv = detect(flat, InsightKind::LowVariance, dc());
  REQUIRE(lv);
  CHECK(std::get<LowVarianceEvidence>(lv->evidence).cv == 0.0);
  CHECK(lv->significance == 1.0);
  CHECK_FALSE(detect(flat, InsightKind::Trend, dc()));
  CHECK_FALSE(detect(flat, InsightKind::Outlier, dc()));
  CHECK_FALSE(detect(flat, InsightKind::ChangePoint, dc()));

  auto tr = detect(ms({1, 2, 3, 4, 5}), InsightKind::Trend, dc());
  REQUIRE(tr);
  const auto& te = std::get<TrendEvidence>(tr->evidence);
  CHECK(std::fabs(te.slope - 1.0) < 1e-12);
  CHECK(std::fabs(te.r - 1.0) < 1e-12);
  // Brute force: of the 1000 shuffles count those with |r| = 1.
  CHECK(te.p_value == doctest::Approx(1.0 - tr->significance));
  CHECK(std::fabs(tr->significance - *oracle::significance(ms({1, 2, 3, 4, 5}), 2, {})) < 1e-15);

  auto out = detect(ms({5, 5, 5, 50, 5}), InsightKind::Outlier, dc());
  REQUIRE(out);
  const auto& oe = std::get<OutlierEvidence>(out->evidence);
  CHECK(oe.index == 3);
  CHECK(oe.value == 50);
  CHECK(oe.median == 5);
  // MAD is 0, so the scale falls back to 1.253314 * mean |x - median| = 1.253314 * 9.
  CHECK(std::fabs(oe.z - 45.0 / (1.253314 * 9.0)) < 1e-12);

  MeasureSeries gaps{1.0, std::nullopt, 1.0, std::nullopt, 9.0, 9.0};
  auto cp = evaluate(gaps, InsightKind::ChangePoint, dc());
  REQUIRE(cp);
  CHECK(std::get<ChangePointEvidence>(cp->evidence).index == 4);  // interval index, not position

  CHECK_FALSE(detect(ms({1, 2}), InsightKind::Trend, dc()));
  CHECK_FALSE(detect(ms({3}), InsightKind::LowVariance, dc()));
  CHECK_FALSE(detect(ms({0, 0, 0}), InsightKind::LowVariance, dc()));

  auto maj = detect_majority({{"A", 9}, {"B", 1}}, dc());
  REQUIRE(maj);
  CHECK(std::get<MajorityEvidence>(maj->evidence).dominant == "A");
  CHECK(maj->significance == 0.9);
  CHECK_FALSE(detect_majority({{"A", 5}, {"B", 5}}, dc()));
  CHECK_FALSE(detect_majority({{"A", 7}, {"B", 3}}, dc()));  // share 0.7 is under the floor
  CHECK_FALSE(detect_majority({{"A", 0}}, dc()));
}

TEST_CASE("property: Trend is scale invariant; slope scales linearly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 10);
  for (int t = 0; t < 200; ++t) {
    MeasureSeries s;
    const std::size_t n = 3 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i) s.emplace_back(u(rng) + 0.5 * static_cast<double>(i));
    const double c = 0.1 + u(rng);
    MeasureSeries scaled;
    for (const auto& v : s) scaled.emplace_back(*v * c);
    auto a = evaluate(s, InsightKind::Trend, dc());
    auto b = evaluate(scaled, InsightKind::Trend, dc());
    REQUIRE(a.has_value() == b.has_value());
    if (!a) continue;
    CHECK(a->significance == b->significance);
    const auto& ea = std::get<TrendEvidence>(a->evidence);
    const auto& eb = std::get<TrendEvidence>(b->evidence);
    CHECK((ea.slope >= 0) == (eb.slope >= 0));
    CHECK(std::fabs(eb.slope - c * ea.slope) < 1e-9 * std::max(1.0, std::fabs(c * ea.slope)));
  }
}

TEST_CASE("subspace enumeration is the full cartesian product in a stable order") {
  const auto g4 = testing::flat_graph({"A", "B", "C", "D"});
  const auto s4 = enumerate_subspaces(g4, "U");
  CHECK(s4.size() == 45);
  CHECK(enumerate_subspaces(testing::flat_graph({"A"}), "U").size() == 18);
  CHECK(enumerate_subspaces(g4, "U") == s4);
  std::set<std::string> keys;
  for (const auto& s : s4) keys.insert(s.key());
  CHECK(keys.size() == 45);
  CHECK(s4.front().key() == "Exercise|A|Count");
  CHECK_THROWS_AS(enumerate_subspaces(g4, "nope"), Error);
}

TEST_CASE("ranking: score, then kind, then subspace key; k truncates without padding") {
  SubspaceData flat{{ModeFilter::All, "A", Measure::Count}, ms({5, 5, 5, 5}), 0.5};
  SubspaceData flat2{{ModeFilter::All, "B", Measure::Count}, ms({7, 7, 7}), 0.5};
  SubspaceData rising{{ModeFilter::Exercise, "A", Measure::Count}, ms({1, 2, 3, 4, 5, 6}), 0.5};
  const auto all = rank_insights({flat2, rising, flat}, {}, dc(), 0, "U");
  REQUIRE(all.size() >= 3);
  CHECK(all[0].id == "ins:LowVariance:All|A|Count");
  CHECK(all[1].id == "ins:LowVariance:All|B|Count");
  for (std::size_t i = 1; i < all.size(); ++i) CHECK_FALSE(ranks_before(all[i], all[i - 1]));
  CHECK(rank_insights({flat2, rising, flat}, {}, dc(), 2, "U").size() == 2);
  CHECK(rank_insights({flat}, {}, dc(), 10, "U").size() == 1);
  CHECK(rank_insights({}, {}, dc(), 3, "U").empty());
}

TEST_CASE("insight JSON round trip") {
  SubspaceData rising{{ModeFilter::Test, "A+B", Measure::Accuracy}, {0.2, std::nullopt, 0.5, 0.9}, 0.25};
  const auto ins = rank_insights({rising}, {{{ModeFilter::All, "*", Measure::Count}, {{"A", 9}, {"B", 1}}, 1.0}}, dc(), 0, "U");
  REQUIRE_FALSE(ins.empty());
  for (const auto& i : ins) CHECK(insight_from_json(to_json(i)) == i);
}

TEST_CASE("Steven fixture: exactly three ranked insights with well-formed evidence") {
  const auto& f = testing::steven();
  const auto e = f.entry(testing::kSteven, "U7");
  const auto top = mine_top_k(e, f.data.graph, f.config.detector(), 3);
  CHECK(top.size() == 3);
  const auto all = mine_top_k(e, f.data.graph, f.config.detector(), 0);
  CHECK(all.size() >= 3);
  std::set<std::string> ids;
  for (const auto& i : all) {
    CHECK(ids.insert(i.id).second);
    CHECK(i.score >= 0.0);
    CHECK(i.score <= 1.0);
    CHECK(i.significance > f.config.insight_floor);
    CHECK(i.impact <= 1.0);
    if (const auto* o = std::get_if<OutlierEvidence>(&i.evidence)) {
      REQUIRE(o->index < i.series.size());
      CHECK(i.series[o->index].has_value());
    }
    if (const auto* c = std::get_if<ChangePointEvidence>(&i.evidence)) {
      REQUIRE(c->index < i.series.size());
      CHECK(i.series[c->index].has_value());
    }
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(top[i] == all[i]);
  CHECK(mine_top_k(e, f.data.graph, f.config.detector(), 3) == top);  // deterministic
}

TEST_CASE("property: impact of single-objective subspaces sums to the All subspace without multi-tags") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    auto data = testing::random_unit_cohort(rng, 1 + rng() % 4, 1 + rng() % 8, 5);
    std::erase_if(data.records, [](const AttemptRecord& r) { return r.objectives.size() > 1; });
    const auto fx = testing::make_fixture(std::move(data));
    const auto e = fx->entry("s0", "U");
    std::vector<SubspaceData> series;
    std::vector<MajorityData> majority;
    collect_unit_candidates(e, fx->data.graph, series, majority);
    std::map<std::string, double> sums, all;
    for (const auto& s : series) {
      const auto key = std::string(to_string(s.subspace.mode)) + std::string(to_string(s.subspace.measure));
      if (s.subspace.all_objectives()) all[key] = s.impact;
      else sums[key] += s.impact;
    }
    for (const auto& [key, v] : all) CHECK(std::fabs(sums[key] - v) < 1e-12);
    CHECK(all["AllCount"] == 1.0);
  }
}

TEST_CASE("oracle equivalence on a seeded corpus (reduced permutations)") {
  std::mt19937_64 rng(8675309);
  DetectorConfig cfg;
  cfg.permutations = 199;
  oracle::Options o;
  o.permutations = 199;
  std::size_t compared = 0;
  for (int t = 0; t < 120; ++t) {
    const auto fx = testing::make_fixture(testing::random_unit_cohort(rng, 1 + rng() % 4, 1 + rng() % 8, 4));
    const auto e = fx->entry("s0", "U");
    const auto got = mine_top_k(e, fx->data.graph, cfg, 0);
    const auto want = oracle::enumerate(fx->data.records, fx->data.graph, "s0", "U", o, 0);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].id == want[i].id);
      CHECK(std::fabs(got[i].score - want[i].score) <= 1e-12);
      CHECK(std::fabs(got[i].impact - want[i].impact) <= 1e-12);
    }
    compared += got.size();
  }
  CHECK(compared > 100);
}
