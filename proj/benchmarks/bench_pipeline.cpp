#include <benchmark/benchmark.h>

#include "learnstory/aggregation.hpp"
#include "learnstory/cache.hpp"
#include "learnstory/config.hpp"
#include "learnstory/insights.hpp"
#include "learnstory/pipeline.hpp"
#include "learnstory/qa.hpp"
#include "learnstory/synth.hpp"

using namespace learnstory;

namespace {

struct LoadFixture {
  SynthOutput data;
  EngineConfig config;
  std::string student;

  explicit LoadFixture(std::size_t students)
      : data(synthesize_load(2024, students, 10, 12)), student(data.records.front().student_id) {}

  AggregationContext context() const {
    const auto hash = inputs_hash(data.graph, data.records, config.aggregation_fingerprint());
    return make_aggregation_context(data.graph, data.records, config.scheme_options(), hash, config.cohort_scope);
  }
};

void BM_AggregationContext(benchmark::State& state) {
  const LoadFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(f.context());
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.data.records.size()));
}
BENCHMARK(BM_AggregationContext)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_CacheEntry(benchmark::State& state) {
  const LoadFixture f(200);
  const auto ctx = f.context();
  for (auto _ : state) benchmark::DoNotOptimize(build_cache_entry(ctx, f.student, f.data.report_unit));
}
BENCHMARK(BM_CacheEntry)->Unit(benchmark::kMillisecond);

void BM_MineTopK(benchmark::State& state) {
  const LoadFixture f(200);
  const auto entry = build_cache_entry(f.context(), f.student, f.data.report_unit);
  auto cfg = f.config.detector();
  cfg.permutations = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mine_top_k(entry, f.data.graph, cfg));
}
BENCHMARK(BM_MineTopK)->Arg(199)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_GenerateReport(benchmark::State& state) {
  const LoadFixture f(200);
  const auto entry = build_cache_entry(f.context(), f.student, f.data.report_unit);
  TemplateBackend backend;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_report(entry, f.data.graph, f.config, backend, "2025-01-01T00:00:00Z"));
  }
}
BENCHMARK(BM_GenerateReport)->Unit(benchmark::kMillisecond);

void BM_Answer(benchmark::State& state) {
  const LoadFixture f(200);
  const auto entry = build_cache_entry(f.context(), f.student, f.data.report_unit);
  TemplateBackend backend;
  const auto report = generate_report(entry, f.data.graph, f.config, backend, "2025-01-01T00:00:00Z");
  QAContext ctx;
  ctx.report = &report;
  ctx.entry = &entry;
  ctx.graph = &f.data.graph;
  const QARequest request{"r", {"stage:S9"}, "How do I compare to the class?"};
  for (auto _ : state) benchmark::DoNotOptimize(answer(request, ctx));
}
BENCHMARK(BM_Answer)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
