#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "wsc/costmodel.hpp"
#include "wsc/routing.hpp"
#include "wsc/solver.hpp"
#include "wsc/tatp.hpp"
#include "wsc/workload.hpp"

using namespace wsc;

namespace {

std::shared_ptr<const WaferTopology> wafer() {
  static auto t = std::make_shared<const WaferTopology>(build_mesh(4, 8));
  return t;
}

void BM_StreamSchedule(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto s = generate_stream_schedule(n);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_StreamSchedule)->RangeMultiplier(2)->Range(2, 32);

void BM_VerifySchedule(benchmark::State& state) {
  auto s = generate_stream_schedule(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(verify_schedule(s));
}
BENCHMARK(BM_VerifySchedule)->RangeMultiplier(2)->Range(2, 32);

// Forward-stage routes of one layer's QKV projection under (4,1,1,8), re-optimized from XY.
void BM_OptimizeRoutes(benchmark::State& state) {
  auto g = build_transformer_graph(model_preset("gpt3-6.7b"));
  PlanEvaluator ev(wafer());
  auto plan = ev.build(g, std::vector<ParallelConfig>(g.ops.size(), parse_strategy("(4,1,1,8)")), {});
  std::vector<CommOp> ops;
  for (const auto& op : plan.ops)
    if (op && !op->routes[0].ops.empty()) {
      ops = op->routes[0].ops;
      break;
    }
  auto init = init_routes(ops, *wafer());
  for (auto _ : state) benchmark::DoNotOptimize(optimize_routes(init, *wafer()));
  state.counters["ops"] = static_cast<double>(ops.size());
}
BENCHMARK(BM_OptimizeRoutes)->Unit(benchmark::kMillisecond);

void BM_TotalCost(benchmark::State& state) {
  auto cfg = model_preset("gpt3-6.7b");
  cfg.layers = 2;
  auto g = build_transformer_graph(cfg);
  PlanEvaluator ev(wafer());
  auto plan = ev.build(g, std::vector<ParallelConfig>(g.ops.size(), parse_strategy("(4,1,1,8)")), {});
  for (auto _ : state) benchmark::DoNotOptimize(total_cost(g, plan));
}
BENCHMARK(BM_TotalCost)->Unit(benchmark::kMillisecond);

void BM_BuildPlan(benchmark::State& state) {
  auto cfg = model_preset("gpt3-6.7b");
  cfg.layers = 2;
  auto g = build_transformer_graph(cfg);
  const std::vector<ParallelConfig> cfgs(g.ops.size(), parse_strategy("(4,1,1,8)"));
  for (auto _ : state) {
    PlanEvaluator ev(wafer());  // fresh cache each time
    benchmark::DoNotOptimize(ev.build(g, cfgs, {}));
  }
}
BENCHMARK(BM_BuildPlan)->Unit(benchmark::kMillisecond);

void BM_DpSearch(benchmark::State& state) {
  auto t = std::make_shared<const WaferTopology>(build_mesh(2, 2));
  std::vector<Dims> dims(static_cast<std::size_t>(state.range(0)), Dims{4, 512, 1024, 1024});
  auto g = build_linear_chain(dims);
  auto cands = candidate_configs(4);
  for (auto _ : state) {
    PlanEvaluator ev(t);
    benchmark::DoNotOptimize(dp_search(g, ev, cands));
  }
}
BENCHMARK(BM_DpSearch)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
