#include <gtest/gtest.h>

#include "wsc/costmodel.hpp"
#include "wsc/errors.hpp"
#include "wsc/plan.hpp"
#include "wsc/workload.hpp"

using namespace wsc;

namespace {

CommOp p2p(DieId s, DieId d, double bytes, std::uint64_t payload = 0) {
  CommOp c;
  c.kind = CommKind::ReshardP2P;
  c.group = {s, d};
  c.bytes = bytes;
  c.payload = payload;
  return c;
}

std::shared_ptr<const WaferTopology> mesh(int r, int c) { return std::make_shared<const WaferTopology>(build_mesh(r, c)); }

ExecutionPlan plan_for(const ComputeGraph& g, std::shared_ptr<const WaferTopology> t, const ParallelConfig& c,
                       EvaluatorOptions opts = {}) {
  PlanEvaluator ev(std::move(t), opts);
  return ev.build(g, std::vector<ParallelConfig>(g.ops.size(), c), {});
}

}  // namespace

TEST(CompTime, SquareLinearAtPeak) {
  DieSpec die;
  EfficiencyParams eff;
  eff.compute_utilization = 1.0;
  double t = comp_time({2.147e9, 1e6, 1.0}, die, eff);
  EXPECT_NEAR(t, 1.193e-6, 1e-9);
  EXPECT_DOUBLE_EQ(t, 2.147e9 / 1800e12);
}

TEST(CompTime, ZeroFlops) { EXPECT_DOUBLE_EQ(comp_time({0, 0, 1.0}, DieSpec{}, EfficiencyParams{}), 0); }

TEST(CompTime, HalfUtilizationDoubles) {
  EfficiencyParams full, half;
  full.compute_utilization = 1.0;
  half.compute_utilization = 0.5;
  OpShard s{5e10, 1e6, 1.0};
  EXPECT_DOUBLE_EQ(comp_time(s, DieSpec{}, half), 2 * comp_time(s, DieSpec{}, full));
}

TEST(CompTime, HbmBoundWhenWorkingSetSpills) {
  DieSpec die;
  EfficiencyParams eff;
  OpShard s{1e6, 10e9, 1.0};  // 10 GB working set, tiny compute
  EXPECT_DOUBLE_EQ(comp_time(s, die, eff), 10e9 / die.hbm_bandwidth);
  OpShard small{1e6, 1e6, 1.0};
  EXPECT_DOUBLE_EQ(comp_time(small, die, eff), 1e6 / (die.peak_compute * eff.compute_utilization));
}

TEST(CompTime, ScaledDieIsSlower) {
  EfficiencyParams eff;
  OpShard s{1e12, 1e6, 0.75};
  OpShard f{1e12, 1e6, 1.0};
  EXPECT_DOUBLE_EQ(comp_time(s, DieSpec{}, eff), comp_time(f, DieSpec{}, eff) / 0.75);
}

TEST(TransferTimes, OneHopSixtyFourMegabytes) {
  auto t = build_mesh(1, 2);
  EfficiencyParams eff;
  eff.link_efficiency = 1.0;
  eff.message_overhead = 0;
  std::vector<CommOp> ops{p2p(0, 1, 64e6)};
  auto plan = init_routes(ops, t);
  auto tt = transfer_times(plan, link_loads(plan, t), t.link_spec(), eff);
  ASSERT_EQ(tt.size(), 1u);
  EXPECT_NEAR(tt[0], 16.0e-6 + 200e-9, 1e-15);
}

TEST(TransferTimes, TwoWayContentionDoublesBandwidthTerm) {
  auto t = build_mesh(1, 3);
  EfficiencyParams eff;
  eff.link_efficiency = 1.0;
  eff.message_overhead = 0;
  std::vector<CommOp> one{p2p(0, 1, 64e6)};
  std::vector<CommOp> two{p2p(0, 1, 64e6, 1), p2p(0, 2, 64e6, 2)};
  auto p1 = init_routes(one, t), p2 = init_routes(two, t);
  double lat = t.link_spec().latency;
  double a = transfer_times(p1, link_loads(p1, t), t.link_spec(), eff)[0];
  double b = transfer_times(p2, link_loads(p2, t), t.link_spec(), eff)[0];
  EXPECT_NEAR(b - lat, 2 * (a - lat), 1e-15);
  EXPECT_GT(b, 2 * a - 2 * lat);
}

TEST(TransferTimes, SingleMemberCollectiveIsFree) {
  auto t = build_mesh(2, 2);
  CommOp c;
  c.kind = CommKind::AllReduce;
  c.group = {3};
  c.bytes = 1e9;
  std::vector<CommOp> ops{c};
  auto plan = init_routes(ops, t);
  EXPECT_DOUBLE_EQ(transfer_times(plan, link_loads(plan, t), t.link_spec(), EfficiencyParams{})[0], 0);
}

TEST(TransferTimes, RingCollectives) {
  auto t = build_mesh(2, 2);
  EfficiencyParams eff;
  for (auto kind : {CommKind::AllReduce, CommKind::AllGather, CommKind::ReduceScatter}) {
    CommOp c;
    c.kind = kind;
    c.group = {0, 1, 3, 2};
    c.bytes = 8e6;
    std::vector<CommOp> ops{c};
    auto plan = init_routes(ops, t);
    double p = 4, rate = t.link_spec().bandwidth * eff.link_efficiency, lat = t.link_spec().latency;
    double ar = 2 * (p - 1) / p * c.bytes / rate + 2 * (p - 1) * lat;
    double expect = kind == CommKind::AllReduce ? ar : ar / 2;
    EXPECT_NEAR(transfer_times(plan, link_loads(plan, t), t.link_spec(), eff)[0], expect, 1e-15);
  }
}

TEST(StageCost, CommunicationBoundStall) {
  StageCost s{1e-3, 3e-3, 0};
  EXPECT_DOUBLE_EQ(s.t(), 3e-3);
  StageCost c{4e-3, 3e-3, 1e-3};
  EXPECT_DOUBLE_EQ(c.t(), 5e-3);
}

TEST(TotalCost, TwoOpChainMatchesClosedForm) {
  auto t = mesh(1, 2);
  auto g = build_linear_chain({{2, 1024, 1024, 1024}, {2, 1024, 1024, 1024}});
  ParallelConfig dp;
  dp.dp = 2;
  auto plan = plan_for(g, t, dp);
  const auto& r = plan.report;
  EfficiencyParams eff;
  const double peak = t->die_spec().peak_compute * eff.compute_utilization;
  const double rank_flops = 2.0 * 1 * 1024 * 1024 * 1024;  // per stage, per die
  const double comp = rank_flops / peak;
  const double grad_bytes = 1024.0 * 1024 * 2;
  const double rate = t->link_spec().bandwidth * eff.link_efficiency;
  const double allreduce = 2.0 * 1 / 2 * grad_bytes / rate + 2.0 * 1 * t->link_spec().latency;
  const double per_op = 3 * comp + allreduce;
  ASSERT_EQ(r.ops.size(), 2u);
  for (const auto& e : r.ops) {
    EXPECT_NEAR(e.t_intra, per_op, 1e-12);
    EXPECT_NEAR(e.collective, allreduce, 1e-15);
    EXPECT_DOUBLE_EQ(e.p2p, 0);
  }
  ASSERT_EQ(r.edges.size(), 1u);
  EXPECT_DOUBLE_EQ(r.edges[0].t_inter, 0);  // same layout on both sides
  EXPECT_NEAR(r.t_total, 2 * per_op, 1e-12);
  EXPECT_DOUBLE_EQ(r.tokens, 2.0 * 1024);
  EXPECT_DOUBLE_EQ(r.throughput, r.tokens / r.t_total);
}

TEST(TotalCost, ReshardShowsUpBetweenDifferentLayouts) {
  auto t = mesh(1, 4);
  auto g = build_linear_chain({{4, 256, 512, 512}, {4, 256, 512, 512}});
  PlanEvaluator ev(t);
  ParallelConfig dp;
  dp.dp = 4;
  ParallelConfig tt;
  tt.tatp = 4;
  auto plan = ev.build(g, {dp, tt}, {});
  EXPECT_GT(plan.report.edges[0].t_inter, 0);
  EXPECT_GT(plan.report.edges[0].link_bytes, 0);
}

TEST(TotalCost, AdditivityAndOverlapCeiling) {
  auto t = mesh(4, 8);
  auto cfg = model_preset("gpt3-6.7b");
  cfg.layers = 2;
  auto g = build_transformer_graph(cfg);
  auto plan = plan_for(g, t, parse_strategy("(4,1,1,8)"));
  const auto& r = plan.report;
  double sum = 0;
  for (const auto& e : r.ops) {
    sum += e.t_intra;
    double stage_sum = 0;
    for (const auto& s : e.stages) {
      EXPECT_GE(s.t(), std::max(s.comp, s.p2p));
      EXPECT_GE(s.t(), s.collective);
      stage_sum += s.t();
    }
    EXPECT_NEAR(e.t_intra, stage_sum, 1e-15 + 1e-12 * e.t_intra);
    EXPECT_GE(e.t_intra, std::max(e.comp, e.p2p) - 1e-15);
    EXPECT_GE(e.t_intra, e.collective);
  }
  for (const auto& e : r.edges) sum += e.t_inter;
  EXPECT_NEAR(r.t_total, sum, 1e-12 * r.t_total);
  EXPECT_NEAR(r.t_total, r.t_intra_sum + r.t_inter_sum, 1e-15);
}

TEST(TotalCost, IncompletePlanRejected) {
  auto t = mesh(1, 2);
  auto g = build_linear_chain({{2, 8, 8, 8}, {2, 8, 8, 8}});
  auto plan = plan_for(g, t, {});
  plan.ops.pop_back();
  EXPECT_THROW(total_cost(g, plan), InvalidArgument);
}

TEST(TotalCost, TatpStreamOverlapsCompute) {
  auto t = mesh(1, 4);
  auto g = build_linear_chain({{1, 64, 64, 64}});
  ParallelConfig tt;
  tt.tatp = 4;
  auto plan = plan_for(g, t, tt);
  const auto& fwd = plan.report.ops[0].stages[0];
  EXPECT_GT(fwd.p2p, fwd.comp);  // tiny GEMM: the stream dominates
  EXPECT_DOUBLE_EQ(fwd.t(), fwd.p2p + fwd.collective);
}

TEST(Memory, Gpt3OnOneDieIsOom) {
  auto t = mesh(1, 1);
  auto g = build_transformer_graph(model_preset("gpt3-6.7b"));
  auto plan = plan_for(g, t, {});
  const auto& m = plan.report.memory;
  double params = parameter_count(g);
  EXPECT_DOUBLE_EQ(m.weights, kBytesPerParam * params);
  EXPECT_GT(m.weights, 100e9);
  EXPECT_LT(m.weights, 110e9);
  EXPECT_TRUE(m.oom);
  EXPECT_DOUBLE_EQ(m.capacity, 72e9);
}

TEST(Memory, TatpWeightsAreOneOverN) {
  auto g = build_linear_chain({{4, 256, 1024, 1024}});
  auto one = plan_for(g, mesh(1, 1), {});
  for (int n : {2, 4, 8}) {
    ParallelConfig c;
    c.tatp = n;
    auto p = plan_for(g, mesh(1, n), c);
    EXPECT_DOUBLE_EQ(p.report.memory.weights * n, one.report.memory.weights) << n;
    for (double d : p.report.memory.per_die) EXPECT_LE(d, one.report.memory.per_die[0]);
  }
}

TEST(Memory, ShardedWeightsConserveTotal) {
  auto g = build_linear_chain({{4, 256, 1024, 1024}});
  ParallelConfig c;
  c.tp = 2;
  c.tatp = 4;
  auto p = plan_for(g, mesh(2, 4), c);
  const auto& l = p.ops[0]->layout;
  double sum = 0;
  for (int r = 0; r < l.rank_count(); ++r) sum += l.bytes(r, Role::Weight);
  EXPECT_DOUBLE_EQ(sum, 1024.0 * 1024 * 2);
}

TEST(Energy, LinkEnergyPerGigabyte) {
  auto g = build_linear_chain({{1, 8, 8, 8}});
  auto plan = plan_for(g, mesh(1, 1), {});
  CostReport r;
  r.traffic_bytes = 1e9;
  r.t_total = 1;
  auto e = energy(g, plan, r);
  EXPECT_NEAR(e.d2d_joules, 0.04, 1e-12);
  EXPECT_DOUBLE_EQ(e.compute_joules, 0);
  r.traffic_bytes = 2e9;
  EXPECT_DOUBLE_EQ(energy(g, plan, r).d2d_joules, 2 * e.d2d_joules);
}

TEST(Energy, NoCommunicationMeansComputeAndHbmOnly) {
  auto g = build_linear_chain({{2, 128, 256, 256}});
  auto plan = plan_for(g, mesh(1, 1), {});
  const auto& e = plan.report.energy;
  EXPECT_DOUBLE_EQ(plan.report.traffic_bytes, 0);
  EXPECT_DOUBLE_EQ(e.d2d_joules, 0);
  EXPECT_DOUBLE_EQ(e.joules, e.compute_joules + e.hbm_joules);
  EXPECT_DOUBLE_EQ(e.compute_joules, op_costs(g.ops[0]).training_flops() * 0.5e-12);
  EXPECT_DOUBLE_EQ(e.watts, e.joules / plan.report.t_total);
}

TEST(EfficiencyParams, RangesValidated) {
  EfficiencyParams e;
  e.compute_utilization = 0;
  EXPECT_THROW(e.validate(), std::exception);
  EfficiencyParams l;
  l.link_efficiency = 1.5;
  EXPECT_THROW(l.validate(), std::exception);
}
