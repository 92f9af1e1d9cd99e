#include <gtest/gtest.h>

#include <functional>

#include "wsc/errors.hpp"
#include "wsc/solver.hpp"
#include "wsc/workload.hpp"

using namespace wsc;

namespace {

std::shared_ptr<const WaferTopology> mesh(int r, int c) { return std::make_shared<const WaferTopology>(build_mesh(r, c)); }

// Every chain over `cands` under fixed genes, via full plan builds.
struct Exhaustive {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<ParallelConfig> chain;
  int evaluated = 0;
};

Exhaustive enumerate_chains(const ComputeGraph& g, PlanEvaluator& ev, const std::vector<ParallelConfig>& cands,
                            const PlacementGenes& genes = {}) {
  Exhaustive best;
  std::vector<ParallelConfig> chain(g.ops.size());
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == chain.size()) {
      ++best.evaluated;
      try {
        auto p = ev.build(g, chain, genes);
        if (p.report.t_total < best.cost) {
          best.cost = p.report.t_total;
          best.chain = chain;
        }
      } catch (const InvalidArgument&) {
      } catch (const NoRouteError&) {
      } catch (const TopologyMismatch&) {
      }
      return;
    }
    for (const auto& c : cands) {
      chain[i] = c;
      rec(i + 1);
    }
  };
  rec(0);
  return best;
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.name = "tiny";
  m.heads = 4;
  m.batch = 4;
  m.hidden_size = 256;
  m.layers = 1;
  m.seq_len = 128;
  return m;
}

}  // namespace

TEST(CandidateConfigs, ThirtyTwoDies) {
  auto c = candidate_configs(32);
  EXPECT_EQ(c.size(), 56u);  // 4 axes, exponents summing to 5: C(8,3)
  for (const auto& x : c) EXPECT_EQ(x.product(), 32);
  auto sorted = c;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
}

TEST(CandidateConfigs, Variants) {
  EXPECT_EQ(candidate_configs(1).size(), 1u);
  EXPECT_EQ(candidate_configs(4).size(), 10u);  // C(5,3)
  EXPECT_EQ(candidate_configs(4, false).size(), 1u + 4u + 10u);
  auto f = candidate_configs(4, true, 32, false, true);
  auto four = candidate_configs(4);
  auto with_dp = std::count_if(four.begin(), four.end(), [](const auto& x) { return x.dp > 1; });
  EXPECT_EQ(f.size(), 10u + static_cast<std::size_t>(with_dp));
  EXPECT_EQ(candidate_configs(4, true, 32, true).size(), 15u);  // 5 axes: C(6,4)
  EXPECT_THROW(candidate_configs(0), InvalidArgument);
}

TEST(DpSearch, MatchesExhaustiveOnThreeOpChain) {
  auto t = mesh(2, 2);
  auto g = build_linear_chain({{4, 256, 512, 1024}, {4, 256, 1024, 512}, {4, 256, 512, 512}});
  auto cands = candidate_configs(4);
  cands.resize(4);
  PlanEvaluator ev(t);
  auto ex = enumerate_chains(g, ev, cands);
  EXPECT_EQ(ex.evaluated, 64);
  auto r = dp_search(g, ev, cands);
  ASSERT_TRUE(r.found);
  EXPECT_NEAR(r.cost, ex.cost, 1e-12 * ex.cost);
  EXPECT_NEAR(ev.build(g, r.configs, {}).report.t_total, r.cost, 1e-12 * r.cost);
}

TEST(DpSearch, MatchesExhaustiveOnTransformerBlock) {
  auto t = mesh(2, 2);
  auto g = build_transformer_graph(tiny_model());
  std::vector<ParallelConfig> cands{parse_strategy("(4,1,1,1)"), parse_strategy("(1,4,1,1)"),
                                    parse_strategy("(1,1,1,4)")};
  PlanEvaluator ev(t);
  auto ex = enumerate_chains(g, ev, cands);
  auto r = dp_search(g, ev, cands);
  ASSERT_TRUE(r.found);
  EXPECT_NEAR(r.cost, ex.cost, 1e-12 * ex.cost);
}

TEST(DpSearch, PicksFirstListedAmongEqualCosts) {
  auto t = mesh(1, 2);
  auto g = build_linear_chain({{2, 64, 64, 64}});
  auto cands = candidate_configs(2);
  PlanEvaluator ev(t);
  for (int pass = 0; pass < 2; ++pass) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t first = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      double c = ev.build(g, {cands[i]}, {}).report.t_total;
      if (c < best) best = c, first = i;
    }
    auto r = dp_search(g, ev, cands);
    ASSERT_TRUE(r.found);
    EXPECT_EQ(r.configs[0], cands[first]);
    std::reverse(cands.begin(), cands.end());
  }
  // Exact duplicates: the first copy wins, which is the same config.
  std::vector<ParallelConfig> dup{cands[0], cands[0]};
  EXPECT_EQ(dp_search(g, ev, dup).configs[0], cands[0]);
}

TEST(DpSearch, SingleOpOnOneDieIsComputeOnly) {
  auto t = mesh(1, 1);
  auto g = build_linear_chain({{1, 1024, 1024, 1024}});
  auto r = dp_search(g, *t, candidate_configs(1));
  ASSERT_TRUE(r.found);
  EfficiencyParams eff;
  auto c = op_costs(g.ops[0]);
  double peak = t->die_spec().peak_compute * eff.compute_utilization;
  double expect = c.fwd_flops / peak + c.bwd_flops / peak + c.grad_flops / peak;
  EXPECT_NEAR(r.cost, expect, 1e-12 * expect);
}

TEST(DpSearch, EmptyInputs) {
  auto t = mesh(1, 2);
  ComputeGraph empty;
  auto r = dp_search(empty, *t, candidate_configs(2));
  EXPECT_TRUE(r.found);
  EXPECT_EQ(r.cost, 0);
  auto g = build_linear_chain({{2, 8, 8, 8}});
  EXPECT_THROW(dp_search(g, *t, {}), InvalidArgument);
}

TEST(DpSearch, NotFoundWhenNothingDivides) {
  auto t = mesh(1, 4);
  auto g = build_linear_chain({{3, 3, 3, 3}});
  std::vector<ParallelConfig> cands{parse_strategy("(4,1,1,1)"), parse_strategy("(1,1,1,4)")};
  EXPECT_FALSE(dp_search(g, *t, cands).found);
}

TEST(BruteForce, AgreesWithChainEnumeration) {
  auto t = mesh(2, 2);
  auto g = build_linear_chain({{4, 256, 512, 512}, {4, 256, 512, 512}});
  auto cands = candidate_configs(4);
  std::vector<PlacementGenes> genes{PlacementGenes{}};
  auto bf = brute_force(g, *t, cands, genes);
  EXPECT_EQ(bf.combinations, 100u);
  PlanEvaluator ev(t);
  auto ex = enumerate_chains(g, ev, cands);
  ASSERT_TRUE(bf.found);
  EXPECT_NEAR(bf.cost, ex.cost, 1e-12 * ex.cost);
}

TEST(BruteForce, CapAndEmptyGraph) {
  auto t = mesh(2, 2);
  auto g = build_linear_chain({{4, 64, 64, 64}, {4, 64, 64, 64}, {4, 64, 64, 64}});
  EXPECT_THROW(brute_force(g, *t, candidate_configs(4), std::vector<PlacementGenes>{{}}, {}, 999), CapExceeded);
  ComputeGraph empty;
  auto r = brute_force(empty, *t, candidate_configs(4));
  EXPECT_TRUE(r.found);
  EXPECT_EQ(r.cost, 0);
}

TEST(EnumerateGenes, DistinctAndPlaceable) {
  auto t = build_mesh(2, 2);
  auto cands = candidate_configs(4);
  auto genes = enumerate_genes(t, cands);
  ASSERT_FALSE(genes.empty());
  EXPECT_LE(genes.size(), 4096u);
  for (std::size_t i = 0; i < genes.size(); ++i)
    for (std::size_t j = i + 1; j < genes.size(); ++j) EXPECT_FALSE(genes[i] == genes[j]);
  EXPECT_EQ(enumerate_genes(t, cands, 2).size(), std::min<std::size_t>(2, genes.size()));
}

TEST(GaRefine, ZeroGenerationsReturnsInitial) {
  auto t = mesh(2, 2);
  auto g = build_linear_chain({{4, 256, 512, 512}, {4, 256, 512, 512}});
  PlanEvaluator ev(t);
  auto init = ev.build(g, {parse_strategy("(2,1,1,2)"), parse_strategy("(2,1,1,2)")}, {});
  RefineOptions ro;
  ro.ga.generations = 0;
  auto r = ga_refine(g, init, ev, ro);
  EXPECT_EQ(r.plan.report.t_total, init.report.t_total);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.evaluations, 0);
}

TEST(GaRefine, MonotoneDeterministicAndNoWorse) {
  auto t = mesh(4, 4);
  auto g = build_linear_chain({{8, 512, 1024, 1024}, {8, 512, 1024, 1024}});
  PlanEvaluator ev(t);
  auto init = ev.build(g, {parse_strategy("(4,1,1,4)"), parse_strategy("(4,1,1,4)")}, {});
  RefineOptions ro;
  ro.ga.generations = 6;
  ro.ga.population = 12;
  ro.ga.seed = 7;
  auto a = ga_refine(g, init, ev, ro);
  auto b = ga_refine(g, init, ev, ro);
  ASSERT_EQ(a.trace.size(), 7u);
  for (std::size_t i = 1; i < a.trace.size(); ++i) EXPECT_LE(a.trace[i].best_cost, a.trace[i - 1].best_cost);
  EXPECT_LE(a.plan.report.t_total, init.report.t_total);
  EXPECT_EQ(a.plan.report.t_total, b.plan.report.t_total);
  EXPECT_TRUE(a.plan.genes == b.plan.genes);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].best_cost, b.trace[i].best_cost);
}

TEST(GaRefine, FindsBestGenesOnSmallMesh) {
  auto t = mesh(2, 2);
  auto g = build_linear_chain({{4, 256, 512, 512}, {4, 256, 512, 512}});
  auto cands = candidate_configs(4);
  auto genes = enumerate_genes(*t, cands);
  PlanEvaluator ev(t);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& gn : genes) best = std::min(best, enumerate_chains(g, ev, cands, gn).cost);

  auto init = ev.build(g, dp_search(g, ev, cands).configs, {});
  RefineOptions ro;
  ro.candidates = cands;
  ro.ga.population = static_cast<int>(genes.size()) + 2;
  ro.ga.generations = 3;
  auto r = ga_refine(g, init, ev, ro);
  EXPECT_TRUE(r.dp_fitness);
  EXPECT_NEAR(r.plan.report.t_total, best, 1e-12 * best);
}

TEST(GaParams, Validation) {
  GAParams p;
  p.population = 1;
  EXPECT_THROW(p.validate(), ConfigError);
  GAParams q;
  q.mutation = 1.5;
  EXPECT_THROW(q.validate(), ConfigError);
  GAParams r;
  r.generations = -1;
  EXPECT_THROW(r.validate(), ConfigError);
}

TEST(Solve, SmallTransformerEndToEnd) {
  auto t = mesh(2, 2);
  auto g = build_transformer_graph(tiny_model());
  SolverOptions o;
  o.ga.generations = 4;
  o.ga.population = 8;
  auto r = solve(g, t, o);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(r.plan.complete(g));
  EXPECT_EQ(r.subgraphs, static_cast<int>(split_graph(g).size()));
  EXPECT_FALSE(r.budget_exhausted);
  // Never worse than the level-1 chain under default placement.
  PlanEvaluator ev(t);
  auto chain = dp_search(g, ev, candidate_configs(4));
  EXPECT_LE(r.plan.report.t_total, chain.cost * (1 + 1e-12));
  EXPECT_NEAR(total_cost(g, r.plan).t_total, r.plan.report.t_total, 1e-12 * r.plan.report.t_total);
}

TEST(Solve, MatchesBruteForceOnTinyInstance) {
  auto t = mesh(2, 2);
  auto g = build_linear_chain({{4, 512, 256, 256}, {4, 512, 256, 256}});
  auto bf = brute_force(g, *t, candidate_configs(4));
  SolverOptions o;
  o.ga.population = static_cast<int>(enumerate_genes(*t, candidate_configs(4)).size()) + 2;
  o.ga.generations = 3;
  auto r = solve(g, t, o);
  ASSERT_TRUE(bf.found);
  EXPECT_NEAR(r.plan.report.t_total, bf.cost, 1e-12 * bf.cost);
}

TEST(Solve, EmptyGraphIsFeasibleAndFree) {
  ComputeGraph empty;
  auto r = solve(empty, mesh(2, 2));
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.plan.report.t_total, 0);
}

TEST(Solve, OomReportsGap) {
  auto g = build_transformer_graph(model_preset("gpt3-6.7b"));
  SolverOptions o;
  o.refine = false;
  o.budget_seconds = 30;
  auto r = solve(g, mesh(1, 1), o);
  EXPECT_FALSE(r.feasible);
  EXPECT_GT(r.memory_gap, 0);
  EXPECT_FALSE(r.message.empty());
}

TEST(Solve, BudgetIsHonoured) {
  auto g = build_transformer_graph(tiny_model());
  SolverOptions o;
  o.budget_seconds = 0;
  auto r = solve(g, mesh(2, 2), o);
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_TRUE(r.plan.complete(g));
}
