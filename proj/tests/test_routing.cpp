#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>

#include "support/oracles.hpp"
#include "wsc/errors.hpp"
#include "wsc/routing.hpp"

using namespace wsc;

namespace {

CommOp p2p(DieId s, DieId d, double bytes, std::uint64_t payload = 0, int round = -1) {
  CommOp c;
  c.kind = CommKind::ReshardP2P;
  c.group = {s, d};
  c.bytes = bytes;
  c.payload = payload;
  c.round = round;
  return c;
}

bool same_cycle(std::vector<DieId> a, const std::vector<DieId>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a == b) return true;
    std::rotate(a.begin(), a.begin() + 1, a.end());
  }
  return false;
}

// Every monotone (minimal) path, by DFS.
void minimal_paths(const WaferTopology& t, DieId at, DieId dst, std::vector<DieId>& cur,
                   std::vector<std::vector<DieId>>& out) {
  if (at == dst) {
    out.push_back(cur);
    return;
  }
  Coord a = t.coord(at), d = t.coord(dst);
  std::vector<Coord> steps;
  if (a.col != d.col) steps.push_back({a.row, a.col + (d.col > a.col ? 1 : -1)});
  if (a.row != d.row) steps.push_back({a.row + (d.row > a.row ? 1 : -1), a.col});
  for (Coord c : steps) {
    cur.push_back(t.id(c));
    minimal_paths(t, t.id(c), dst, cur, out);
    cur.pop_back();
  }
}

int max_load(const WaferTopology& t, const std::vector<std::vector<DieId>>& paths) {
  std::map<std::pair<DieId, DieId>, int> load;
  int m = 0;
  for (const auto& p : paths)
    for (std::size_t i = 0; i + 1 < p.size(); ++i) m = std::max(m, ++load[{p[i], p[i + 1]}]);
  return m;
}

}  // namespace

TEST(InitRoutes, ContentionScenarioHasDoubleLoadedLinks) {
  auto t = build_mesh(4, 4);
  oracle::ContentionScenario sc;
  auto ops = sc.ops();
  auto plan = init_routes(ops, t);
  auto tm = link_loads(plan, t);
  EXPECT_EQ(tm.max_flows(), 2);
  auto hot = tm.most_congested();
  EXPECT_EQ(hot.flows, 2);
  // The stream hop 2->0 and 3->1 share channel 2->1.
  EXPECT_EQ(tm.flows_at(0, *t.link_between(2, 1)), 2);
  // Lowest-id tie-break.
  for (LinkId l = 0; l < hot.link; ++l) EXPECT_LT(tm.flows_at(0, l), 2);
}

TEST(InitRoutes, SingleOpTakesXy) {
  auto t = build_mesh(4, 4);
  std::vector<CommOp> ops{p2p(0, 10, 1e6)};
  auto plan = init_routes(ops, t);
  ASSERT_EQ(plan.flows.size(), 1u);
  EXPECT_EQ(plan.paths[0], path_links(t, xy_path(t, 0, 10)));
  EXPECT_EQ(link_loads(plan, t).max_flows(), 1);
}

TEST(InitRoutes, DisjointRowsShareNothing) {
  auto t = build_mesh(4, 4);
  std::vector<CommOp> ops{p2p(0, 3, 1e6), p2p(8, 11, 1e6)};
  auto tm = link_loads(init_routes(ops, t), t);
  EXPECT_EQ(tm.max_flows(), 1);
  EXPECT_EQ(tm.links_at(2), 0);
}

TEST(InitRoutes, RingCollectiveFollowsGroupOrder) {
  auto t = build_mesh(2, 2);
  CommOp c;
  c.kind = CommKind::AllReduce;
  c.group = {0, 1, 3, 2};
  c.bytes = 4e6;
  std::vector<CommOp> ops{c};
  auto plan = init_routes(ops, t);
  ASSERT_EQ(plan.flows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(plan.flows[i].src, c.group[i]);
    EXPECT_EQ(plan.flows[i].dst, c.group[(i + 1) % 4]);
    EXPECT_DOUBLE_EQ(plan.flows[i].bytes, 2.0 * 3 / 4 * 4e6);
  }
}

TEST(InitRoutes, FaultedEndpointHasNoRoute) {
  auto t = build_mesh(1, 3);
  t.disable_link(*t.link_between(1, 2));
  std::vector<CommOp> ops{p2p(0, 2, 1e6)};
  EXPECT_THROW(init_routes(ops, t), NoRouteError);
}

TEST(LinkLoads, EmptyIsZero) {
  auto t = build_mesh(2, 2);
  auto tm = link_loads(init_routes({}, t), t);
  EXPECT_EQ(tm.max_flows(), 0);
  EXPECT_DOUBLE_EQ(tm.total_bytes(), 0);
  EXPECT_EQ(tm.most_congested().link, -1);
}

TEST(LinkLoads, ThreeHopTransferConserved) {
  auto t = build_mesh(4, 4);
  std::vector<CommOp> ops{p2p(0, 3, 64e6)};
  auto tm = link_loads(init_routes(ops, t), t);
  for (auto [a, b] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{2, 3}})
    EXPECT_DOUBLE_EQ(tm.bytes_at(0, *t.link_between(a, b)), 64e6);
  EXPECT_DOUBLE_EQ(tm.total_bytes(), 3 * 64e6);
}

TEST(LinkLoads, CsvHasHeaderAndNonzeroCells) {
  auto t = build_mesh(1, 2);
  std::vector<CommOp> ops{p2p(0, 1, 5)};
  auto csv = link_loads(init_routes(ops, t), t).to_csv(t);
  EXPECT_EQ(csv, "round,link,src,dst,bytes,flows\n0," + std::to_string(*t.link_between(0, 1)) + ",0,1,5,1\n");
}

TEST(OptimizeRoutes, ContentionScenarioClears) {
  auto t = build_mesh(4, 4);
  oracle::ContentionScenario sc;
  auto ops = sc.ops();
  auto init = init_routes(ops, t);
  std::vector<OptimizerStep> trace;
  auto opt = optimize_routes(init, t, {}, &trace);
  auto tm = link_loads(opt, t);
  EXPECT_EQ(tm.max_flows(), 1);
  EXPECT_LE(opt.iterations, 10);
  EXPECT_DOUBLE_EQ(delivered_bytes(opt), delivered_bytes(init));
  EXPECT_TRUE(routes_valid(opt, t));
  // Two gather rings flip direction, the other two stay.
  EXPECT_TRUE(same_cycle(opt.ops[0].group, {1, 0, 4, 5}));
  EXPECT_TRUE(same_cycle(opt.ops[1].group, {2, 3, 7, 6}));
  EXPECT_TRUE(same_cycle(opt.ops[2].group, {8, 9, 13, 12}));
  EXPECT_TRUE(same_cycle(opt.ops[3].group, {11, 10, 14, 15}));
  int prev = link_loads(init, t).max_flows();
  for (const auto& s : trace) {
    EXPECT_LE(s.max_flows, prev);
    prev = s.max_flows;
  }
}

TEST(OptimizeRoutes, ContentionFreeIsFixedPoint) {
  auto t = build_mesh(4, 4);
  std::vector<CommOp> ops{p2p(0, 3, 1e6), p2p(8, 11, 1e6)};
  auto init = init_routes(ops, t);
  auto opt = optimize_routes(init, t);
  EXPECT_EQ(opt.iterations, 0);
  EXPECT_EQ(opt.paths, init.paths);
}

TEST(OptimizeRoutes, MulticastCountsPayloadOncePerEdge) {
  auto t = build_mesh(1, 4);
  std::vector<CommOp> ops{p2p(0, 2, 1e6, 42), p2p(0, 3, 1e6, 42)};
  auto init = init_routes(ops, t);
  EXPECT_EQ(link_loads(init, t).max_flows(), 2);
  EXPECT_DOUBLE_EQ(link_bytes(init), 5e6);
  auto opt = optimize_routes(init, t);
  EXPECT_EQ(link_loads(opt, t).max_flows(), 1);
  ASSERT_EQ(opt.trees.size(), 1u);
  EXPECT_DOUBLE_EQ(link_bytes(opt), 3e6);
  EXPECT_DOUBLE_EQ(delivered_bytes(opt), 2e6);
  EXPECT_TRUE(routes_valid(opt, t));
}

TEST(OptimizeRoutes, DifferentPayloadsAreNotMerged) {
  auto t = build_mesh(1, 4);
  std::vector<CommOp> ops{p2p(0, 2, 1e6, 1), p2p(0, 3, 1e6, 2)};
  auto opt = optimize_routes(init_routes(ops, t), t);
  EXPECT_TRUE(opt.trees.empty());
  EXPECT_EQ(link_loads(opt, t).max_flows(), 2);  // a 1x4 line has no detour
}

TEST(OptimizeRoutes, NoWorseThanBestSingleReroute) {
  auto t = build_mesh(3, 3);
  std::mt19937 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    int nflows = 2 + static_cast<int>(rng() % 5);
    std::vector<CommOp> ops;
    std::vector<std::vector<DieId>> xy;
    for (int i = 0; i < nflows; ++i) {
      DieId s = static_cast<DieId>(rng() % 9), d = static_cast<DieId>(rng() % 9);
      if (s == d) d = (d + 1) % 9;
      ops.push_back(p2p(s, d, 1e6, 1000 + static_cast<std::uint64_t>(i)));
      xy.push_back(xy_path(t, s, d).dies);
    }
    int best = max_load(t, xy);
    for (int f = 0; f < nflows; ++f) {
      std::vector<std::vector<DieId>> alts;
      std::vector<DieId> cur{ops[f].group[0]};
      minimal_paths(t, ops[f].group[0], ops[f].group[1], cur, alts);
      for (const auto& a : alts) {
        auto trial_paths = xy;
        trial_paths[f] = a;
        best = std::min(best, max_load(t, trial_paths));
      }
    }
    auto init = init_routes(ops, t);
    std::vector<OptimizerStep> trace;
    auto opt = optimize_routes(init, t, {}, &trace);
    int got = link_loads(opt, t).max_flows();
    EXPECT_LE(got, best) << "trial " << trial;
    EXPECT_LE(got, link_loads(init, t).max_flows());
    EXPECT_TRUE(routes_valid(opt, t));
    EXPECT_DOUBLE_EQ(delivered_bytes(opt), delivered_bytes(init));
    int prev = link_loads(init, t).max_flows();
    for (const auto& s : trace) {
      EXPECT_LE(s.max_flows, prev);
      prev = s.max_flows;
    }
  }
}

TEST(OptimizeRoutes, AvoidsDisabledLinks) {
  auto t = build_mesh(3, 3);
  t.disable_link(*t.link_between(0, 1));
  std::vector<CommOp> ops{p2p(0, 2, 1e6), p2p(3, 5, 1e6), p2p(0, 5, 1e6)};
  auto opt = optimize_routes(init_routes(ops, t), t);
  EXPECT_TRUE(routes_valid(opt, t));
  for (const auto& p : opt.paths)
    for (LinkId l : p) EXPECT_TRUE(t.link_enabled(l));
}

TEST(OptimizerParams, Validated) {
  OptimizerParams p;
  p.max_iter = 0;
  EXPECT_THROW(p.validate(), std::exception);
}
