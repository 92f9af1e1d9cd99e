#include "wsc/faults.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "wsc/errors.hpp"
#include "wsc/solver.hpp"

namespace wsc {

const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::Link: return "link";
    case FaultKind::Core: return "core";
    case FaultKind::Die: return "die";
  }
  return "?";
}

void FaultSpec::validate(const WaferTopology& topo) const {
  if (!(link_rate >= 0 && link_rate <= 1)) throw ConfigError("link_rate", "must be in [0, 1]");
  if (!(core_rate >= 0 && core_rate <= 1)) throw ConfigError("core_rate", "must be in [0, 1]");
  if (cores_per_die < 1) throw ConfigError("cores_per_die", "must be >= 1");
  for (LinkId l : links)
    if (!topo.link_exists(l)) throw ConfigError("links", "no channel " + std::to_string(l));
  for (const auto& [d, f] : core_fraction) {
    if (!topo.valid_die(d)) throw ConfigError("core_fraction", "no die " + std::to_string(d));
    if (!(f >= 0 && f <= 1)) throw ConfigError("core_fraction", "must be in [0, 1]");
  }
}

namespace {

std::string where(const WaferTopology& t, DieId d) {
  auto c = t.coord(d);
  return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

std::vector<char> reach(const WaferTopology& t, DieId from, bool reverse) {
  std::vector<char> seen(t.die_count(), 0);
  std::deque<DieId> q{from};
  seen[from] = 1;
  while (!q.empty()) {
    DieId d = q.front();
    q.pop_front();
    for (int dir = 0; dir < 4; ++dir) {
      auto nb = t.neighbor(d, static_cast<Dir>(dir));
      if (!nb || seen[*nb]) continue;
      auto l = reverse ? t.link_between(*nb, d) : t.link_between(d, *nb);
      if (!l || !t.link_enabled(*l)) continue;
      seen[*nb] = 1;
      q.push_back(*nb);
    }
  }
  return seen;
}

}  // namespace

DegradedTopology inject_faults(const WaferTopology& topo, const FaultSpec& spec) {
  spec.validate(topo);
  DegradedTopology out{topo, {}};
  WaferTopology& t = out.topology;
  FaultReport& rep = out.report;

  auto kill_link = [&](LinkId l) {
    if (!t.link_exists(l) || !t.link_enabled(l)) return;
    t.disable_link(l);
    rep.faults.push_back({FaultKind::Link, -1, l, 0, where(t, t.link_src(l)) + "->" + where(t, t.link_dst(l))});
  };
  for (LinkId l : spec.links) kill_link(l);
  if (spec.link_rate > 0) {
    auto und = topo.undirected_links();
    std::mt19937_64 rng(spec.seed);
    std::shuffle(und.begin(), und.end(), rng);
    auto count = static_cast<std::size_t>(std::llround(spec.link_rate * static_cast<double>(und.size())));
    for (std::size_t i = 0; i < count && i < und.size(); ++i) {
      kill_link(*t.link_between(und[i].first, und[i].second));
      kill_link(*t.link_between(und[i].second, und[i].first));
    }
  }

  // Per-core draws happen for every die in id order so rates nest.
  std::mt19937_64 core_rng(spec.seed ^ 0xC0FEull);
  std::uniform_real_distribution<double> u(0, 1);
  for (DieId d = 0; d < t.die_count(); ++d) {
    int failed = 0;
    for (int c = 0; c < spec.cores_per_die; ++c)
      if (u(core_rng) < spec.core_rate) ++failed;
    double frac = static_cast<double>(failed) / spec.cores_per_die;
    if (auto it = spec.core_fraction.find(d); it != spec.core_fraction.end()) frac = it->second;
    if (frac <= 0 || !t.die_enabled(d)) continue;
    if (frac >= 1) {
      t.disable_die(d);
      rep.faults.push_back({FaultKind::Die, d, -1, 1.0, where(t, d)});
    } else {
      t.set_compute_scale(d, 1.0 - frac);
      rep.faults.push_back({FaultKind::Core, d, -1, frac, where(t, d)});
    }
  }

  // Keep the largest strongly connected group of enabled dies.
  std::vector<int> comp(t.die_count(), -1);
  std::vector<std::vector<DieId>> comps;
  for (DieId d : t.enabled_dies()) {
    if (comp[d] >= 0) continue;
    auto f = reach(t, d, false), b = reach(t, d, true);
    comps.emplace_back();
    for (DieId e = 0; e < t.die_count(); ++e)
      if (f[e] && b[e] && t.die_enabled(e)) {
        comp[e] = static_cast<int>(comps.size()) - 1;
        comps.back().push_back(e);
      }
  }
  int keep = -1;
  for (int i = 0; i < static_cast<int>(comps.size()); ++i)
    if (keep < 0 || comps[i].size() > comps[keep].size()) keep = i;
  for (int i = 0; i < static_cast<int>(comps.size()); ++i) {
    if (i == keep) continue;
    for (DieId d : comps[i]) {
      t.disable_die(d);
      rep.faults.push_back({FaultKind::Die, d, -1, 0, where(t, d)});
    }
  }
  for (LinkId l = 0; l < t.link_slot_count(); ++l)
    if (t.link_exists(l) && !t.link_enabled(l)) ++rep.disabled_links;
  rep.enabled_dies = t.enabled_die_count();
  rep.disabled_dies = t.die_count() - rep.enabled_dies;
  rep.feasible = rep.enabled_dies > 0;
  return out;
}

namespace {

// Separable weights u[a] * v[b] <= s(a, b), pushed up by alternating fits.
void fit_separable(const std::vector<std::array<int, 2>>& idx, const std::vector<double>& s, std::vector<double>& u,
                   std::vector<double>& v) {
  std::fill(u.begin(), u.end(), 1.0);
  std::fill(v.begin(), v.end(), 1.0);
  for (int it = 0; it < 8; ++it) {
    std::fill(v.begin(), v.end(), std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < idx.size(); ++r) v[idx[r][1]] = std::min(v[idx[r][1]], s[r] / u[idx[r][0]]);
    std::fill(u.begin(), u.end(), std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < idx.size(); ++r) u[idx[r][0]] = std::min(u[idx[r][0]], s[r] / v[idx[r][1]]);
  }
}

bool flat(const std::vector<double>& w) {
  for (double x : w)
    if (std::abs(x - w.front()) > 1e-12 * std::abs(w.front())) return false;
  return true;
}

}  // namespace

SplitWeights rebalance_splits(const OpPlan& p, const WaferTopology& degraded) {
  const ParallelConfig& cfg = p.cfg;
  const int P = cfg.product();
  std::vector<double> s(P);
  for (int r = 0; r < P; ++r) s[r] = degraded.compute_scale(p.assignment.rank_to_die[r]);
  if (flat(s)) return {};
  for (double x : s)
    if (!(x > 0)) throw InvalidArgument("rank placed on a die with no compute");

  const bool by_k = is_gemm(p.op.kind) && p.layout.choice == TransferChoice::Input && cfg.tatp > 1;
  std::vector<std::array<int, 2>> idx(P);
  for (int r = 0; r < P; ++r) {
    auto c = rank_coords(cfg, r);
    int m_index = (c[2] * cfg.cp + c[3]) * cfg.tatp + c[4];
    idx[r] = {c[0], by_k ? c[4] : m_index};
  }
  std::vector<double> b(cfg.dp), second(by_k ? cfg.tatp : cfg.m_parts());
  fit_separable(idx, s, b, second);
  SplitWeights w;
  if (cfg.dp > 1 && !flat(b)) w.b = b;
  if (second.size() > 1 && !flat(second)) (by_k ? w.k : w.m) = second;
  return w;
}

RecoverResult recover_plan(const ComputeGraph& g, const ExecutionPlan& plan,
                           std::shared_ptr<const WaferTopology> degraded, const RecoverOptions& opts) {
  if (!degraded) throw InvalidArgument("recover_plan needs a topology");
  if (!plan.complete(g)) throw InvalidArgument("plan does not cover the graph");
  RecoverResult res;
  if (degraded->enabled_die_count() == 0) {
    res.message = "no usable dies";
    return res;
  }
  PlanEvaluator ev(degraded, opts.eval);
  const auto configs = plan.configs();

  auto attempt = [&](const PlacementGenes& genes) -> bool {
    try {
      res.plan = ev.build(g, configs, genes);
      res.ok = true;
      if (opts.rebalance) {
        // Integer slices can make a rebalanced split worse than the uniform one.
        std::vector<SplitWeights> splits(g.ops.size());
        bool any = false;
        for (std::size_t i = 0; i < g.ops.size(); ++i) {
          splits[i] = rebalance_splits(*res.plan.ops[i], *degraded);
          any = any || !splits[i].uniform();
        }
        if (any) {
          try {
            ExecutionPlan p = ev.build(g, configs, genes, splits);
            if (p.report.t_total < res.plan.report.t_total) res.plan = std::move(p);
          } catch (const InvalidArgument&) {
            // slices too small to split unevenly; keep the uniform plan
          }
        }
      }
      return true;
    } catch (const InvalidArgument& e) {
      res.message = e.what();
    } catch (const NoRouteError& e) {
      res.message = e.what();
    } catch (const TopologyMismatch& e) {
      res.message = e.what();
    }
    return false;
  };

  if (attempt(plan.genes)) return res;
  PlacementGenes snake = plan.genes;
  snake.snake_list = true;
  snake.origin_row = snake.origin_col = 0;
  res.replaced = true;
  if (attempt(snake)) return res;

  // Configs no longer fit: search again on what is left of the mesh.
  SolverOptions so;
  so.eval = opts.eval;
  so.refine = false;
  so.budget_seconds = opts.budget_seconds;
  int usable = 1;
  while (usable * 2 <= degraded->enabled_die_count()) usable *= 2;
  so.candidates = candidate_configs(usable);
  try {
    SolveResult sr = solve(g, degraded, so);
    res.plan = std::move(sr.plan);
    res.ok = sr.feasible;
    res.message = sr.feasible ? "re-planned on " + std::to_string(degraded->enabled_die_count()) + " dies"
                              : sr.message;
  } catch (const std::exception& e) {
    res.ok = false;
    res.message = e.what();
  }
  return res;
}

bool plan_fits(const ExecutionPlan& plan, const WaferTopology& topo) {
  auto routes_ok = [&](const RoutePlan& r) {
    for (const auto& path : r.paths)
      for (LinkId l : path)
        if (!topo.link_enabled(l)) return false;
    return true;
  };
  for (const auto& op : plan.ops) {
    if (!op) return false;
    for (DieId d : op->assignment.rank_to_die)
      if (!topo.die_enabled(d) || !(topo.compute_scale(d) > 0)) return false;
    for (const auto& r : op->routes)
      if (!routes_ok(r)) return false;
  }
  for (const auto& e : plan.edges) {
    if (!e) return false;
    for (const auto& r : e->routes)
      if (!routes_ok(r)) return false;
  }
  return true;
}

std::vector<SweepPoint> fault_sweep(const ComputeGraph& g, const ExecutionPlan& healthy, const WaferTopology& topo,
                                    FaultKind kind, const std::vector<double>& rates, std::uint64_t seed,
                                    const RecoverOptions& opts) {
  if (kind == FaultKind::Die) throw InvalidArgument("sweep over link or core faults only");
  const std::size_t n = rates.size();
  std::vector<SweepPoint> out(n);
  std::vector<std::shared_ptr<const WaferTopology>> degraded(n);
  std::vector<std::optional<ExecutionPlan>> plans(n);
  for (std::size_t i = 0; i < n; ++i) {
    FaultSpec fs;
    fs.seed = seed;
    (kind == FaultKind::Link ? fs.link_rate : fs.core_rate) = rates[i];
    auto deg = inject_faults(topo, fs);
    out[i].rate = rates[i];
    out[i].enabled_dies = deg.report.enabled_dies;
    out[i].disabled_links = deg.report.disabled_links;
    degraded[i] = std::make_shared<const WaferTopology>(std::move(deg.topology));
    auto rec = recover_plan(g, healthy, degraded[i], opts);
    out[i].message = rec.message;
    if (rec.ok) plans[i] = std::move(rec.plan);
  }

  // Highest rate first, so a carried plan can keep travelling downwards.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rates[a] > rates[b]; });
  std::optional<ExecutionPlan> carry;
  for (std::size_t i : order) {
    if (carry && plan_fits(*carry, *degraded[i])) {
      ExecutionPlan p = *carry;
      p.topology = degraded[i];
      p.report = total_cost(g, p);
      if (!p.report.memory.oom && (!plans[i] || p.report.t_total < plans[i]->report.t_total)) {
        plans[i] = std::move(p);
        out[i].carried = true;
        out[i].message = "plan from a higher fault rate";
      }
    }
    if (plans[i]) carry = plans[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!plans[i]) continue;
    const CostReport& r = plans[i]->report;
    out[i].ok = true;
    out[i].t_total = r.t_total;
    out[i].throughput = r.throughput;
    out[i].normalized = r.t_total > 0 ? healthy.report.t_total / r.t_total : 1.0;
  }
  return out;
}

}  // namespace wsc
