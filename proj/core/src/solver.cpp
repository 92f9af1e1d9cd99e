#include "wsc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "wsc/errors.hpp"

namespace wsc {

void GAParams::validate() const {
  if (population < 2) throw ConfigError("population", "must be >= 2");
  if (generations < 0) throw ConfigError("generations", "must be >= 0");
  auto rate = [](double v, const char* f) {
    if (!(v >= 0 && v <= 1)) throw ConfigError(f, "must be in [0, 1]");
  };
  rate(crossover, "crossover");
  rate(mutation, "mutation");
  rate(elite, "elite");
}

std::vector<ParallelConfig> candidate_configs(int dies, bool exact_product, int max_degree, bool with_cp,
                                              bool with_fsdp) {
  if (dies < 1) throw InvalidArgument("die count must be positive");
  std::vector<int> pw;
  for (int p = 1; p <= max_degree && p <= dies; p *= 2) pw.push_back(p);
  std::vector<ParallelConfig> out;
  for (int dp : pw)
    for (int tp : pw)
      for (int sp : pw)
        for (int cp : with_cp ? pw : std::vector<int>{1})
          for (int tatp : pw) {
            long long prod = 1LL * dp * tp * sp * cp * tatp;
            if (prod > dies || dies % prod != 0) continue;
            if (exact_product && prod != dies) continue;
            for (int f = 0; f < (with_fsdp && dp > 1 ? 2 : 1); ++f) {
              ParallelConfig c;
              c.dp = dp;
              c.tp = tp;
              c.sp = sp;
              c.cp = cp;
              c.tatp = tatp;
              c.fsdp = f == 1;
              out.push_back(c);
            }
          }
  return out;
}

namespace {

// Empty when no config can be placed under these genes.
std::string gene_signature(const WaferTopology& topo, const std::vector<ParallelConfig>& configs,
                           const PlacementGenes& g) {
  std::string sig;
  bool any = false;
  for (const auto& c : configs) {
    try {
      sig += assign_groups(topo, c, g).signature();
      any = true;
    } catch (const InvalidArgument&) {
      sig += "x";
    }
    sig += ';';
  }
  bool streams = std::any_of(configs.begin(), configs.end(), [](const ParallelConfig& c) { return c.tatp > 1; });
  if (!any) return {};
  if (streams) sig += std::to_string(static_cast<int>(g.transfer));
  return sig;
}

}  // namespace

std::vector<PlacementGenes> enumerate_genes(const WaferTopology& topo, const std::vector<ParallelConfig>& configs,
                                            std::size_t limit) {
  std::vector<Axis> live;
  for (int a = 0; a < kAxisCount; ++a)
    for (const auto& c : configs)
      if (c.degree(static_cast<Axis>(a)) > 1) {
        live.push_back(static_cast<Axis>(a));
        break;
      }
  int max_exp = 0;
  while ((1 << (max_exp + 1)) <= topo.rows()) ++max_exp;
  bool partial = std::any_of(configs.begin(), configs.end(),
                             [&](const ParallelConfig& c) { return c.product() < topo.enabled_die_count(); });
  bool streams = std::any_of(configs.begin(), configs.end(), [](const ParallelConfig& c) { return c.tatp > 1; });

  // Axis orders that differ in the relative order of live axes.
  std::vector<std::optional<AxisOrder>> orders{std::nullopt};
  {
    AxisOrder perm = kDefaultAxisOrder;
    std::sort(perm.begin(), perm.end());
    std::set<std::vector<Axis>> seen;
    do {
      std::vector<Axis> rel;
      for (Axis a : perm)
        if (std::find(live.begin(), live.end(), a) != live.end()) rel.push_back(a);
      if (seen.insert(rel).second) orders.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  std::vector<std::pair<int, int>> origins{{0, 0}};
  if (partial)
    for (int r = 0; r < topo.rows(); ++r)
      for (int c = 0; c < topo.cols(); ++c)
        if (r || c) origins.emplace_back(r, c);
  std::vector<TransferOverride> transfers{TransferOverride::Auto};
  if (streams) transfers = {TransferOverride::Auto, TransferOverride::Weight, TransferOverride::Input};

  const int E = static_cast<int>(live.size());
  long long exp_combos = 1;
  for (int i = 0; i < E; ++i) exp_combos *= max_exp + 2;

  std::vector<PlacementGenes> out;
  std::set<std::string> seen;
  for (bool snake : {false, true})
    for (const auto& [orow, ocol] : origins)
      for (const auto& ord : orders)
        for (long long ec = 0; ec < exp_combos; ++ec)
          for (TransferOverride tr : transfers) {
            PlacementGenes g;
            g.snake_list = snake;
            g.origin_row = orow;
            g.origin_col = ocol;
            g.axis_order = ord;
            g.transfer = tr;
            long long x = ec;
            for (int i = 0; i < E; ++i) {
              g.row_exp[static_cast<int>(live[i])] = static_cast<int>(x % (max_exp + 2)) - 1;
              x /= max_exp + 2;
            }
            std::string sig = gene_signature(topo, configs, g);
            if (sig.empty() || !seen.insert(sig).second) continue;
            out.push_back(g);
            if (out.size() >= limit) return out;
          }
  return out;
}

// ---- dynamic programming --------------------------------------------------------

namespace {

struct DpEntry {
  std::vector<int> key;
  double cost = 0;
  int parent = -1;
  int cfg = -1;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

ChainResult dp_search(const ComputeGraph& g, PlanEvaluator& ev, const std::vector<ParallelConfig>& candidates,
                      const PlacementGenes& genes, double memory_weight) {
  if (candidates.empty()) throw InvalidArgument("empty candidate config set");
  ChainResult res;
  const int n = static_cast<int>(g.ops.size());
  if (n == 0) {
    res.cost = 0;
    res.found = true;
    return res;
  }
  const int C = static_cast<int>(candidates.size());
  std::vector<std::vector<const OpEval*>> evals(n, std::vector<const OpEval*>(C, nullptr));
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < C; ++c) {
      try {
        evals[i][c] = &ev.op(g.ops[i], candidates[c], genes);
      } catch (const InvalidArgument&) {
      } catch (const NoRouteError&) {
      } catch (const TopologyMismatch&) {
      }
    }

  std::vector<int> last_use(n, -1);
  std::vector<std::vector<OpId>> preds(n);
  for (const auto& [p, c] : g.edges) {
    last_use[p] = std::max(last_use[p], c);
    preds[c].push_back(p);
  }
  // One representative eval per output class, for reshard lookups.
  std::unordered_map<int, const OpEval*> by_out;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < C; ++c)
      if (evals[i][c]) by_out.try_emplace(evals[i][c]->out_class, evals[i][c]);

  std::vector<OpId> live_prev;  // producers live before op i, ascending
  std::vector<std::vector<DpEntry>> layers(n);
  std::vector<DpEntry> prev{DpEntry{}};
  for (int i = 0; i < n; ++i) {
    std::vector<OpId> live_next;
    for (OpId j : live_prev)
      if (last_use[j] > i) live_next.push_back(j);
    if (last_use[i] > i) live_next.push_back(i);
    std::vector<int> pred_slot;
    for (OpId p : preds[i]) {
      auto it = std::find(live_prev.begin(), live_prev.end(), p);
      if (it == live_prev.end()) throw InternalError("predecessor not live");
      pred_slot.push_back(static_cast<int>(it - live_prev.begin()));
    }
    std::map<std::vector<int>, int> index;
    std::vector<DpEntry>& cur = layers[i];
    // Cheapest states first so the bound below prunes early; stable to keep
    // the first-listed tie-break.
    std::vector<int> order(prev.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return prev[a].cost < prev[b].cost; });
    std::vector<int> key;
    for (int s : order) {
      const DpEntry& st = prev[s];
      if (st.cost == kInf) continue;
      for (int c = 0; c < C; ++c) {
        const OpEval* e = evals[i][c];
        if (!e) continue;
        double cost = st.cost + e->cost.t_intra + memory_weight * e->memory;
        key.clear();
        for (OpId j : live_next) {
          if (j == i) {
            key.push_back(e->out_class);
          } else {
            key.push_back(st.key[std::find(live_prev.begin(), live_prev.end(), j) - live_prev.begin()]);
          }
        }
        auto found = index.find(key);
        if (found != index.end()) {
          // Reshard costs are >= their bounds; skip transitions that cannot win.
          double lb = cost;
          for (int slot : pred_slot) lb += ev.inter_lower_bound(*by_out.at(st.key[slot]), *e);
          if (lb >= cur[found->second].cost) continue;
        }
        for (int slot : pred_slot) cost += ev.inter(*by_out.at(st.key[slot]), *e);
        if (found == index.end()) {
          index.emplace(key, static_cast<int>(cur.size()));
          cur.push_back(DpEntry{key, cost, s, c});
        } else if (auto it = found; cost < cur[it->second].cost) {
          cur[it->second].cost = cost;
          cur[it->second].parent = s;
          cur[it->second].cfg = c;
        }
      }
    }
    if (cur.empty()) return res;
    prev = cur;
    live_prev = std::move(live_next);
  }
  int best = 0;
  for (int s = 1; s < static_cast<int>(prev.size()); ++s)
    if (prev[s].cost < prev[best].cost) best = s;
  res.configs.resize(n);
  std::vector<int> chosen(n);
  for (int i = n - 1, s = best; i >= 0; --i) {
    chosen[i] = layers[i][s].cfg;
    s = layers[i][s].parent;
  }
  double t = 0;
  for (int i = 0; i < n; ++i) {
    res.configs[i] = candidates[chosen[i]];
    t += evals[i][chosen[i]]->cost.t_intra;
  }
  for (const auto& [p, c] : g.edges) t += ev.inter(*evals[p][chosen[p]], *evals[c][chosen[c]]);
  res.cost = t;
  res.found = true;
  return res;
}

ChainResult dp_search(const ComputeGraph& g, const WaferTopology& topo, const std::vector<ParallelConfig>& candidates,
                      const EvaluatorOptions& opts) {
  PlanEvaluator ev(std::make_shared<const WaferTopology>(topo), opts);
  return dp_search(g, ev, candidates);
}

// ---- brute force ----------------------------------------------------------------

BruteForceResult brute_force(const ComputeGraph& g, const WaferTopology& topo,
                             const std::vector<ParallelConfig>& candidates,
                             std::optional<std::vector<PlacementGenes>> genes, const EvaluatorOptions& opts,
                             std::size_t cap) {
  BruteForceResult res;
  auto tp = std::make_shared<const WaferTopology>(topo);
  PlanEvaluator ev(tp, opts);
  if (g.ops.empty()) {
    res.plan.topology = tp;
    res.plan.eff = opts.eff;
    res.plan.report = total_cost(g, res.plan);
    res.cost = 0;
    res.found = true;
    res.combinations = 1;
    return res;
  }
  if (candidates.empty()) throw InvalidArgument("empty candidate config set");
  std::vector<PlacementGenes> gv = genes ? *genes : enumerate_genes(topo, candidates);
  if (gv.empty()) gv.push_back({});
  const std::size_t n = g.ops.size();
  const std::size_t C = candidates.size();
  double combos = static_cast<double>(gv.size());
  for (std::size_t i = 0; i < n; ++i) combos *= static_cast<double>(C);
  if (combos > static_cast<double>(cap))
    throw CapExceeded("brute force needs " + std::to_string(static_cast<long long>(combos)) +
                      " combinations, cap is " + std::to_string(cap));
  res.combinations = static_cast<std::size_t>(combos);
  std::vector<ParallelConfig> chain(n);
  for (const auto& genes_i : gv) {
    std::vector<std::size_t> idx(n, 0);
    while (true) {
      for (std::size_t i = 0; i < n; ++i) chain[i] = candidates[idx[i]];
      try {
        ExecutionPlan p = ev.build(g, chain, genes_i);
        if (!p.report.memory.oom && p.report.t_total < res.cost) {
          res.cost = p.report.t_total;
          res.plan = std::move(p);
          res.found = true;
        }
      } catch (const InvalidArgument&) {
      } catch (const NoRouteError&) {
      } catch (const TopologyMismatch&) {
      }
      std::size_t k = n;
      while (k > 0) {
        --k;
        if (++idx[k] < C) break;
        idx[k] = 0;
        if (k == 0) {
          k = n + 1;
          break;
        }
      }
      if (k == n + 1) break;
    }
  }
  return res;
}

// ---- genetic refinement ---------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

struct GeneSpace {
  int max_exp = 0;
  int rows = 1;
  int cols = 1;
};

AxisOrder random_order(std::mt19937_64& rng) {
  AxisOrder o = kDefaultAxisOrder;
  std::shuffle(o.begin(), o.end(), rng);
  return o;
}

PlacementGenes random_genes(std::mt19937_64& rng, const GeneSpace& sp) {
  PlacementGenes g;
  std::uniform_int_distribution<int> coin(0, 1);
  if (coin(rng)) g.axis_order = random_order(rng);
  std::uniform_int_distribution<int> ex(-1, sp.max_exp);
  for (int& e : g.row_exp) e = ex(rng);
  g.snake_list = std::uniform_int_distribution<int>(0, 3)(rng) == 0;
  g.transfer = static_cast<TransferOverride>(std::uniform_int_distribution<int>(0, 2)(rng));
  return g;
}

PlacementGenes crossover(const PlacementGenes& a, const PlacementGenes& b, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 1);
  PlacementGenes c = a;
  if (coin(rng)) c.axis_order = b.axis_order;
  for (int i = 0; i < kAxisCount; ++i)
    if (coin(rng)) c.row_exp[i] = b.row_exp[i];
  if (coin(rng)) {
    c.origin_row = b.origin_row;
    c.origin_col = b.origin_col;
  }
  if (coin(rng)) c.snake_list = b.snake_list;
  if (coin(rng)) c.transfer = b.transfer;
  return c;
}

void mutate(PlacementGenes& g, double rate, std::mt19937_64& rng, const GeneSpace& sp) {
  std::uniform_real_distribution<double> u(0, 1);
  if (u(rng) < rate) {
    if (g.axis_order && u(rng) < 0.5) {
      auto& o = *g.axis_order;
      std::uniform_int_distribution<int> pos(0, kAxisCount - 1);
      std::swap(o[pos(rng)], o[pos(rng)]);
    } else if (g.axis_order) {
      g.axis_order.reset();
    } else {
      g.axis_order = random_order(rng);
    }
  }
  std::uniform_int_distribution<int> ex(-1, sp.max_exp);
  for (int& e : g.row_exp)
    if (u(rng) < rate) e = ex(rng);
  if (u(rng) < rate) {
    g.origin_row = std::uniform_int_distribution<int>(0, sp.rows - 1)(rng);
    g.origin_col = std::uniform_int_distribution<int>(0, sp.cols - 1)(rng);
  }
  if (u(rng) < rate) g.snake_list = !g.snake_list;
  if (u(rng) < rate) g.transfer = static_cast<TransferOverride>(std::uniform_int_distribution<int>(0, 2)(rng));
}

}  // namespace

RefineResult ga_refine(const ComputeGraph& g, const ExecutionPlan& initial, PlanEvaluator& ev,
                       const RefineOptions& opts) {
  opts.ga.validate();
  RefineResult res;
  res.plan = initial;
  const auto t0 = Clock::now();
  if (opts.ga.generations == 0 || g.ops.empty()) return res;
  const auto chain = initial.configs();
  const bool dp_mode = !opts.candidates.empty() && g.ops.size() * opts.candidates.size() <= opts.dp_fitness_limit;
  res.dp_fitness = dp_mode;

  const WaferTopology& topo = ev.topology();
  GeneSpace space;
  space.rows = topo.rows();
  space.cols = topo.cols();
  while ((1 << (space.max_exp + 1)) <= topo.rows()) ++space.max_exp;

  struct Fit {
    double cost = kInf;
    std::vector<ParallelConfig> configs;
  };
  std::map<std::string, Fit> memo;
  auto fitness = [&](const PlacementGenes& genes) -> const Fit& {
    std::string key = genes.key();
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    ++res.evaluations;
    Fit f;
    try {
      std::vector<ParallelConfig> cfgs = chain;
      if (dp_mode) {
        auto r = dp_search(g, ev, opts.candidates, genes);
        if (r.found) cfgs = r.configs;
      }
      ExecutionPlan p = ev.build(g, cfgs, genes);
      if (!p.report.memory.oom) f.cost = p.report.t_total;
      f.configs = std::move(cfgs);
    } catch (const InvalidArgument&) {
    } catch (const NoRouteError&) {
    } catch (const TopologyMismatch&) {
    }
    return memo.emplace(std::move(key), std::move(f)).first->second;
  };

  std::mt19937_64 rng(opts.ga.seed);
  const int P = opts.ga.population;
  std::vector<PlacementGenes> pop{initial.genes};
  // Seed with distinct effective gene vectors, then random ones.
  {
    std::vector<ParallelConfig> cfgs = dp_mode ? opts.candidates : chain;
    std::sort(cfgs.begin(), cfgs.end());
    cfgs.erase(std::unique(cfgs.begin(), cfgs.end()), cfgs.end());
    if (topo.die_count() <= 16) {
      for (auto& gn : enumerate_genes(topo, cfgs, static_cast<std::size_t>(P))) {
        if (static_cast<int>(pop.size()) >= P) break;
        if (!(gn == initial.genes)) pop.push_back(gn);
      }
    }
  }
  while (static_cast<int>(pop.size()) < P) pop.push_back(random_genes(rng, space));

  auto rank = [&](std::vector<PlacementGenes>& v) {
    std::vector<std::pair<double, int>> order;
    for (int i = 0; i < static_cast<int>(v.size()); ++i) order.emplace_back(fitness(v[i]).cost, i);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<PlacementGenes> sorted;
    for (const auto& [_, i] : order) sorted.push_back(v[i]);
    v = std::move(sorted);
  };

  const double init_cost = initial.report.t_total;
  PlacementGenes best = initial.genes;
  double best_cost = init_cost;
  auto note = [&](int gen) {
    const PlacementGenes& top = pop.front();
    double c = fitness(top).cost;
    if (c < best_cost) {
      best_cost = c;
      best = top;
    }
    res.trace.push_back({gen, best_cost, std::chrono::duration<double>(Clock::now() - t0).count()});
  };
  auto out_of_time = [&] { return opts.deadline && Clock::now() >= *opts.deadline; };

  rank(pop);
  note(0);
  const int elite = std::max(1, static_cast<int>(std::ceil(opts.ga.elite * P)));
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> pick(0, P - 1);
  for (int gen = 1; gen <= opts.ga.generations && !out_of_time(); ++gen) {
    std::vector<PlacementGenes> next(pop.begin(), pop.begin() + elite);
    auto tournament = [&]() -> const PlacementGenes& {
      int a = pick(rng), b = pick(rng);
      return std::min(a, b) == a ? pop[a] : pop[b];  // pop is sorted by cost
    };
    while (static_cast<int>(next.size()) < P) {
      const PlacementGenes& a = tournament();
      const PlacementGenes& b = tournament();
      PlacementGenes child = u(rng) < opts.ga.crossover ? crossover(a, b, rng) : a;
      mutate(child, opts.ga.mutation, rng, space);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    rank(pop);
    note(gen);
  }

  if (best_cost < init_cost) {
    const Fit& f = fitness(best);
    res.plan = ev.build(g, f.configs, best);
  }
  return res;
}

ExecutionPlan ga_refine(const ComputeGraph& g, const ExecutionPlan& initial, const WaferTopology& topo,
                        const GAParams& params, const EvaluatorOptions& opts) {
  PlanEvaluator ev(std::make_shared<const WaferTopology>(topo), opts);
  RefineOptions ro;
  ro.ga = params;
  return ga_refine(g, initial, ev, ro).plan;
}

// ---- end to end -----------------------------------------------------------------

namespace {

// DP with a memory penalty raised until the plan fits. Returns the best
// feasible plan found, else the least-memory one.
ExecutionPlan fit_chain(const ComputeGraph& g, PlanEvaluator& ev, const std::vector<ParallelConfig>& cands,
                        const PlacementGenes& genes, Clock::time_point deadline, bool& feasible) {
  auto attempt = [&](double w, ExecutionPlan& out) {
    auto r = dp_search(g, ev, cands, genes, w);
    if (!r.found) return false;
    out = ev.build(g, r.configs, genes);
    return true;
  };
  ExecutionPlan plan;
  if (!attempt(0.0, plan)) throw InvalidArgument("no candidate config is valid for every operator");
  feasible = !plan.report.memory.oom;
  if (feasible) return plan;

  // Penalty is seconds per byte; grow until feasible, then bisect down.
  ExecutionPlan fallback = plan;
  double lo = 0, hi = 1e-15;
  ExecutionPlan best;
  bool have = false;
  for (int i = 0; i < 24 && Clock::now() < deadline; ++i, hi *= 10) {
    ExecutionPlan p;
    if (!attempt(hi, p)) break;
    if (p.report.memory.peak < fallback.report.memory.peak) fallback = p;
    if (!p.report.memory.oom) {
      best = std::move(p);
      have = true;
      break;
    }
    lo = hi;
  }
  if (!have) {
    feasible = false;
    return fallback;
  }
  for (int i = 0; i < 12 && Clock::now() < deadline; ++i) {
    double mid = std::sqrt(std::max(lo, hi * 1e-3) * hi);
    ExecutionPlan p;
    if (!attempt(mid, p)) break;
    if (!p.report.memory.oom) {
      if (p.report.t_total < best.report.t_total) best = std::move(p);
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi / std::max(lo, 1e-300) < 1.5) break;
  }
  feasible = true;
  return best;
}

}  // namespace

SolveResult solve(const ComputeGraph& g, std::shared_ptr<const WaferTopology> topo, const SolverOptions& opts) {
  if (!topo) throw InvalidArgument("solve needs a topology");
  g.validate();
  opts.ga.validate();
  const auto t0 = Clock::now();
  const auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(opts.budget_seconds));
  SolveResult res;
  res.subgraphs = static_cast<int>(split_graph(g).size());
  PlanEvaluator ev(topo, opts.eval);
  if (g.ops.empty()) {
    res.plan.topology = topo;
    res.plan.eff = opts.eval.eff;
    res.plan.report = total_cost(g, res.plan);
    res.feasible = true;
    return res;
  }
  auto cands = opts.candidates.empty() ? candidate_configs(topo->enabled_die_count()) : opts.candidates;

  // Level 1. Cuts carry a single live tensor, so one pass over the whole
  // graph equals chaining the per-segment DPs through their boundary classes.
  bool feasible = false;
  // Block placement needs an intact rectangle; on a holed mesh fall back to
  // walking the enabled dies in snake order.
  PlacementGenes snake;
  snake.snake_list = true;
  ExecutionPlan plan;
  try {
    plan = fit_chain(g, ev, cands, PlacementGenes{}, deadline, feasible);
  } catch (const InvalidArgument&) {
    plan = fit_chain(g, ev, cands, snake, deadline, feasible);
  }

  // Level 2.
  if (opts.refine && feasible && Clock::now() < deadline) {
    RefineOptions ro;
    ro.ga = opts.ga;
    ro.candidates = cands;
    ro.dp_fitness_limit = opts.dp_fitness_limit;
    ro.deadline = deadline;
    auto r = ga_refine(g, plan, ev, ro);
    plan = std::move(r.plan);
    res.trace = std::move(r.trace);
  }
  res.budget_exhausted = Clock::now() >= deadline;
  res.feasible = !plan.report.memory.oom;
  if (!res.feasible) {
    res.memory_gap = plan.report.memory.peak - plan.report.memory.capacity;
    res.message = "no plan fits in die memory; least-memory plan needs " + std::to_string(plan.report.memory.peak) +
                  " bytes on die " + std::to_string(plan.report.memory.peak_die);
  }
  res.plan = std::move(plan);
  res.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

}  // namespace wsc
