#include "wsc/routing.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "wsc/errors.hpp"

namespace wsc {

void OptimizerParams::validate() const {
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (improvement_epsilon < 0 || improvement_epsilon >= 1)
    throw InvalidArgument("improvement_epsilon must be in [0,1)");
}

double ring_flow_bytes(const CommOp& op) {
  const double p = static_cast<double>(op.group.size());
  if (p < 2) return 0;
  switch (op.kind) {
    case CommKind::AllReduce: return 2.0 * (p - 1) / p * op.bytes;
    case CommKind::AllGather:
    case CommKind::ReduceScatter: return (p - 1) / p * op.bytes;
    default: return op.bytes;
  }
}

namespace {

std::vector<LinkId> default_route(const WaferTopology& topo, DieId src, DieId dst) {
  if (src == dst) return {};
  Path xy = xy_path(topo, src, dst);
  if (path_usable(topo, xy)) return path_links(topo, xy);
  auto paths = shortest_paths(topo, src, dst, 1);
  return path_links(topo, paths.front());
}

void expand(const CommOp& op, int index, std::vector<Flow>& out) {
  if (op.collective()) {
    const int p = static_cast<int>(op.group.size());
    if (p < 2) return;
    double b = ring_flow_bytes(op);
    for (int i = 0; i < p; ++i) {
      if (p == 2 && i == 1 && op.group[0] == op.group[1]) break;
      out.push_back({index, op.group[i], op.group[(i + 1) % p], b, -1, op.payload + static_cast<std::uint64_t>(i)});
    }
    return;
  }
  if (op.group.size() != 2) throw InvalidArgument("P2P CommOp needs exactly {src, dst}");
  if (op.group[0] == op.group[1]) return;
  out.push_back({index, op.group[0], op.group[1], op.bytes, op.round, op.payload});
}

}  // namespace

RoutePlan init_routes(std::span<const CommOp> ops, const WaferTopology& topo) {
  RoutePlan plan;
  plan.ops.assign(ops.begin(), ops.end());
  plan.op_flow_begin.reserve(ops.size() + 1);
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const CommOp& op = plan.ops[i];
    for (DieId d : op.group)
      if (!topo.die_enabled(d)) throw InvalidArgument("CommOp touches disabled die " + std::to_string(d));
    if (!(op.bytes > 0)) throw InvalidArgument("CommOp bytes must be > 0");
    plan.op_flow_begin.push_back(static_cast<int>(plan.flows.size()));
    expand(op, static_cast<int>(i), plan.flows);
    plan.rounds = std::max(plan.rounds, op.round + 1);
  }
  plan.op_flow_begin.push_back(static_cast<int>(plan.flows.size()));
  plan.paths.reserve(plan.flows.size());
  for (const Flow& f : plan.flows) plan.paths.push_back(default_route(topo, f.src, f.dst));
  plan.tree_of.assign(plan.flows.size(), -1);
  return plan;
}

// ---- traffic ------------------------------------------------------------------

int TrafficMatrix::max_flows() const {
  return flows.empty() ? 0 : *std::max_element(flows.begin(), flows.end());
}

double TrafficMatrix::total_bytes() const {
  double s = 0;
  for (double b : bytes) s += b;
  return s;
}

TrafficMatrix::Hot TrafficMatrix::most_congested() const {
  Hot h;
  for (int l = 0; l < links; ++l)
    for (int r = 0; r < rounds; ++r) {
      int f = flows_at(r, l);
      if (f > h.flows) h = {l, r, f, bytes_at(r, l)};
    }
  return h;
}

int TrafficMatrix::links_at(int flow_count) const {
  int n = 0;
  for (int l = 0; l < links; ++l)
    for (int r = 0; r < rounds; ++r)
      if (flows_at(r, l) == flow_count) {
        ++n;
        break;
      }
  return n;
}

std::string TrafficMatrix::to_csv(const WaferTopology& topo) const {
  std::ostringstream os;
  os << "round,link,src,dst,bytes,flows\n";
  os.precision(17);
  for (int r = 0; r < rounds; ++r)
    for (int l = 0; l < links; ++l) {
      if (flows_at(r, l) == 0) continue;
      os << r << "," << l << "," << topo.link_src(l) << "," << topo.link_dst(l) << "," << bytes_at(r, l) << ","
         << flows_at(r, l) << "\n";
    }
  return os.str();
}

namespace {

struct Contribution {
  std::vector<LinkId> links;
  int round = -1;
  double bytes = 0;
};

struct Objective {
  int max_flows = 0;
  long excess = 0;  // sum over cells of flows beyond the first
  int at_max = 0;
  double link_bytes = 0;
};

bool better(const Objective& a, const Objective& b, double eps) {
  if (a.max_flows != b.max_flows) return a.max_flows < b.max_flows;
  if (a.excess != b.excess) return a.excess < b.excess;
  if (a.at_max != b.at_max) return a.at_max < b.at_max;
  return a.link_bytes < b.link_bytes * (1.0 - eps);
}

// Flow and byte tallies per (round, link) with a histogram of flow counts so
// the objective is O(1) after each update.
class Loads {
 public:
  Loads(int links, int rounds) : L_(links), R_(rounds), cnt_(static_cast<std::size_t>(links) * rounds, 0),
                                 by_(cnt_.size(), 0.0), hist_(4, 0) {
    hist_[0] = static_cast<int>(cnt_.size());
  }

  void apply(const Contribution& c, int sign) {
    const int r0 = c.round < 0 ? 0 : c.round;
    const int r1 = c.round < 0 ? R_ : c.round + 1;
    const double per = c.round < 0 ? c.bytes / R_ : c.bytes;
    for (LinkId l : c.links)
      for (int r = r0; r < r1; ++r) {
        std::size_t i = static_cast<std::size_t>(r) * L_ + l;
        --hist_[cnt_[i]];
        excess_ -= std::max(0, cnt_[i] - 1);
        cnt_[i] += sign;
        excess_ += std::max(0, cnt_[i] - 1);
        if (static_cast<std::size_t>(cnt_[i]) >= hist_.size()) hist_.resize(cnt_[i] * 2 + 1, 0);
        ++hist_[cnt_[i]];
        by_[i] += sign * per;
      }
    link_bytes_ += sign * c.bytes * static_cast<double>(c.links.size());
  }

  Objective objective() const {
    Objective o;
    for (int v = static_cast<int>(hist_.size()) - 1; v >= 1; --v)
      if (hist_[v] > 0) {
        o.max_flows = v;
        o.at_max = hist_[v];
        break;
      }
    o.excess = excess_;
    o.link_bytes = link_bytes_;
    return o;
  }

  // Cells at the current max flow count, by link id then round.
  std::vector<std::pair<LinkId, int>> hot_cells(int max_flows, std::size_t cap) const {
    std::vector<std::pair<LinkId, int>> out;
    for (LinkId l = 0; l < L_ && out.size() < cap; ++l)
      for (int r = 0; r < R_ && out.size() < cap; ++r)
        if (cnt_[static_cast<std::size_t>(r) * L_ + l] == max_flows) out.emplace_back(l, r);
    return out;
  }

  TrafficMatrix matrix() const {
    TrafficMatrix t;
    t.links = L_;
    t.rounds = R_;
    t.flows = cnt_;
    t.bytes = by_;
    return t;
  }

 private:
  int L_, R_;
  std::vector<int> cnt_;
  std::vector<double> by_;
  std::vector<int> hist_;
  double link_bytes_ = 0;
  long excess_ = 0;
};

std::vector<Contribution> contributions(const RoutePlan& plan) {
  std::vector<Contribution> out;
  for (std::size_t f = 0; f < plan.flows.size(); ++f)
    if (plan.tree_of[f] < 0) out.push_back({plan.paths[f], plan.flows[f].round, plan.flows[f].bytes});
  for (const auto& t : plan.trees) out.push_back({t.edges, t.round, t.bytes});
  return out;
}

Loads build_loads(const RoutePlan& plan, const WaferTopology& topo) {
  Loads loads(topo.link_slot_count(), std::max(1, plan.rounds));
  for (const auto& c : contributions(plan)) loads.apply(c, +1);
  return loads;
}

}  // namespace

TrafficMatrix link_loads(const RoutePlan& plan, const WaferTopology& topo) {
  return build_loads(plan, topo).matrix();
}

double delivered_bytes(const RoutePlan& plan) {
  double s = 0;
  for (const Flow& f : plan.flows) s += f.bytes;
  return s;
}

double link_bytes(const RoutePlan& plan) {
  double s = 0;
  for (const auto& c : contributions(plan)) s += c.bytes * static_cast<double>(c.links.size());
  return s;
}

bool routes_valid(const RoutePlan& plan, const WaferTopology& topo) {
  for (std::size_t f = 0; f < plan.flows.size(); ++f) {
    const Flow& fl = plan.flows[f];
    DieId at = fl.src;
    for (LinkId l : plan.paths[f]) {
      if (!topo.link_enabled(l) || topo.link_src(l) != at) return false;
      at = topo.link_dst(l);
    }
    if (at != fl.dst) return false;
  }
  for (const auto& t : plan.trees)
    for (LinkId l : t.edges)
      if (!topo.link_enabled(l)) return false;
  return true;
}

// ---- optimizer ----------------------------------------------------------------

namespace {

enum class MoveKind { Reroute, Merge, Reorder };

struct Move {
  MoveKind kind = MoveKind::Reroute;
  std::vector<Contribution> remove;
  std::vector<Contribution> add;
  std::string label;
  // Reroute
  int flow = -1;
  std::vector<LinkId> path;
  // Merge
  std::vector<int> members;
  MulticastTree tree;
  std::vector<std::vector<LinkId>> member_paths;
  // Reorder: ops and their new endpoint groups
  std::vector<int> ops;
  std::vector<std::vector<DieId>> groups;
  std::vector<std::vector<LinkId>> flow_paths;  // for all flows of `ops`, in order
};

bool active_in(const Flow& f, int round) { return f.round < 0 || f.round == round; }

std::vector<Path> candidate_paths(const WaferTopology& topo, DieId s, DieId d) {
  std::vector<Path> out;
  auto push = [&](Path p) {
    std::set<DieId> seen(p.dies.begin(), p.dies.end());
    if (seen.size() != p.dies.size()) return;
    if (!path_usable(topo, p)) return;
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
  };
  push(xy_path(topo, s, d));
  push(yx_path(topo, s, d));
  int min_hops = 0;
  try {
    for (auto& p : shortest_paths(topo, s, d, 8)) {
      min_hops = p.hops();
      push(std::move(p));
    }
  } catch (const NoRouteError&) {
    return out;
  }
  // Single-waypoint detours, at most two hops longer than minimal.
  for (DieId w = 0; w < topo.die_count(); ++w) {
    if (w == s || w == d || !topo.die_enabled(w)) continue;
    int len = manhattan(topo.coord(s), topo.coord(w)) + manhattan(topo.coord(w), topo.coord(d));
    if (len > min_hops + 2) continue;
    for (bool xy_first : {true, false}) {
      Path a = xy_first ? xy_path(topo, s, w) : yx_path(topo, s, w);
      Path b = xy_first ? xy_path(topo, w, d) : yx_path(topo, w, d);
      a.dies.insert(a.dies.end(), b.dies.begin() + 1, b.dies.end());
      push(std::move(a));
    }
  }
  return out;
}

// Tree from the union of member paths: BFS parents from the root, pruned to
// branches that reach a member destination.
bool build_tree(const WaferTopology& topo, DieId root, const std::vector<std::vector<LinkId>>& paths,
                const std::vector<DieId>& dsts, std::vector<LinkId>& edges, std::vector<std::vector<LinkId>>& member_paths) {
  std::map<DieId, std::vector<LinkId>> out_edges;
  for (const auto& p : paths)
    for (LinkId l : p) {
      auto& v = out_edges[topo.link_src(l)];
      if (std::find(v.begin(), v.end(), l) == v.end()) v.push_back(l);
    }
  for (auto& [_, v] : out_edges) std::sort(v.begin(), v.end());
  std::map<DieId, LinkId> parent;
  std::deque<DieId> q{root};
  std::set<DieId> seen{root};
  while (!q.empty()) {
    DieId u = q.front();
    q.pop_front();
    for (LinkId l : out_edges[u]) {
      DieId v = topo.link_dst(l);
      if (seen.insert(v).second) {
        parent[v] = l;
        q.push_back(v);
      }
    }
  }
  std::set<LinkId> used;
  member_paths.clear();
  for (DieId d : dsts) {
    if (!seen.count(d)) return false;
    std::vector<LinkId> p;
    for (DieId at = d; at != root; at = topo.link_src(parent[at])) p.push_back(parent[at]);
    std::reverse(p.begin(), p.end());
    used.insert(p.begin(), p.end());
    member_paths.push_back(std::move(p));
  }
  edges.assign(used.begin(), used.end());
  return true;
}

constexpr std::size_t kHotCellsTried = 16;

class Optimizer {
 public:
  Optimizer(RoutePlan& plan, const WaferTopology& topo, const OptimizerParams& params)
      : plan_(plan), topo_(topo), params_(params), loads_(build_loads(plan, topo)) {}

  void run(std::vector<OptimizerStep>* trace) {
    for (int it = 0; it < params_.max_iter; ++it) {
      Objective cur = loads_.objective();
      if (cur.max_flows <= 1) return;
      best_ = std::nullopt;
      best_obj_ = cur;
      // The most congested link first; other hot cells only if it is stuck.
      for (auto [link, round] : loads_.hot_cells(cur.max_flows, kHotCellsTried)) {
        candidates(link, round);
        if (best_) break;
      }
      if (!best_) return;
      commit(*best_);
      ++plan_.iterations;
      if (trace) trace->push_back({plan_.iterations, best_->label, best_obj_.max_flows, best_obj_.at_max});
    }
  }

 private:
  Objective trial(const Move& m) {
    for (const auto& c : m.remove) loads_.apply(c, -1);
    for (const auto& c : m.add) loads_.apply(c, +1);
    Objective o = loads_.objective();
    for (const auto& c : m.add) loads_.apply(c, -1);
    for (const auto& c : m.remove) loads_.apply(c, +1);
    return o;
  }

  Contribution flow_contribution(int f) const {
    return {plan_.paths[f], plan_.flows[f].round, plan_.flows[f].bytes};
  }

  bool uses(int f, LinkId link) const {
    const auto& links = plan_.tree_of[f] >= 0 ? plan_.trees[plan_.tree_of[f]].edges : plan_.paths[f];
    return std::find(links.begin(), links.end(), link) != links.end();
  }

  // Strictly better than everything seen so far wins; ties keep the earlier move.
  void consider(Move&& m) {
    Objective o = trial(m);
    if (better(o, best_obj_, params_.improvement_epsilon)) {
      best_obj_ = o;
      best_ = std::move(m);
    }
  }

  void candidates(LinkId link, int round) {
    std::vector<int> hot_flows;
    for (std::size_t f = 0; f < plan_.flows.size(); ++f)
      if (active_in(plan_.flows[f], round) && uses(static_cast<int>(f), link)) hot_flows.push_back(static_cast<int>(f));

    // Multicast merges first so that ties favour consolidation.
    if (params_.allow_multicast) {
      std::map<std::tuple<DieId, std::uint64_t, int>, std::vector<int>> groups;
      for (int f : hot_flows) {
        const Flow& fl = plan_.flows[f];
        groups.try_emplace(std::make_tuple(fl.src, fl.payload, fl.round));
      }
      for (std::size_t f = 0; f < plan_.flows.size(); ++f) {
        const Flow& fl = plan_.flows[f];
        auto it = groups.find(std::make_tuple(fl.src, fl.payload, fl.round));
        if (it != groups.end()) it->second.push_back(static_cast<int>(f));
      }
      for (int f : hot_flows) {
        const Flow& fl = plan_.flows[f];
        auto it = groups.find(std::make_tuple(fl.src, fl.payload, fl.round));
        if (it == groups.end()) continue;
        if (auto m = merge_move(it->first, it->second)) consider(std::move(*m));
        groups.erase(it);
      }
    }
    for (int f : hot_flows) {
      if (plan_.tree_of[f] >= 0) continue;
      const Flow& fl = plan_.flows[f];
      for (const auto& links : paths_between(fl.src, fl.dst)) {
        if (links == plan_.paths[f]) continue;
        Move m;
        m.kind = MoveKind::Reroute;
        m.flow = f;
        m.path = links;
        m.remove = {flow_contribution(f)};
        m.add = {{links, fl.round, fl.bytes}};
        m.label = "reroute flow " + std::to_string(fl.src) + "->" + std::to_string(fl.dst);
        consider(std::move(m));
      }
    }
    if (params_.allow_reorder) {
      std::set<std::pair<int, int>> seen_groups;  // (op or -1, stream or op index)
      for (int f : hot_flows) {
        const CommOp& op = plan_.ops[plan_.flows[f].op];
        if (op.collective()) {
          if (seen_groups.insert({-1, plan_.flows[f].op}).second) reorder_collective(plan_.flows[f].op);
        } else if (op.kind == CommKind::P2PStream && op.stream >= 0) {
          if (seen_groups.insert({op.op, op.stream}).second) reorder_stream(op.op, op.stream);
        }
      }
    }
  }

  // The topology is fixed for the whole run, so candidate routes are too.
  const std::vector<std::vector<LinkId>>& paths_between(DieId s, DieId d) {
    auto key = static_cast<long long>(s) * topo_.die_count() + d;
    auto it = path_cache_.find(key);
    if (it != path_cache_.end()) return it->second;
    std::vector<std::vector<LinkId>> v;
    for (const Path& p : candidate_paths(topo_, s, d)) v.push_back(path_links(topo_, p));
    return path_cache_.emplace(key, std::move(v)).first->second;
  }

  std::optional<Move> merge_move(const std::tuple<DieId, std::uint64_t, int>& key, const std::vector<int>& members) {
    auto [src, payload, round] = key;
    std::set<int> old_trees;
    for (int f : members)
      if (plan_.tree_of[f] >= 0) old_trees.insert(plan_.tree_of[f]);
    if (members.size() < 2) return std::nullopt;
    if (old_trees.size() == 1 && plan_.trees[*old_trees.begin()].flows.size() == members.size()) return std::nullopt;
    Move m;
    m.kind = MoveKind::Merge;
    m.members = members;
    std::vector<std::vector<LinkId>> paths;
    std::vector<DieId> dsts;
    double bytes = 0;
    for (int f : members) {
      paths.push_back(plan_.paths[f]);
      dsts.push_back(plan_.flows[f].dst);
      bytes = std::max(bytes, plan_.flows[f].bytes);
      if (plan_.tree_of[f] < 0) m.remove.push_back(flow_contribution(f));
    }
    for (int t : old_trees) m.remove.push_back({plan_.trees[t].edges, plan_.trees[t].round, plan_.trees[t].bytes});
    m.tree.root = src;
    m.tree.payload = payload;
    m.tree.round = round;
    m.tree.bytes = bytes;
    m.tree.flows = members;
    if (!build_tree(topo_, src, paths, dsts, m.tree.edges, m.member_paths)) return std::nullopt;
    m.add = {{m.tree.edges, round, bytes}};
    m.label = "multicast from " + std::to_string(src) + " to " + std::to_string(members.size()) + " dies";
    return m;
  }

  bool has_tree(int op) const {
    auto [b, e] = plan_.flow_range(op);
    for (int f = b; f < e; ++f)
      if (plan_.tree_of[f] >= 0) return true;
    return false;
  }

  static std::vector<std::vector<int>> permutations(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> id(n);
    for (int i = 0; i < n; ++i) id[i] = i;
    std::vector<int> rev(id.rbegin(), id.rend());
    out.push_back(rev);
    if (n >= 2) {
      std::vector<int> pairs = id;
      for (int i = 0; i + 1 < n; i += 2) std::swap(pairs[i], pairs[i + 1]);
      out.push_back(pairs);
    }
    if (n <= 16)
      for (int i = 0; i + 1 < n; ++i) {
        std::vector<int> t = id;
        std::swap(t[i], t[i + 1]);
        out.push_back(t);
      }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    out.erase(std::remove(out.begin(), out.end(), id), out.end());
    return out;
  }

  void push_reorder(const std::vector<int>& ops, const std::vector<std::vector<DieId>>& groups,
                    const std::string& label) {
    Move m;
    m.kind = MoveKind::Reorder;
    m.ops = ops;
    m.groups = groups;
    try {
      for (std::size_t i = 0; i < ops.size(); ++i) {
        CommOp probe = plan_.ops[ops[i]];
        probe.group = groups[i];
        std::vector<Flow> fl;
        expand(probe, ops[i], fl);
        auto [b, e] = plan_.flow_range(ops[i]);
        if (static_cast<int>(fl.size()) != e - b) return;
        for (int f = b; f < e; ++f) m.remove.push_back(flow_contribution(f));
        for (const Flow& x : fl) {
          auto path = default_route(topo_, x.src, x.dst);
          m.add.push_back({path, x.round, x.bytes});
          m.flow_paths.push_back(std::move(path));
        }
      }
    } catch (const NoRouteError&) {
      return;
    }
    m.label = label;
    consider(std::move(m));
  }

  void reorder_collective(int op_index) {
    if (has_tree(op_index)) return;
    const auto& g = plan_.ops[op_index].group;
    for (const auto& perm : permutations(static_cast<int>(g.size()))) {
      std::vector<DieId> ng;
      for (int p : perm) ng.push_back(g[p]);
      push_reorder({op_index}, {ng}, "reorder ring of op " + std::to_string(op_index));
    }
  }

  void reorder_stream(OpId owner, int stream) {
    std::vector<int> ops;
    std::map<int, DieId> pos_die;
    for (std::size_t i = 0; i < plan_.ops.size(); ++i) {
      const CommOp& c = plan_.ops[i];
      if (c.kind != CommKind::P2PStream || c.stream != stream || c.op != owner) continue;
      if (has_tree(static_cast<int>(i))) return;
      ops.push_back(static_cast<int>(i));
      pos_die[c.src_pos] = c.group[0];
      pos_die[c.dst_pos] = c.group[1];
    }
    const int n = static_cast<int>(pos_die.size());
    if (n < 2 || pos_die.rbegin()->first != n - 1) return;
    for (const auto& perm : permutations(n)) {
      std::vector<std::vector<DieId>> groups;
      for (int i : ops) {
        const CommOp& c = plan_.ops[i];
        groups.push_back({pos_die[perm[c.src_pos]], pos_die[perm[c.dst_pos]]});
      }
      push_reorder(ops, groups, "reorder stream " + std::to_string(stream));
    }
  }

  void commit(const Move& m) {
    for (const auto& c : m.remove) loads_.apply(c, -1);
    for (const auto& c : m.add) loads_.apply(c, +1);
    switch (m.kind) {
      case MoveKind::Reroute:
        plan_.paths[m.flow] = m.path;
        break;
      case MoveKind::Merge: {
        std::set<int> old;
        for (int f : m.members)
          if (plan_.tree_of[f] >= 0) old.insert(plan_.tree_of[f]);
        int id = static_cast<int>(plan_.trees.size());
        if (!old.empty()) id = *old.begin();
        if (id == static_cast<int>(plan_.trees.size())) plan_.trees.push_back(m.tree);
        else plan_.trees[id] = m.tree;
        for (std::size_t i = 0; i < m.members.size(); ++i) {
          plan_.tree_of[m.members[i]] = id;
          plan_.paths[m.members[i]] = m.member_paths[i];
        }
        // Other absorbed trees become empty shells.
        for (int t : old)
          if (t != id) {
            plan_.trees[t].edges.clear();
            plan_.trees[t].flows.clear();
            plan_.trees[t].bytes = 0;
          }
        break;
      }
      case MoveKind::Reorder: {
        std::size_t k = 0;
        for (std::size_t i = 0; i < m.ops.size(); ++i) {
          int oi = m.ops[i];
          plan_.ops[oi].group = m.groups[i];
          std::vector<Flow> fl;
          expand(plan_.ops[oi], oi, fl);
          auto [b, e] = plan_.flow_range(oi);
          for (int f = b; f < e; ++f) {
            plan_.flows[f] = fl[f - b];
            plan_.paths[f] = m.flow_paths[k++];
          }
        }
        break;
      }
    }
  }

  RoutePlan& plan_;
  const WaferTopology& topo_;
  OptimizerParams params_;
  Loads loads_;
  std::unordered_map<long long, std::vector<std::vector<LinkId>>> path_cache_;
  std::optional<Move> best_;
  Objective best_obj_;
};

}  // namespace

RoutePlan optimize_routes(RoutePlan plan, const WaferTopology& topo, const OptimizerParams& params,
                          std::vector<OptimizerStep>* trace) {
  params.validate();
  Optimizer opt(plan, topo, params);
  opt.run(trace);
  return plan;
}

}  // namespace wsc
