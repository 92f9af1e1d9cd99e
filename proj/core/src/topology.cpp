#include "wsc/topology.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <unordered_set>

#include "wsc/errors.hpp"

namespace wsc {

namespace {

constexpr int kDr[4] = {-1, 0, 1, 0};
constexpr int kDc[4] = {0, 1, 0, -1};

void require_positive(double v, const char* name) {
  if (!(v > 0)) throw InvalidArgument(std::string(name) + " must be > 0");
}

}  // namespace

void DieSpec::validate() const {
  require_positive(peak_compute, "peak_compute");
  require_positive(sram_bytes, "sram_bytes");
  require_positive(hbm_bytes, "hbm_bytes");
  require_positive(hbm_bandwidth, "hbm_bandwidth");
  require_positive(hbm_latency, "hbm_latency");
  require_positive(compute_energy, "compute_energy");
  require_positive(hbm_energy, "hbm_energy");
}

void LinkSpec::validate() const {
  require_positive(bandwidth, "link bandwidth");
  require_positive(max_length_mm, "max_length_mm");
  if (latency < 0) throw InvalidArgument("link latency must be >= 0");
  if (energy < 0) throw InvalidArgument("link energy must be >= 0");
  if (fec_penalty < 0) throw InvalidArgument("fec_penalty must be >= 0");
}

std::optional<DieId> WaferTopology::neighbor(DieId d, Dir dir) const {
  Coord c = coord(d);
  Coord n{c.row + kDr[static_cast<int>(dir)], c.col + kDc[static_cast<int>(dir)]};
  if (!in_bounds(n)) return std::nullopt;
  return id(n);
}

std::optional<LinkId> WaferTopology::link_between(DieId a, DieId b) const {
  if (!valid_die(a) || !valid_die(b)) return std::nullopt;
  for (int k = 0; k < 4; ++k) {
    auto n = neighbor(a, static_cast<Dir>(k));
    if (n && *n == b && link_present_[a * 4 + k]) return a * 4 + k;
  }
  return std::nullopt;
}

DieId WaferTopology::link_dst(LinkId l) const {
  return *neighbor(l / 4, static_cast<Dir>(l % 4));
}

bool WaferTopology::link_exists(LinkId l) const {
  return l >= 0 && l < link_slot_count() && link_present_[l];
}

bool WaferTopology::link_enabled(LinkId l) const {
  if (!link_exists(l) || link_disabled_[l]) return false;
  return die_enabled(link_src(l)) && die_enabled(link_dst(l));
}

std::vector<DieId> WaferTopology::enabled_dies() const {
  std::vector<DieId> out;
  for (DieId d = 0; d < die_count(); ++d)
    if (die_enabled(d)) out.push_back(d);
  return out;
}

int WaferTopology::enabled_die_count() const {
  return static_cast<int>(std::count(die_disabled_.begin(), die_disabled_.end(), 0));
}

std::vector<DieId> WaferTopology::neighbors(DieId d) const {
  std::vector<DieId> out;
  for (int k = 0; k < 4; ++k)
    if (link_enabled(d * 4 + k)) out.push_back(link_dst(d * 4 + k));
  return out;
}

std::vector<std::pair<DieId, DieId>> WaferTopology::undirected_links() const {
  std::vector<std::pair<DieId, DieId>> out;
  for (DieId a = 0; a < die_count(); ++a) {
    for (int k : {1, 2}) {  // east and south: each pair once
      LinkId fwd = a * 4 + k;
      if (!link_exists(fwd)) continue;
      DieId b = link_dst(fwd);
      LinkId back = *link_between(b, a);
      if (link_enabled(fwd) || link_enabled(back)) out.emplace_back(a, b);
    }
  }
  return out;
}

std::vector<LinkId> WaferTopology::disabled_links() const {
  std::vector<LinkId> out;
  for (LinkId l = 0; l < link_slot_count(); ++l)
    if (link_exists(l) && !link_enabled(l)) out.push_back(l);
  return out;
}

bool WaferTopology::connected() const {
  auto dies = enabled_dies();
  if (dies.size() <= 1) return true;
  auto reach = [&](bool reverse) {
    std::vector<char> seen(die_count(), 0);
    std::deque<DieId> q{dies.front()};
    seen[dies.front()] = 1;
    std::size_t count = 1;
    while (!q.empty()) {
      DieId u = q.front();
      q.pop_front();
      for (int k = 0; k < 4; ++k) {
        auto n = neighbor(u, static_cast<Dir>(k));
        if (!n || seen[*n]) continue;
        auto l = reverse ? link_between(*n, u) : std::optional<LinkId>(u * 4 + k);
        if (!l || !link_enabled(*l)) continue;
        seen[*n] = 1;
        ++count;
        q.push_back(*n);
      }
    }
    return count == dies.size();
  };
  return reach(false) && reach(true);
}

void WaferTopology::disable_link(LinkId l) {
  if (!link_exists(l)) throw InvalidArgument("no such link " + std::to_string(l));
  link_disabled_[l] = 1;
}

void WaferTopology::disable_die(DieId d) {
  if (!valid_die(d)) throw InvalidArgument("no such die " + std::to_string(d));
  die_disabled_[d] = 1;
  compute_scale_[d] = 0.0;
}

void WaferTopology::set_compute_scale(DieId d, double scale) {
  if (!valid_die(d)) throw InvalidArgument("no such die " + std::to_string(d));
  if (scale < 0 || scale > 1) throw InvalidArgument("compute scale must be in [0,1]");
  compute_scale_[d] = scale;
}

std::string WaferTopology::link_name(LinkId l) const {
  return std::to_string(link_src(l)) + "->" + std::to_string(link_dst(l));
}

WaferTopology build_mesh(int rows, int cols, const DieSpec& die, const LinkSpec& link,
                         double die_pitch_mm) {
  if (rows < 1 || cols < 1) throw InvalidArgument("mesh dimensions must be >= 1");
  die.validate();
  link.validate();
  if (!(die_pitch_mm > 0)) throw InvalidArgument("die pitch must be > 0");
  if (die_pitch_mm > link.max_length_mm && rows * cols > 1)
    throw InvalidArgument("die pitch exceeds link reach; mesh would be disconnected");

  WaferTopology t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.die_ = die;
  t.link_ = link;
  t.pitch_mm_ = die_pitch_mm;
  int n = rows * cols;
  t.link_present_.assign(n * 4, 0);
  t.link_disabled_.assign(n * 4, 0);
  t.die_disabled_.assign(n, 0);
  t.compute_scale_.assign(n, 1.0);
  for (DieId d = 0; d < n; ++d)
    for (int k = 0; k < 4; ++k)
      if (t.neighbor(d, static_cast<Dir>(k))) t.link_present_[d * 4 + k] = 1;
  return t;
}

// ---- ring / chain embedding -------------------------------------------------

namespace {

using Mask = std::uint64_t;

struct Induced {
  std::vector<DieId> ids;        // sorted ascending
  std::vector<Mask> adj;         // local adjacency (both directions enabled)
  std::vector<int> color;
};

Induced induce(const WaferTopology& topo, std::span<const DieId> dies) {
  Induced g;
  g.ids.assign(dies.begin(), dies.end());
  std::sort(g.ids.begin(), g.ids.end());
  if (std::adjacent_find(g.ids.begin(), g.ids.end()) != g.ids.end())
    throw InvalidArgument("duplicate die in group");
  if (g.ids.size() > 64) throw InvalidArgument("group larger than 64 dies");
  for (DieId d : g.ids)
    if (!topo.die_enabled(d)) throw InvalidArgument("unknown or disabled die " + std::to_string(d));
  int n = static_cast<int>(g.ids.size());
  g.adj.assign(n, 0);
  g.color.resize(n);
  for (int i = 0; i < n; ++i) {
    Coord c = topo.coord(g.ids[i]);
    g.color[i] = (c.row + c.col) & 1;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      auto f = topo.link_between(g.ids[i], g.ids[j]);
      auto b = topo.link_between(g.ids[j], g.ids[i]);
      if (f && b && topo.link_enabled(*f) && topo.link_enabled(*b)) g.adj[i] |= Mask{1} << j;
    }
  }
  return g;
}

struct StateHash {
  std::size_t operator()(const std::pair<Mask, int>& s) const {
    return std::hash<Mask>{}(s.first * 0x9E3779B97F4A7C15ull) ^ static_cast<std::size_t>(s.second);
  }
};

// Backtracking Hamiltonian search. `closed` asks for a cycle back to `start`.
class HamSearch {
 public:
  HamSearch(const Induced& g, bool closed) : g_(g), closed_(closed), n_(static_cast<int>(g.ids.size())) {
    full_ = n_ == 64 ? ~Mask{0} : (Mask{1} << n_) - 1;
  }

  std::optional<std::vector<int>> run(int start) {
    start_ = start;
    order_.assign(1, start);
    failed_.clear();
    if (dfs(Mask{1} << start, start)) return order_;
    return std::nullopt;
  }

 private:
  bool connected_rest(Mask unvisited, int cur) const {
    Mask seen = Mask{1} << cur;
    Mask frontier = seen;
    Mask allowed = unvisited | seen;
    while (frontier) {
      Mask next = 0;
      for (Mask f = frontier; f; f &= f - 1) next |= g_.adj[std::countr_zero(f)];
      next &= allowed & ~seen;
      seen |= next;
      frontier = next;
    }
    return (seen & unvisited) == unvisited;
  }

  bool dfs(Mask visited, int cur) {
    if (visited == full_) return !closed_ || (g_.adj[cur] >> start_ & 1) || n_ <= 2;
    if (failed_.count({visited, cur})) return false;
    Mask unvisited = full_ & ~visited;
    // Degree pruning: each unvisited vertex needs two usable sides
    // (one when it can be the open end of a path).
    Mask ends = (Mask{1} << cur) | (closed_ ? (Mask{1} << start_) : 0);
    int loose = 0;
    for (Mask u = unvisited; u; u &= u - 1) {
      int v = std::countr_zero(u);
      int deg = std::popcount(g_.adj[v] & (unvisited | ends));
      if (deg == 0) { failed_.insert({visited, cur}); return false; }
      if (deg < 2) {
        if (closed_ || ++loose > 1) { failed_.insert({visited, cur}); return false; }
      }
    }
    if (!connected_rest(unvisited, cur)) { failed_.insert({visited, cur}); return false; }
    if (closed_ && !(g_.adj[start_] & unvisited)) { failed_.insert({visited, cur}); return false; }

    for (Mask c = g_.adj[cur] & unvisited; c; c &= c - 1) {
      int nxt = std::countr_zero(c);
      order_.push_back(nxt);
      if (dfs(visited | (Mask{1} << nxt), nxt)) return true;
      order_.pop_back();
    }
    failed_.insert({visited, cur});
    return false;
  }

  const Induced& g_;
  bool closed_;
  int n_;
  Mask full_ = 0;
  int start_ = 0;
  std::vector<int> order_;
  std::unordered_set<std::pair<Mask, int>, StateHash> failed_;
};

std::vector<DieId> to_ids(const Induced& g, const std::vector<int>& local) {
  std::vector<DieId> out;
  out.reserve(local.size());
  for (int i : local) out.push_back(g.ids[i]);
  return out;
}

}  // namespace

RingEmbedding find_ring_embedding(const WaferTopology& topo, std::span<const DieId> dies) {
  if (dies.empty()) throw InvalidArgument("ring search needs at least one die");
  Induced g = induce(topo, dies);
  int n = static_cast<int>(g.ids.size());
  if (n == 1) return {g.ids, true};
  if (n == 2) {
    if (g.adj[0] & 2) return {g.ids, true};
    return {};
  }
  int black = static_cast<int>(std::count(g.color.begin(), g.color.end(), 1));
  if (n % 2 || black * 2 != n) return {};
  for (int i = 0; i < n; ++i)
    if (std::popcount(g.adj[i]) < 2) return {};
  HamSearch search(g, true);
  if (auto r = search.run(0)) return {to_ids(g, *r), true};
  return {};
}

std::optional<std::vector<DieId>> find_chain_embedding(const WaferTopology& topo,
                                                       std::span<const DieId> dies) {
  if (dies.empty()) throw InvalidArgument("chain search needs at least one die");
  Induced g = induce(topo, dies);
  int n = static_cast<int>(g.ids.size());
  if (n == 1) return g.ids;
  int black = static_cast<int>(std::count(g.color.begin(), g.color.end(), 1));
  if (std::abs(2 * black - n) > 1) return std::nullopt;
  std::vector<int> leaves;
  for (int i = 0; i < n; ++i) {
    int deg = std::popcount(g.adj[i]);
    if (deg == 0) return std::nullopt;
    if (deg == 1) leaves.push_back(i);
  }
  if (leaves.size() > 2) return std::nullopt;
  std::vector<int> starts;
  if (!leaves.empty()) {
    starts = leaves;
  } else {
    for (int i = 0; i < n; ++i) starts.push_back(i);
  }
  HamSearch search(g, false);
  for (int s : starts) {
    // With unequal colour classes the path must start on the larger class.
    if (n % 2 && g.color[s] != (2 * black > n ? 1 : 0)) continue;
    if (auto r = search.run(s)) return to_ids(g, *r);
  }
  return std::nullopt;
}

bool is_chain(const WaferTopology& topo, std::span<const DieId> order) {
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    auto f = topo.link_between(order[i], order[i + 1]);
    auto b = topo.link_between(order[i + 1], order[i]);
    if (!f || !b || !topo.link_enabled(*f) || !topo.link_enabled(*b)) return false;
  }
  return true;
}

// ---- paths --------------------------------------------------------------------

std::vector<LinkId> path_links(const WaferTopology& topo, const Path& p) {
  std::vector<LinkId> out;
  out.reserve(p.dies.size());
  for (std::size_t i = 0; i + 1 < p.dies.size(); ++i) {
    auto l = topo.link_between(p.dies[i], p.dies[i + 1]);
    if (!l) throw InternalError("path step between non-adjacent dies");
    out.push_back(*l);
  }
  return out;
}

namespace {

Path dim_order_path(const WaferTopology& topo, DieId src, DieId dst, bool cols_first) {
  Coord c = topo.coord(src);
  Coord t = topo.coord(dst);
  Path p;
  p.dies.push_back(src);
  auto step_cols = [&] {
    while (c.col != t.col) {
      c.col += c.col < t.col ? 1 : -1;
      p.dies.push_back(topo.id(c));
    }
  };
  auto step_rows = [&] {
    while (c.row != t.row) {
      c.row += c.row < t.row ? 1 : -1;
      p.dies.push_back(topo.id(c));
    }
  };
  if (cols_first) {
    step_cols();
    step_rows();
  } else {
    step_rows();
    step_cols();
  }
  return p;
}

}  // namespace

Path xy_path(const WaferTopology& topo, DieId src, DieId dst) {
  return dim_order_path(topo, src, dst, true);
}

Path yx_path(const WaferTopology& topo, DieId src, DieId dst) {
  return dim_order_path(topo, src, dst, false);
}

bool path_usable(const WaferTopology& topo, const Path& p) {
  for (std::size_t i = 0; i + 1 < p.dies.size(); ++i) {
    auto l = topo.link_between(p.dies[i], p.dies[i + 1]);
    if (!l || !topo.link_enabled(*l)) return false;
  }
  return true;
}

std::vector<Path> shortest_paths(const WaferTopology& topo, DieId src, DieId dst, std::size_t cap) {
  if (!topo.die_enabled(src) || !topo.die_enabled(dst))
    throw InvalidArgument("path endpoints must be enabled dies");
  if (src == dst) throw InvalidArgument("shortest_paths needs src != dst");
  if (cap == 0) cap = 1;

  // Hop distance to dst over enabled channels (reverse BFS).
  std::vector<int> dist(topo.die_count(), -1);
  std::deque<DieId> q{dst};
  dist[dst] = 0;
  while (!q.empty()) {
    DieId u = q.front();
    q.pop_front();
    for (int k = 0; k < 4; ++k) {
      auto n = topo.neighbor(u, static_cast<Dir>(k));
      if (!n || dist[*n] >= 0) continue;
      auto l = topo.link_between(*n, u);
      if (!l || !topo.link_enabled(*l)) continue;
      dist[*n] = dist[u] + 1;
      q.push_back(*n);
    }
  }
  if (dist[src] < 0)
    throw NoRouteError("no route " + std::to_string(src) + "->" + std::to_string(dst));

  std::vector<Path> out;
  const int hops = dist[src];
  Path xy = xy_path(topo, src, dst);
  Path yx = yx_path(topo, src, dst);
  if (xy.hops() == hops && path_usable(topo, xy)) out.push_back(xy);
  if (yx.hops() == hops && path_usable(topo, yx) && !(yx == xy) && out.size() < cap) out.push_back(yx);

  Path cur;
  cur.dies.push_back(src);
  auto dfs = [&](auto&& self, DieId u) -> void {
    if (out.size() >= cap) return;
    if (u == dst) {
      if (std::find(out.begin(), out.end(), cur) == out.end()) out.push_back(cur);
      return;
    }
    for (int k = 0; k < 4; ++k) {
      LinkId l = u * 4 + k;
      if (!topo.link_enabled(l)) continue;
      DieId n = topo.link_dst(l);
      if (dist[n] != dist[u] - 1) continue;
      cur.dies.push_back(n);
      self(self, n);
      cur.dies.pop_back();
    }
  };
  dfs(dfs, src);
  return out;
}

}  // namespace wsc
