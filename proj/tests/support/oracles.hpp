// Independent reference computations shared by the tests. Deliberately naive.
#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "wsc/parallelism.hpp"
#include "wsc/topology.hpp"

namespace oracle {

inline bool adjacent_enabled(const wsc::WaferTopology& t, wsc::DieId a, wsc::DieId b) {
  auto l = t.link_between(a, b);
  auto r = t.link_between(b, a);
  return l && r && t.link_enabled(*l) && t.link_enabled(*r);
}

// Held-Karp over subsets. One die is a ring; two adjacent dies are a
// degenerate ring.
inline bool hamiltonian_cycle(const wsc::WaferTopology& t, const std::vector<wsc::DieId>& dies) {
  const int n = static_cast<int>(dies.size());
  if (n == 1) return true;
  if (n == 2) return adjacent_enabled(t, dies[0], dies[1]);
  std::vector<std::vector<char>> reach(1u << n, std::vector<char>(n, 0));
  reach[1][0] = 1;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    if (!(mask & 1)) continue;
    for (int last = 0; last < n; ++last) {
      if (!reach[mask][last]) continue;
      for (int nx = 0; nx < n; ++nx)
        if (!(mask & (1u << nx)) && adjacent_enabled(t, dies[last], dies[nx])) reach[mask | (1u << nx)][nx] = 1;
    }
  }
  unsigned full = (1u << n) - 1;
  for (int last = 1; last < n; ++last)
    if (reach[full][last] && adjacent_enabled(t, dies[last], dies[0])) return true;
  return false;
}

inline std::vector<int> bfs_dist(const wsc::WaferTopology& t, wsc::DieId src) {
  std::vector<int> dist(t.die_count(), -1);
  std::deque<wsc::DieId> q{src};
  dist[src] = 0;
  while (!q.empty()) {
    auto d = q.front();
    q.pop_front();
    for (int dir = 0; dir < 4; ++dir) {
      auto nb = t.neighbor(d, static_cast<wsc::Dir>(dir));
      if (!nb || !t.die_enabled(*nb) || dist[*nb] >= 0) continue;
      auto l = t.link_between(d, *nb);
      if (!t.link_enabled(*l)) continue;
      dist[*nb] = dist[d] + 1;
      q.push_back(*nb);
    }
  }
  return dist;
}

// Number of minimal paths src -> dst over enabled channels.
inline std::int64_t count_shortest(const wsc::WaferTopology& t, wsc::DieId src, wsc::DieId dst) {
  auto dist = bfs_dist(t, src);
  if (dist[dst] < 0) return 0;
  std::vector<std::int64_t> ways(t.die_count(), 0);
  ways[src] = 1;
  std::vector<wsc::DieId> order(t.die_count());
  for (int i = 0; i < t.die_count(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
  for (auto d : order) {
    if (dist[d] < 0 || ways[d] == 0) continue;
    for (auto nb : t.neighbors(d))
      if (dist[nb] == dist[d] + 1) ways[nb] += ways[d];
  }
  return ways[dst];
}

// Bytes of a role's full tensor in elements.
inline std::int64_t tensor_elems(const wsc::ShardLayout& l, wsc::Role r) {
  const auto& d = l.dims;
  switch (r) {
    case wsc::Role::Input: return d.B * d.M * d.N;
    case wsc::Role::Output: return d.B * d.M * d.K;
    case wsc::Role::Weight: return d.N * d.K;
  }
  return 0;
}

// Distinct slices are pairwise disjoint and their volumes add up to the tensor.
inline bool exact_cover(const wsc::ShardLayout& l, wsc::Role r) {
  std::set<wsc::Box> boxes;
  for (int i = 0; i < l.rank_count(); ++i) boxes.insert(l.box(i, r));
  std::int64_t vol = 0;
  for (auto a = boxes.begin(); a != boxes.end(); ++a) {
    vol += a->volume();
    for (auto b = std::next(a); b != boxes.end(); ++b)
      if (!wsc::intersect(*a, *b).empty()) return false;
  }
  return vol == tensor_elems(l, r);
}

// The fixed 4x4 contention scenario: four FSDP all-gather rings over 2x2
// blocks and four strided stream chains, each chain sending one hop per
// position in a single round.
struct ContentionScenario {
  std::vector<std::vector<wsc::DieId>> gather_rings{{1, 0, 4, 5}, {3, 2, 6, 7}, {9, 8, 12, 13}, {11, 10, 14, 15}};
  std::vector<std::vector<wsc::DieId>> stream_chains{{2, 0, 8, 10}, {3, 1, 9, 11}, {6, 4, 12, 14}, {7, 5, 13, 15}};
  double gather_bytes = 64e6;
  double stream_bytes = 16e6;

  std::vector<wsc::CommOp> ops() const {
    std::vector<wsc::CommOp> out;
    int id = 0;
    for (const auto& g : gather_rings) {
      wsc::CommOp c;
      c.kind = wsc::CommKind::AllGather;
      c.group = g;
      c.bytes = gather_bytes;
      c.round = -1;
      c.op = id;
      c.payload = 100 + static_cast<std::uint64_t>(id);
      out.push_back(c);
      ++id;
    }
    int stream = 0;
    for (const auto& ch : stream_chains) {
      for (int p = 0; p + 1 < static_cast<int>(ch.size()); ++p) {
        wsc::CommOp c;
        c.kind = wsc::CommKind::P2PStream;
        c.group = {ch[p], ch[p + 1]};
        c.bytes = stream_bytes;
        c.round = 0;
        c.stream = stream;
        c.src_pos = p;
        c.dst_pos = p + 1;
        c.op = 10 + stream;
        c.payload = 1000 * static_cast<std::uint64_t>(stream) + static_cast<std::uint64_t>(p);
        out.push_back(c);
      }
      ++stream;
    }
    return out;
  }
};

}  // namespace oracle
