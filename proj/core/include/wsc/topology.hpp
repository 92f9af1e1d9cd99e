#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wsc {

using DieId = int;
// Directed channel id: src_die * 4 + direction.
using LinkId = int;

enum class Dir : int { North = 0, East = 1, South = 2, West = 3 };

struct Coord {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

inline int manhattan(Coord a, Coord b) {
  return (a.row > b.row ? a.row - b.row : b.row - a.row) +
         (a.col > b.col ? a.col - b.col : b.col - a.col);
}

// SI units throughout.
struct DieSpec {
  double peak_compute = 1800e12;     // FLOP/s
  double sram_bytes = 80e6;
  double hbm_bytes = 72e9;
  double hbm_bandwidth = 1e12;       // bytes/s
  double hbm_latency = 100e-9;       // s
  double compute_energy = 0.5e-12;   // J/FLOP (2 TFLOPS/W)
  double hbm_energy = 6.0e-12;       // J/bit

  void validate() const;
};

inline constexpr double kFecLatency = 210e-9;
inline constexpr double kDefaultDiePitchMm = 33.25;

struct LinkSpec {
  double bandwidth = 4e12;           // bytes/s per direction
  double latency = 200e-9;           // s
  double energy = 5.0e-12;           // J/bit
  double max_length_mm = 50.0;
  double fec_penalty = 0.0;          // added per hop; set to kFecLatency for what-if runs

  double hop_latency() const { return latency + fec_penalty; }
  void validate() const;
};

class WaferTopology {
 public:
  WaferTopology() = default;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int die_count() const { return rows_ * cols_; }
  int link_slot_count() const { return die_count() * 4; }
  const DieSpec& die_spec() const { return die_; }
  const LinkSpec& link_spec() const { return link_; }
  double die_pitch_mm() const { return pitch_mm_; }

  Coord coord(DieId d) const { return {d / cols_, d % cols_}; }
  DieId id(Coord c) const { return c.row * cols_ + c.col; }
  bool in_bounds(Coord c) const {
    return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_;
  }
  bool valid_die(DieId d) const { return d >= 0 && d < die_count(); }

  // Physical neighbor in direction `dir`, if on the mesh.
  std::optional<DieId> neighbor(DieId d, Dir dir) const;
  // Directed channel a->b if the dies are physically adjacent (enabled or not).
  std::optional<LinkId> link_between(DieId a, DieId b) const;
  DieId link_src(LinkId l) const { return l / 4; }
  DieId link_dst(LinkId l) const;
  bool link_exists(LinkId l) const;

  bool die_enabled(DieId d) const { return valid_die(d) && !die_disabled_[d]; }
  bool link_enabled(LinkId l) const;
  double compute_scale(DieId d) const { return compute_scale_[d]; }
  double peak_compute(DieId d) const { return die_.peak_compute * compute_scale_[d]; }

  std::vector<DieId> enabled_dies() const;
  int enabled_die_count() const;
  // Enabled mesh neighbors reachable over an enabled outgoing channel.
  std::vector<DieId> neighbors(DieId d) const;
  // Undirected physical pairs (a < b) with at least one enabled direction.
  std::vector<std::pair<DieId, DieId>> undirected_links() const;
  int undirected_link_count() const { return static_cast<int>(undirected_links().size()); }
  std::vector<LinkId> disabled_links() const;

  // Every enabled die reaches every other over enabled channels.
  bool connected() const;

  // Fault hooks. Used on copies; a built topology is otherwise read-only.
  void disable_link(LinkId l);
  void disable_die(DieId d);
  void set_compute_scale(DieId d, double scale);

  std::string link_name(LinkId l) const;

 private:
  friend WaferTopology build_mesh(int, int, const DieSpec&, const LinkSpec&, double);

  int rows_ = 0;
  int cols_ = 0;
  DieSpec die_;
  LinkSpec link_;
  double pitch_mm_ = kDefaultDiePitchMm;
  std::vector<char> link_present_;    // per slot: physical channel built
  std::vector<char> link_disabled_;
  std::vector<char> die_disabled_;
  std::vector<double> compute_scale_;
};

// Throws InvalidArgument on zero dims, bad specs, or a pitch longer than the
// link reach (the mesh would have no links).
WaferTopology build_mesh(int rows, int cols, const DieSpec& die = {}, const LinkSpec& link = {},
                         double die_pitch_mm = kDefaultDiePitchMm);

struct RingEmbedding {
  std::vector<DieId> die_cycle;
  bool contiguous = false;
};

// Hamiltonian cycle over the induced subgraph. Groups of one or two connected
// dies count as degenerate rings.
RingEmbedding find_ring_embedding(const WaferTopology& topo, std::span<const DieId> dies);

// Hamiltonian path over the induced subgraph, or nullopt.
std::optional<std::vector<DieId>> find_chain_embedding(const WaferTopology& topo,
                                                       std::span<const DieId> dies);

// True when consecutive entries are joined by enabled channels both ways.
bool is_chain(const WaferTopology& topo, std::span<const DieId> order);

struct Path {
  std::vector<DieId> dies;  // src ... dst
  int hops() const { return static_cast<int>(dies.size()) - 1; }
  friend bool operator==(const Path&, const Path&) = default;
};

std::vector<LinkId> path_links(const WaferTopology& topo, const Path& p);

// Dimension-order path (columns first for XY, rows first for YX) ignoring faults.
Path xy_path(const WaferTopology& topo, DieId src, DieId dst);
Path yx_path(const WaferTopology& topo, DieId src, DieId dst);
bool path_usable(const WaferTopology& topo, const Path& p);

// All minimal-hop paths over enabled channels, XY first and YX second when
// they survive. At most `cap` paths. Throws NoRouteError if unreachable.
std::vector<Path> shortest_paths(const WaferTopology& topo, DieId src, DieId dst,
                                 std::size_t cap = 64);

}  // namespace wsc
