#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsc/topology.hpp"
#include "wsc/workload.hpp"

namespace wsc {

enum class Axis : int { DP = 0, TP = 1, SP = 2, CP = 3, TATP = 4 };
inline constexpr int kAxisCount = 5;
using AxisOrder = std::array<Axis, kAxisCount>;  // outermost first
inline constexpr AxisOrder kDefaultAxisOrder = {Axis::DP, Axis::TP, Axis::SP, Axis::CP, Axis::TATP};
const char* to_string(Axis a);

enum class TransferChoice { Weight, Input };
const char* to_string(TransferChoice c);

struct ParallelConfig {
  int dp = 1;
  int tp = 1;
  int sp = 1;
  int cp = 1;
  int tatp = 1;
  bool fsdp = false;
  AxisOrder axis_order = kDefaultAxisOrder;

  int degree(Axis a) const;
  int product() const { return dp * tp * sp * cp * tatp; }
  // Near-square factoring of tp into an (N, K) tile grid.
  int tp_n() const;
  int tp_k() const { return tp / tp_n(); }
  int m_parts() const { return sp * cp * tatp; }
  void validate() const;
  // "(DP,TP,SP,TATP)" plus ",cp=..", ",fsdp" suffixes when set.
  std::string tuple() const;
  friend bool operator==(const ParallelConfig&, const ParallelConfig&) = default;
  friend auto operator<=>(const ParallelConfig&, const ParallelConfig&) = default;
};

// Accepts "(4,1,1,8)", "4,1,1,8", optional trailing ",cp=2" / ",fsdp".
ParallelConfig parse_strategy(std::string_view text);

struct Range {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t size() const { return hi > lo ? hi - lo : 0; }
  friend bool operator==(const Range&, const Range&) = default;
  friend auto operator<=>(const Range&, const Range&) = default;
};

// Up to three tensor dims. Activations: (B, M, width). Weights: (N, K, -).
struct Box {
  std::array<Range, 3> r{};
  std::int64_t volume() const { return r[0].size() * r[1].size() * r[2].size(); }
  bool empty() const { return volume() == 0; }
  friend bool operator==(const Box&, const Box&) = default;
  friend auto operator<=>(const Box&, const Box&) = default;
};
Box intersect(const Box& a, const Box& b);

enum class Role { Input, Weight, Output };

struct RankShard {
  Box input;
  Box weight;          // stored shard (FSDP-sharded when fsdp)
  Box weight_compute;  // tile used by the matmul after any gather
  Box output;
};

// Optional non-uniform split weights, one entry per part. Empty = uniform.
struct SplitWeights {
  std::vector<double> b;  // dp parts
  std::vector<double> m;  // sp*cp*tatp parts
  std::vector<double> k;  // tatp parts inside each tp_k block
  bool uniform() const { return b.empty() && m.empty() && k.empty(); }
};

struct ShardLayout {
  OpKind kind = OpKind::Linear;
  Dims dims;
  int width = 2;
  ParallelConfig cfg;
  TransferChoice choice = TransferChoice::Weight;
  std::vector<RankShard> ranks;  // canonical rank order
  int replication_input = 1;
  int replication_weight = 1;
  int replication_output = 1;

  int rank_count() const { return static_cast<int>(ranks.size()); }
  const Box& box(int rank, Role r) const;
  double bytes(int rank, Role r) const { return static_cast<double>(box(rank, r).volume()) * width; }
  // Distinct slices for a role (the tensor's sub-tensors).
  int distinct(Role r) const;
};

// Rank coordinates in canonical radix order (DP, TP, SP, CP, TATP), TATP fastest.
std::array<int, kAxisCount> rank_coords(const ParallelConfig& cfg, int rank);
int rank_of(const ParallelConfig& cfg, const std::array<int, kAxisCount>& coords);
// Partition of ranks into groups varying over `axes`; inner axis fastest.
std::vector<std::vector<int>> rank_groups(const ParallelConfig& cfg, std::span<const Axis> axes);

// Resolves the transfer choice for GEMM-like ops when `choice` is unset.
ShardLayout shard_tensors(const Operator& op, const ParallelConfig& cfg,
                          std::optional<TransferChoice> choice = std::nullopt,
                          const SplitWeights& splits = {});

enum class TransferOverride { Auto, Weight, Input };

struct PlacementGenes {
  std::optional<AxisOrder> axis_order;          // overrides cfg.axis_order
  std::array<int, kAxisCount> row_exp{-1, -1, -1, -1, -1};  // -1: fill columns first
  int origin_row = 0;
  int origin_col = 0;
  bool snake_list = false;                      // ranks follow enabled dies in snake order
  TransferOverride transfer = TransferOverride::Auto;

  friend bool operator==(const PlacementGenes&, const PlacementGenes&) = default;
  std::string key() const;
};

struct GroupAssignment {
  ParallelConfig cfg;
  std::vector<DieId> rank_to_die;
  // groups[axis][g] lists dies by axis coordinate.
  std::array<std::vector<std::vector<DieId>>, kAxisCount> groups;

  std::vector<DieId> dies_of(const std::vector<int>& ranks) const;
  // Compact placement signature used for de-duplication.
  std::string signature() const;
};

// Throws InvalidArgument when the gene vector cannot place cfg on the mesh.
GroupAssignment assign_groups(const WaferTopology& topo, const ParallelConfig& cfg,
                              const PlacementGenes& genes = {});

enum class CommKind { AllReduce, AllGather, ReduceScatter, P2PStream, ReshardP2P };
const char* to_string(CommKind k);
enum class Stage : int { Fwd = 0, Bwd = 1, Grad = 2 };
inline constexpr int kStageCount = 3;
const char* to_string(Stage s);

struct CommOp {
  CommKind kind = CommKind::P2PStream;
  std::vector<DieId> group;   // P2P: {src, dst}; collectives: ring order
  double bytes = 0;           // collectives: full buffer size
  int round = -1;             // -1: bulk, active for the whole stage
  Stage stage = Stage::Fwd;
  std::uint64_t payload = 0;  // same (src, payload) = same data
  int stream = -1;            // stream id for P2P-stream ops
  int src_pos = -1;           // chain positions within the stream group
  int dst_pos = -1;
  OpId op = -1;

  bool collective() const {
    return kind == CommKind::AllReduce || kind == CommKind::AllGather || kind == CommKind::ReduceScatter;
  }
};

// Caches ring/chain orders for die groups on one topology.
class RingCache {
 public:
  explicit RingCache(const WaferTopology& topo) : topo_(&topo) {}
  // Ring embedding if one exists, else a chain, else the given order.
  const std::vector<DieId>& order(const std::vector<DieId>& group);
  const WaferTopology& topology() const { return *topo_; }

 private:
  const WaferTopology* topo_;
  std::map<std::vector<DieId>, std::vector<DieId>> memo_;
};

struct CommOptions {
  // Multi-hop streams for groups that are not one-hop chains.
  bool allow_multihop_streams = true;
  int stream_id_base = 0;
};

// Intra-op communication for all three stages.
std::vector<CommOp> derive_comm_ops(const Operator& op, const ParallelConfig& cfg,
                                    const ShardLayout& layout, const GroupAssignment& assignment,
                                    RingCache& rings, const CommOptions& opts = {});

// Point-to-point transfers turning `from` (producer output) into `to`
// (consumer input); each piece is fetched from its nearest holder.
std::vector<CommOp> reshard_ops(const WaferTopology& topo, const ShardLayout& from,
                                const GroupAssignment& from_assign, const ShardLayout& to,
                                const GroupAssignment& to_assign, Stage stage, OpId consumer);

// Per-rank FLOPs of one stage, derived from the rank's slices.
double rank_flops(const Operator& op, const ShardLayout& layout, int rank, Stage stage);

// Canonical per-die placement of one role, for layout-class comparisons.
std::string placement_key(const ShardLayout& layout, const GroupAssignment& assignment, Role role);

}  // namespace wsc
