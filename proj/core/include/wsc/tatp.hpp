#pragma once

#include <span>
#include <string>
#include <vector>

#include "wsc/parallelism.hpp"

namespace wsc {

struct StreamSend {
  int src = 0;
  int dst = 0;
  int item = 0;  // sub-tensor index
  friend bool operator==(const StreamSend&, const StreamSend&) = default;
};

struct StreamRound {
  std::vector<int> compute;       // compute[die] = sub-tensor index used this round
  std::vector<StreamSend> sends;  // delivered before the next round
};

struct StreamSchedule {
  int n_dies = 1;
  std::vector<StreamRound> rounds;
  TransferChoice transfer_choice = TransferChoice::Weight;

  std::size_t send_count() const;
};

struct ScheduleVerdict {
  bool coverage_ok = false;
  bool availability_ok = false;
  bool hop_ok = false;
  int buffer_peak = 1;
  int max_link_load = 0;  // sends on one directed chain edge in one round
  bool ok() const { return coverage_ok && availability_ok && hop_ok; }
};

// Compute index of chain position `die` in round `t`.
int stream_compute_index(int n, int die, int t);

// Bidirectional one-hop schedule. Each die streams its own sub-tensor outward;
// relays are store-and-forward, one hop per round.
StreamSchedule generate_stream_schedule(int n, TransferChoice choice = TransferChoice::Weight);

// Unidirectional ring (die i uses sub-tensor (i+t) mod n) with a wrap send
// from die 0 to die n-1. Fails hop_ok on a chain for n > 2.
StreamSchedule naive_ring_schedule(int n, TransferChoice choice = TransferChoice::Weight);

// Forward simulation: a die always keeps its own sub-tensor; anything received
// stays resident for exactly the next round.
ScheduleVerdict verify_schedule(const StreamSchedule& s);

// Weight when the per-group weight sub-block is no larger than the input one.
TransferChoice select_transfer_operand(const Operator& op, const ParallelConfig& cfg);

struct StreamBinding {
  int stream = 0;
  Stage stage = Stage::Fwd;
  OpId op = -1;
  bool strict = true;           // require a one-hop chain
  std::uint64_t payload_salt = 0;
};

// One P2P-stream CommOp per send. Strict mode throws TopologyMismatch when the
// group is not a mesh-adjacent chain in the given order.
std::vector<CommOp> schedule_to_comm_ops(const StreamSchedule& s, const WaferTopology& topo,
                                         std::span<const DieId> group, double bytes_per_subtensor,
                                         const StreamBinding& bind = {});
// Per-position sub-tensor sizes (rebalanced layouts).
std::vector<CommOp> schedule_to_comm_ops(const StreamSchedule& s, const WaferTopology& topo,
                                         std::span<const DieId> group,
                                         std::span<const double> bytes_per_position,
                                         const StreamBinding& bind = {});

// One line per (round, die, action).
std::string dump_schedule(const StreamSchedule& s);

// Runs the schedule on real matrices. Position p owns row block p of I
// ([m, n] row-major) and column block p of W ([n, k] row-major); blocks are
// moved exactly as the schedule says. Throws InternalError if an operand is
// missing when needed. Returns O ([m, k] row-major).
std::vector<float> stream_gemm(const StreamSchedule& s, int m, int n, int k,
                               std::span<const float> input, std::span<const float> weight);

}  // namespace wsc
