#pragma once

#include <array>
#include <string>
#include <vector>

#include "wsc/parallelism.hpp"
#include "wsc/routing.hpp"
#include "wsc/topology.hpp"
#include "wsc/workload.hpp"

namespace wsc {

// Calibration knobs, not measured values.
struct EfficiencyParams {
  double compute_utilization = 0.8;
  double link_efficiency = 0.9;
  double message_overhead = 1e-6;  // seconds per P2P message
  void validate() const;
};

struct OpShard {
  double flops = 0;
  double working_set_bytes = 0;
  double compute_scale = 1.0;  // surviving-core fraction of the die
};

// flops / (peak * scale * eta), raised to the HBM streaming time when the
// working set does not fit in SRAM.
double comp_time(const OpShard& shard, const DieSpec& die, const EfficiencyParams& eff);

// Seconds for each plan.ops entry. Contention divides a link equally among the
// flows sharing it in the same round.
std::vector<double> transfer_times(const RoutePlan& plan, const TrafficMatrix& traffic, const LinkSpec& link,
                                   const EfficiencyParams& eff);

struct StageCost {
  double comp = 0;
  double p2p = 0;
  double collective = 0;
  double t() const { return collective + (comp > p2p ? comp : p2p); }
};

// Stage terms from routed ops: P2P sums the slowest send of each round (bulk
// P2P all at once); collectives run back to back.
StageCost stage_comm(const RoutePlan& plan, const WaferTopology& topo, const EfficiencyParams& eff);

struct OpCostEntry {
  OpId op = -1;
  std::string name;
  std::string strategy;
  std::array<StageCost, kStageCount> stages{};
  double comp = 0;
  double p2p = 0;
  double collective = 0;
  double t_intra = 0;
  double flops = 0;       // summed over dies and stages
  double hbm_bytes = 0;   // summed over dies and stages
  double link_bytes = 0;
};

struct EdgeCostEntry {
  OpId producer = -1;
  OpId consumer = -1;
  bool residual = false;
  double t_inter = 0;
  double link_bytes = 0;
};

struct MemoryReport {
  std::vector<double> per_die;  // bytes
  double peak = 0;
  DieId peak_die = -1;
  double weights = 0;      // on the peak die
  double activations = 0;  // on the peak die
  double transient = 0;    // on the peak die
  double capacity = 0;
  bool oom = false;
};

struct EnergyReport {
  double joules = 0;
  double watts = 0;
  double tokens_per_joule = 0;
  double compute_joules = 0;
  double d2d_joules = 0;
  double hbm_joules = 0;
};

struct CostReport {
  double t_total = 0;
  double t_intra_sum = 0;
  double t_inter_sum = 0;
  double comp = 0;
  double p2p = 0;
  double collective = 0;
  std::vector<OpCostEntry> ops;
  std::vector<EdgeCostEntry> edges;
  MemoryReport memory;
  double traffic_bytes = 0;  // link bytes
  double flops = 0;
  double hbm_bytes = 0;
  double tokens = 0;
  double throughput = 0;     // tokens per second
  EnergyReport energy;
};

struct ExecutionPlan;
struct OpPlan;

// Per-op cost: each stage is Collective + max(Comp, P2P).
OpCostEntry evaluate_op(const OpPlan& p, const WaferTopology& topo, const EfficiencyParams& eff);
// Reshard time of one routed transfer set (all bulk, concurrent).
double reshard_time(const RoutePlan& plan, const WaferTopology& topo, const EfficiencyParams& eff);

CostReport total_cost(const ComputeGraph& graph, const ExecutionPlan& plan);
MemoryReport memory_peak(const ComputeGraph& graph, const ExecutionPlan& plan);
EnergyReport energy(const ComputeGraph& graph, const ExecutionPlan& plan, const CostReport& report);

inline constexpr double kBytesPerParam = 16.0;  // fp16 weight + fp16 grad + fp32 master and Adam moments

}  // namespace wsc
