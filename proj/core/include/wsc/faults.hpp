#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wsc/plan.hpp"
#include "wsc/topology.hpp"

namespace wsc {

struct FaultSpec {
  std::vector<LinkId> links;             // explicit directed channels
  double link_rate = 0;                  // fraction of undirected links, both directions
  std::map<DieId, double> core_fraction;  // explicit failed-core fraction per die
  double core_rate = 0;                  // independent per-core failure probability
  int cores_per_die = 64;
  std::uint64_t seed = 1;
  void validate(const WaferTopology& topo) const;
};

enum class FaultKind { Link, Core, Die };
const char* to_string(FaultKind k);

struct FaultRecord {
  FaultKind kind = FaultKind::Link;
  DieId die = -1;
  LinkId link = -1;
  double fraction = 0;   // failed-core fraction (core faults)
  std::string location;  // "(r,c)" or "(r,c)->(r,c)"
};

struct FaultReport {
  std::vector<FaultRecord> faults;
  int disabled_links = 0;  // directed channels
  int disabled_dies = 0;
  int enabled_dies = 0;
  bool feasible = true;    // at least one die still usable
};

struct DegradedTopology {
  WaferTopology topology;
  FaultReport report;
};

// Rates draw from fixed seeded streams, so a higher rate disables a superset
// of what a lower rate disables. Dies cut off from the largest connected
// component, or with every core failed, are disabled.
DegradedTopology inject_faults(const WaferTopology& topo, const FaultSpec& spec);

struct RecoverOptions {
  EvaluatorOptions eval;
  bool rebalance = true;
  double budget_seconds = 120;  // when a fresh search is needed
};

struct RecoverResult {
  ExecutionPlan plan;
  bool ok = false;
  bool replaced = false;  // placement or configs had to change
  std::string message;
};

// Per-op split weights proportional to the compute of each rank's die.
SplitWeights rebalance_splits(const OpPlan& p, const WaferTopology& degraded);

// Keeps configs and genes where possible (falling back to snake placement,
// then to a fresh search), rebalances slices and reroutes on the degraded mesh.
RecoverResult recover_plan(const ComputeGraph& g, const ExecutionPlan& plan,
                           std::shared_ptr<const WaferTopology> degraded, const RecoverOptions& opts = {});

// True when every rank sits on an enabled die and every routed path uses
// enabled channels of `topo`.
bool plan_fits(const ExecutionPlan& plan, const WaferTopology& topo);

struct SweepPoint {
  double rate = 0;
  int enabled_dies = 0;
  int disabled_links = 0;
  bool ok = false;
  double t_total = 0;
  double throughput = 0;
  double normalized = 0;  // healthy t_total / recovered t_total
  bool carried = false;   // plan recovered at a higher rate was cheaper here
  std::string message;
};

// Injects `kind` faults (Link or Core) at each rate with one seed and recovers
// `healthy` on each degraded mesh. Fault sets nest across rates, so a plan
// recovered at a higher rate is also valid at a lower one; each point keeps
// the cheaper of its own recovery and any such plan. Points follow `rates`.
std::vector<SweepPoint> fault_sweep(const ComputeGraph& g, const ExecutionPlan& healthy, const WaferTopology& topo,
                                    FaultKind kind, const std::vector<double>& rates, std::uint64_t seed = 1,
                                    const RecoverOptions& opts = {});

}  // namespace wsc
