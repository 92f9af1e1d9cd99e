#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wsc/costmodel.hpp"
#include "wsc/parallelism.hpp"
#include "wsc/routing.hpp"
#include "wsc/tatp.hpp"

namespace wsc {

// Everything needed to run one operator under one config. Cached plans are
// shape-generic: `op.id` is 0 and names are blank.
struct OpPlan {
  Operator op;
  ParallelConfig cfg;
  PlacementGenes genes;
  SplitWeights splits;
  GroupAssignment assignment;
  ShardLayout layout;
  std::optional<StreamSchedule> schedule;
  ScheduleVerdict verdict;
  std::array<RoutePlan, kStageCount> routes;
};

struct EdgePlan {
  std::array<RoutePlan, 2> routes;  // forward activations, backward gradients
};

struct ExecutionPlan {
  std::shared_ptr<const WaferTopology> topology;
  EfficiencyParams eff;
  PlacementGenes genes;
  std::vector<std::shared_ptr<const OpPlan>> ops;      // aligned with graph.ops
  std::vector<std::shared_ptr<const EdgePlan>> edges;  // aligned with graph.edges
  CostReport report;

  std::vector<ParallelConfig> configs() const;
  bool complete(const ComputeGraph& g) const;
};

struct EvaluatorOptions {
  EfficiencyParams eff;
  OptimizerParams routing;
  bool optimize_routes = true;
  bool allow_multihop_streams = true;
};

struct OpEval {
  std::shared_ptr<const OpPlan> plan;
  OpCostEntry cost;
  int in_class = -1;   // interned placement of the input role
  int out_class = -1;  // interned placement of the output role
  double memory = 0;   // max over dies of weight state + stashed activations
};

// Builds and caches per-op plans, reshard transfers and their costs for one
// topology. Not thread-safe; use one per worker.
class PlanEvaluator {
 public:
  PlanEvaluator(std::shared_ptr<const WaferTopology> topo, EvaluatorOptions opts = {});

  const WaferTopology& topology() const { return *topo_; }
  std::shared_ptr<const WaferTopology> topology_ptr() const { return topo_; }
  const EvaluatorOptions& options() const { return opts_; }

  // Throws InvalidArgument (placement or divisibility) or NoRouteError.
  const OpEval& op(const Operator& op, const ParallelConfig& cfg, const PlacementGenes& genes,
                   const SplitWeights& splits = {});
  // Reshard cost between a producer output class and a consumer input class.
  double inter(const OpEval& producer, const OpEval& consumer);
  // Cheap bound <= inter(): no contention, minimal hop counts.
  double inter_lower_bound(const OpEval& producer, const OpEval& consumer);
  std::shared_ptr<const EdgePlan> edge_plan(const OpEval& producer, const OpEval& consumer);

  // Full plan + report for one config per op.
  ExecutionPlan build(const ComputeGraph& g, const std::vector<ParallelConfig>& configs, const PlacementGenes& genes,
                      const std::vector<SplitWeights>& splits = {});

  std::size_t cached_ops() const { return ops_.size(); }
  void clear();

 private:
  int intern(std::string key);
  static std::string splits_key(const SplitWeights& s);

  std::shared_ptr<const WaferTopology> topo_;
  EvaluatorOptions opts_;
  RingCache rings_;
  std::map<std::string, OpEval> ops_;
  std::map<std::string, std::string> failures_;
  std::map<std::string, int> classes_;
  std::vector<std::string> class_keys_;
  struct EdgeEntry {
    std::shared_ptr<const EdgePlan> plan;
    double t = 0;
  };
  std::map<std::pair<int, int>, EdgeEntry> edges_;
  std::map<std::pair<int, int>, double> bounds_;
};

// Builds an op plan without caching (uniform use from tests and recovery).
OpPlan make_op_plan(const WaferTopology& topo, const Operator& op, const ParallelConfig& cfg,
                    const PlacementGenes& genes, const SplitWeights& splits, const EvaluatorOptions& opts,
                    RingCache& rings);

}  // namespace wsc
