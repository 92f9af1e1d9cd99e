#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wsc/plan.hpp"

namespace wsc {

struct GAParams {
  int population = 32;
  int generations = 50;
  double crossover = 0.8;
  double mutation = 0.1;
  double elite = 0.1;
  std::uint64_t seed = 1;
  void validate() const;
};

struct TracePoint {
  int generation = 0;
  double best_cost = 0;
  double seconds = 0;
};

// Powers of two per axis, product equal to `dies` (or dividing it when
// !exact_product). CP and FSDP variants only on request.
std::vector<ParallelConfig> candidate_configs(int dies, bool exact_product = true, int max_degree = 32,
                                              bool with_cp = false, bool with_fsdp = false);

// Distinct placement gene vectors for the given configs, de-duplicated by the
// group assignments they produce. Intended for small meshes.
std::vector<PlacementGenes> enumerate_genes(const WaferTopology& topo, const std::vector<ParallelConfig>& configs,
                                            std::size_t limit = 4096);

struct ChainResult {
  std::vector<ParallelConfig> configs;  // one per op
  double cost = std::numeric_limits<double>::infinity();  // t_total under the cost model
  bool found = false;
};

// Min-cost config chain for a graph whose edges are all covered by the DP
// state (the live producers' output placements). Exact for the candidate set.
// Throws InvalidArgument on an empty candidate set.
ChainResult dp_search(const ComputeGraph& g, PlanEvaluator& ev, const std::vector<ParallelConfig>& candidates,
                      const PlacementGenes& genes = {}, double memory_weight = 0.0);
ChainResult dp_search(const ComputeGraph& g, const WaferTopology& topo, const std::vector<ParallelConfig>& candidates,
                      const EvaluatorOptions& opts = {});

struct BruteForceResult {
  ExecutionPlan plan;
  double cost = std::numeric_limits<double>::infinity();
  std::size_t combinations = 0;
  bool found = false;
};

// Every config chain times every gene vector (default: enumerate_genes).
// Throws CapExceeded past `cap` combinations. OOM plans are skipped.
BruteForceResult brute_force(const ComputeGraph& g, const WaferTopology& topo,
                             const std::vector<ParallelConfig>& candidates,
                             std::optional<std::vector<PlacementGenes>> genes = std::nullopt,
                             const EvaluatorOptions& opts = {}, std::size_t cap = 1'000'000);

struct RefineOptions {
  GAParams ga;
  // Fitness runs the full DP per gene vector when ops*candidates is at most
  // this; otherwise the initial plan's config chain is kept fixed.
  std::size_t dp_fitness_limit = 64;
  std::vector<ParallelConfig> candidates;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct RefineResult {
  ExecutionPlan plan;
  std::vector<TracePoint> trace;
  int evaluations = 0;
  bool dp_fitness = false;
};

RefineResult ga_refine(const ComputeGraph& g, const ExecutionPlan& initial, PlanEvaluator& ev,
                       const RefineOptions& opts = {});
ExecutionPlan ga_refine(const ComputeGraph& g, const ExecutionPlan& initial, const WaferTopology& topo,
                        const GAParams& params, const EvaluatorOptions& opts = {});

struct SolverOptions {
  EvaluatorOptions eval;
  GAParams ga;
  bool refine = true;
  double budget_seconds = 600;
  std::vector<ParallelConfig> candidates;  // empty: candidate_configs(enabled dies)
  std::size_t dp_fitness_limit = 64;
};

struct SolveResult {
  ExecutionPlan plan;
  bool feasible = false;
  double memory_gap = 0;  // bytes over capacity on the worst die when infeasible
  int subgraphs = 0;
  bool budget_exhausted = false;
  double seconds = 0;
  std::vector<TracePoint> trace;
  std::string message;
};

// Split for reporting, one DP pass over the chain (exact across single-tensor
// cuts), GA over placement genes, then the final routed plan.
SolveResult solve(const ComputeGraph& g, std::shared_ptr<const WaferTopology> topo, const SolverOptions& opts = {});

}  // namespace wsc
