#pragma once

#include <span>
#include <string>
#include <vector>

#include "wsc/parallelism.hpp"
#include "wsc/topology.hpp"

namespace wsc {

// One unicast transfer derived from a CommOp. Ring collectives expand into one
// flow per consecutive pair (with wrap), each active for the whole stage.
struct Flow {
  int op = 0;          // index into RoutePlan::ops
  DieId src = 0;
  DieId dst = 0;
  double bytes = 0;
  int round = -1;      // -1: bulk
  std::uint64_t payload = 0;
};

struct MulticastTree {
  DieId root = 0;
  std::uint64_t payload = 0;
  int round = -1;
  double bytes = 0;
  std::vector<LinkId> edges;  // directed, acyclic, spans all member destinations
  std::vector<int> flows;     // member flow indices
};

struct RoutePlan {
  std::vector<CommOp> ops;
  std::vector<Flow> flows;
  std::vector<std::vector<LinkId>> paths;  // per flow; tree members keep their tree path here
  std::vector<int> tree_of;                // per flow, -1 when unicast
  std::vector<MulticastTree> trees;
  std::vector<int> op_flow_begin;          // flows of ops[i]: [begin[i], begin[i+1])
  int rounds = 1;
  int iterations = 0;                      // optimizer moves applied

  std::pair<int, int> flow_range(int op) const { return {op_flow_begin[op], op_flow_begin[op + 1]}; }
};

struct TrafficMatrix {
  int links = 0;
  int rounds = 1;
  std::vector<double> bytes;  // [round * links + link]; bulk bytes spread evenly over rounds
  std::vector<int> flows;     // bulk flows counted in every round

  double bytes_at(int round, LinkId l) const { return bytes[static_cast<std::size_t>(round) * links + l]; }
  int flows_at(int round, LinkId l) const { return flows[static_cast<std::size_t>(round) * links + l]; }
  int max_flows() const;
  double total_bytes() const;

  struct Hot {
    LinkId link = -1;
    int round = 0;
    int flows = 0;
    double bytes = 0;
  };
  // Ties: lowest link id, then lowest round.
  Hot most_congested() const;
  int links_at(int flow_count) const;  // distinct links reaching this count in some round

  // CSV: round,link,bytes,flows (nonzero cells only).
  std::string to_csv(const WaferTopology& topo) const;
};

struct OptimizerParams {
  int max_iter = 64;
  double improvement_epsilon = 0.01;
  bool allow_multicast = true;
  bool allow_reorder = true;
  void validate() const;
};

struct OptimizerStep {
  int iteration = 0;
  std::string move;
  int max_flows = 0;
  int cells_at_max = 0;
};

// Expands ops into flows routed XY (or the first surviving minimal path on a
// faulted mesh). Throws NoRouteError when an endpoint is unreachable.
RoutePlan init_routes(std::span<const CommOp> ops, const WaferTopology& topo);

TrafficMatrix link_loads(const RoutePlan& plan, const WaferTopology& topo);

// Iterates: find the most congested (link, round); merge same-source,
// same-payload flows into multicast trees; reroute congested flows; reorder
// collective rings and stream chains. A move is kept only if it lowers
// (max flows, cells at max), or link bytes by more than epsilon.
RoutePlan optimize_routes(RoutePlan plan, const WaferTopology& topo, const OptimizerParams& params = {},
                          std::vector<OptimizerStep>* trace = nullptr);

// Payload bytes delivered (one count per destination). Invariant under
// rerouting and merging.
double delivered_bytes(const RoutePlan& plan);
// Bytes times links traversed; multicast edges count once per tree.
double link_bytes(const RoutePlan& plan);

// Every flow still connects its endpoints over enabled links.
bool routes_valid(const RoutePlan& plan, const WaferTopology& topo);

// Bytes carried by each flow of a collective ring.
double ring_flow_bytes(const CommOp& op);

}  // namespace wsc
