#include "wsc/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "wsc/errors.hpp"
#include "wsc/plan.hpp"

namespace wsc {

void EfficiencyParams::validate() const {
  if (!(compute_utilization > 0 && compute_utilization <= 1))
    throw ConfigError("compute_utilization", "must be in (0, 1]");
  if (!(link_efficiency > 0 && link_efficiency <= 1)) throw ConfigError("link_efficiency", "must be in (0, 1]");
  if (!(message_overhead >= 0)) throw ConfigError("message_overhead", "must be >= 0");
}

double comp_time(const OpShard& shard, const DieSpec& die, const EfficiencyParams& eff) {
  if (!(shard.compute_scale > 0)) throw InvalidArgument("compute_time on a die with no compute");
  double t = shard.flops / (die.peak_compute * shard.compute_scale * eff.compute_utilization);
  if (shard.working_set_bytes > die.sram_bytes) t = std::max(t, shard.working_set_bytes / die.hbm_bandwidth);
  return t;
}

namespace {

int flow_share(const RoutePlan& plan, const TrafficMatrix& tm, int f) {
  int share = 1;
  const int round = plan.flows[f].round;
  for (LinkId l : plan.paths[f]) {
    if (round >= 0 && round < tm.rounds) {
      share = std::max(share, tm.flows_at(round, l));
    } else {
      for (int r = 0; r < tm.rounds; ++r) share = std::max(share, tm.flows_at(r, l));
    }
  }
  return share;
}

}  // namespace

std::vector<double> transfer_times(const RoutePlan& plan, const TrafficMatrix& traffic, const LinkSpec& link,
                                   const EfficiencyParams& eff) {
  const double bw = link.bandwidth * eff.link_efficiency;
  const double lat = link.hop_latency();
  std::vector<double> out(plan.ops.size(), 0.0);
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const CommOp& op = plan.ops[i];
    auto [b, e] = plan.flow_range(static_cast<int>(i));
    if (b == e) continue;
    int share = 1;
    std::size_t hops = 0;
    for (int f = b; f < e; ++f) {
      share = std::max(share, flow_share(plan, traffic, f));
      hops = std::max(hops, plan.paths[f].size());
    }
    const double rate = bw / share;
    if (op.collective()) {
      const double p = static_cast<double>(op.group.size());
      if (p < 2) continue;
      const double factor = op.kind == CommKind::AllReduce ? 2.0 : 1.0;
      out[i] = factor * (p - 1) / p * op.bytes / rate + factor * (p - 1) * static_cast<double>(hops) * lat;
    } else {
      out[i] = op.bytes / rate + static_cast<double>(hops) * lat + eff.message_overhead;
    }
  }
  return out;
}

StageCost stage_comm(const RoutePlan& plan, const WaferTopology& topo, const EfficiencyParams& eff) {
  StageCost c;
  if (plan.ops.empty()) return c;
  TrafficMatrix tm = link_loads(plan, topo);
  auto t = transfer_times(plan, tm, topo.link_spec(), eff);
  std::map<int, double> round_max;
  // Independent groups of the same collective run side by side.
  std::map<std::pair<int, double>, double> coll;
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const CommOp& op = plan.ops[i];
    if (op.collective()) {
      auto& v = coll[{static_cast<int>(op.kind), op.bytes}];
      v = std::max(v, t[i]);
    } else {
      auto& v = round_max[op.round];
      v = std::max(v, t[i]);
    }
  }
  for (const auto& [_, v] : round_max) c.p2p += v;
  for (const auto& [_, v] : coll) c.collective += v;
  return c;
}

double reshard_time(const RoutePlan& plan, const WaferTopology& topo, const EfficiencyParams& eff) {
  if (plan.ops.empty()) return 0;
  TrafficMatrix tm = link_loads(plan, topo);
  auto t = transfer_times(plan, tm, topo.link_spec(), eff);
  return *std::max_element(t.begin(), t.end());
}

namespace {

double working_set(const ShardLayout& l, int rank) {
  return l.bytes(rank, Role::Input) + static_cast<double>(l.ranks[rank].weight_compute.volume()) * l.width +
         l.bytes(rank, Role::Output);
}

}  // namespace

OpCostEntry evaluate_op(const OpPlan& p, const WaferTopology& topo, const EfficiencyParams& eff) {
  OpCostEntry e;
  e.op = p.op.id;
  e.name = p.op.name;
  e.strategy = p.cfg.tuple();
  const int P = p.layout.rank_count();
  for (int s = 0; s < kStageCount; ++s) {
    const Stage stage = static_cast<Stage>(s);
    StageCost sc = stage_comm(p.routes[s], topo, eff);
    std::map<DieId, OpShard> per_die;
    for (int r = 0; r < P; ++r) {
      DieId d = p.assignment.rank_to_die[r];
      OpShard& sh = per_die[d];
      double f = rank_flops(p.op, p.layout, r, stage);
      sh.flops += f;
      sh.compute_scale = topo.compute_scale(d);
      if (f > 0) sh.working_set_bytes += working_set(p.layout, r);
    }
    for (const auto& [d, sh] : per_die) {
      if (sh.flops <= 0) continue;
      sc.comp = std::max(sc.comp, comp_time(sh, topo.die_spec(), eff));
      e.flops += sh.flops;
      e.hbm_bytes += sh.working_set_bytes;
    }
    e.stages[s] = sc;
    e.comp += sc.comp;
    e.p2p += sc.p2p;
    e.collective += sc.collective;
    e.t_intra += sc.t();
    e.link_bytes += link_bytes(p.routes[s]);
  }
  return e;
}

namespace {

// Activation bytes kept from forward to backward.
double stash_bytes(const OpPlan& p, int rank) {
  switch (p.op.kind) {
    case OpKind::Linear:
    case OpKind::LayerNorm:
    case OpKind::GeLU:
    case OpKind::SiLU:
    case OpKind::Softmax:
      return p.layout.bytes(rank, Role::Input);
    case OpKind::FusedAttention:
      return p.layout.bytes(rank, Role::Input) + p.layout.bytes(rank, Role::Output);
    case OpKind::ResidualAdd:
    case OpKind::Embedding:
      return 0;
  }
  return 0;
}

double transient_bytes(const OpPlan& p, int rank) {
  const ShardLayout& l = p.layout;
  double t = l.bytes(rank, Role::Output);
  if (p.schedule) {
    double sub = 0;
    if (p.op.kind == OpKind::FusedAttention) {
      sub = l.bytes(rank, Role::Input) * 2.0 / 3.0 * p.cfg.sp;
    } else {
      sub = l.choice == TransferChoice::Weight ? static_cast<double>(l.ranks[rank].weight_compute.volume()) * l.width
                                               : l.bytes(rank, Role::Input);
    }
    t += p.verdict.buffer_peak * sub;
  }
  if (p.cfg.fsdp && is_gemm(p.op.kind)) t += static_cast<double>(l.ranks[rank].weight_compute.volume()) * l.width;
  return t;
}

}  // namespace

MemoryReport memory_peak(const ComputeGraph& graph, const ExecutionPlan& plan) {
  if (!plan.topology) throw InvalidArgument("plan has no topology");
  const WaferTopology& topo = *plan.topology;
  if (plan.ops.size() != graph.ops.size()) throw InvalidArgument("plan does not cover the graph");
  const int D = topo.die_count();
  std::vector<double> weights(D, 0), stash(D, 0), transient(D, 0);
  for (const auto& op : plan.ops) {
    const OpPlan& p = *op;
    std::vector<double> tr(D, 0);
    for (int r = 0; r < p.layout.rank_count(); ++r) {
      DieId d = p.assignment.rank_to_die[r];
      weights[d] += kBytesPerParam * static_cast<double>(p.layout.ranks[r].weight.volume());
      stash[d] += stash_bytes(p, r);
      tr[d] += transient_bytes(p, r);
    }
    for (int d = 0; d < D; ++d) transient[d] = std::max(transient[d], tr[d]);
  }
  MemoryReport m;
  m.capacity = topo.die_spec().hbm_bytes;
  m.per_die.resize(D);
  for (int d = 0; d < D; ++d) {
    m.per_die[d] = weights[d] + stash[d] + transient[d];
    if (m.peak_die < 0 || m.per_die[d] > m.peak) {
      m.peak = m.per_die[d];
      m.peak_die = d;
    }
  }
  if (m.peak_die >= 0) {
    m.weights = weights[m.peak_die];
    m.activations = stash[m.peak_die];
    m.transient = transient[m.peak_die];
  }
  m.oom = m.peak > m.capacity;
  return m;
}

EnergyReport energy(const ComputeGraph&, const ExecutionPlan& plan, const CostReport& r) {
  const WaferTopology& topo = *plan.topology;
  EnergyReport e;
  e.compute_joules = r.flops * topo.die_spec().compute_energy;
  e.d2d_joules = r.traffic_bytes * 8.0 * topo.link_spec().energy;
  e.hbm_joules = r.hbm_bytes * 8.0 * topo.die_spec().hbm_energy;
  e.joules = e.compute_joules + e.d2d_joules + e.hbm_joules;
  e.watts = r.t_total > 0 ? e.joules / r.t_total : 0;
  e.tokens_per_joule = e.joules > 0 ? r.tokens / e.joules : 0;
  return e;
}

CostReport total_cost(const ComputeGraph& graph, const ExecutionPlan& plan) {
  if (!plan.complete(graph)) throw InvalidArgument("plan does not cover the graph");
  const WaferTopology& topo = *plan.topology;
  CostReport r;
  for (std::size_t i = 0; i < graph.ops.size(); ++i) {
    OpCostEntry e = evaluate_op(*plan.ops[i], topo, plan.eff);
    e.op = graph.ops[i].id;
    e.name = graph.ops[i].name;
    r.t_intra_sum += e.t_intra;
    r.comp += e.comp;
    r.p2p += e.p2p;
    r.collective += e.collective;
    r.flops += e.flops;
    r.hbm_bytes += e.hbm_bytes;
    r.traffic_bytes += e.link_bytes;
    r.ops.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    EdgeCostEntry e;
    e.producer = graph.edges[i].first;
    e.consumer = graph.edges[i].second;
    e.residual = graph.is_residual(graph.edges[i]);
    for (const RoutePlan& rp : plan.edges[i]->routes) {
      e.t_inter += reshard_time(rp, topo, plan.eff);
      e.link_bytes += link_bytes(rp);
    }
    r.t_inter_sum += e.t_inter;
    r.traffic_bytes += e.link_bytes;
    r.edges.push_back(e);
  }
  r.t_total = r.t_intra_sum + r.t_inter_sum;
  if (!graph.ops.empty()) {
    const Dims& d = graph.ops.front().dims;
    r.tokens = static_cast<double>(d.B * d.M);
  }
  r.throughput = r.t_total > 0 ? r.tokens / r.t_total : 0;
  r.memory = memory_peak(graph, plan);
  r.energy = energy(graph, plan, r);
  return r;
}

}  // namespace wsc
