#include "wsc/plan.hpp"

#include <sstream>

#include "wsc/errors.hpp"

namespace wsc {

std::vector<ParallelConfig> ExecutionPlan::configs() const {
  std::vector<ParallelConfig> out;
  out.reserve(ops.size());
  for (const auto& p : ops) out.push_back(p->cfg);
  return out;
}

bool ExecutionPlan::complete(const ComputeGraph& g) const {
  if (!topology || ops.size() != g.ops.size() || edges.size() != g.edges.size()) return false;
  for (const auto& p : ops)
    if (!p) return false;
  for (const auto& e : edges)
    if (!e) return false;
  return true;
}

OpPlan make_op_plan(const WaferTopology& topo, const Operator& op, const ParallelConfig& cfg,
                    const PlacementGenes& genes, const SplitWeights& splits, const EvaluatorOptions& opts,
                    RingCache& rings) {
  cfg.validate();
  if (cfg.product() > topo.enabled_die_count())
    throw InvalidArgument("config " + cfg.tuple() + " needs more dies than are enabled");
  OpPlan p;
  p.op = op;
  p.cfg = cfg;
  p.genes = genes;
  p.splits = splits;
  std::optional<TransferChoice> choice;
  if (genes.transfer == TransferOverride::Weight) choice = TransferChoice::Weight;
  if (genes.transfer == TransferOverride::Input) choice = TransferChoice::Input;
  p.layout = shard_tensors(op, cfg, choice, splits);
  p.assignment = assign_groups(topo, cfg, genes);
  if (cfg.tatp > 1 && (op.kind == OpKind::Linear || op.kind == OpKind::FusedAttention)) {
    TransferChoice c = op.kind == OpKind::Linear ? p.layout.choice : TransferChoice::Input;
    p.schedule = generate_stream_schedule(cfg.tatp, c);
    p.verdict = verify_schedule(*p.schedule);
  }
  CommOptions co;
  co.allow_multihop_streams = opts.allow_multihop_streams;
  auto comm = derive_comm_ops(op, cfg, p.layout, p.assignment, rings, co);
  std::array<std::vector<CommOp>, kStageCount> by_stage;
  for (auto& c : comm) by_stage[static_cast<int>(c.stage)].push_back(std::move(c));
  for (int s = 0; s < kStageCount; ++s) {
    p.routes[s] = init_routes(by_stage[s], topo);
    if (opts.optimize_routes && !by_stage[s].empty()) p.routes[s] = optimize_routes(std::move(p.routes[s]), topo, opts.routing);
  }
  return p;
}

PlanEvaluator::PlanEvaluator(std::shared_ptr<const WaferTopology> topo, EvaluatorOptions opts)
    : topo_(std::move(topo)), opts_(opts), rings_(*topo_) {
  if (!topo_) throw InvalidArgument("evaluator needs a topology");
  opts_.eff.validate();
  opts_.routing.validate();
}

void PlanEvaluator::clear() {
  ops_.clear();
  failures_.clear();
  edges_.clear();
  bounds_.clear();
  classes_.clear();
  class_keys_.clear();
}

int PlanEvaluator::intern(std::string key) {
  auto [it, fresh] = classes_.emplace(std::move(key), static_cast<int>(class_keys_.size()));
  if (fresh) class_keys_.push_back(it->first);
  return it->second;
}

std::string PlanEvaluator::splits_key(const SplitWeights& s) {
  if (s.uniform()) return "u";
  std::ostringstream os;
  os.precision(12);
  for (const auto* v : {&s.b, &s.m, &s.k}) {
    os << '[';
    for (double x : *v) os << x << ',';
    os << ']';
  }
  return os.str();
}

const OpEval& PlanEvaluator::op(const Operator& op, const ParallelConfig& cfg, const PlacementGenes& genes,
                                const SplitWeights& splits) {
  std::string key = op.shape_key() + "#" + cfg.tuple() + "#";
  for (Axis a : cfg.axis_order) key += static_cast<char>('0' + static_cast<int>(a));
  key += "#" + genes.key() + "#" + splits_key(splits);
  if (auto it = ops_.find(key); it != ops_.end()) return it->second;
  if (auto it = failures_.find(key); it != failures_.end()) throw InvalidArgument(it->second);

  Operator generic = op;
  generic.id = 0;
  generic.name.clear();
  generic.predecessors.clear();
  generic.layer = -1;
  OpEval ev;
  try {
    auto plan = std::make_shared<OpPlan>(make_op_plan(*topo_, generic, cfg, genes, splits, opts_, rings_));
    ev.cost = evaluate_op(*plan, *topo_, opts_.eff);
    ev.in_class = intern(placement_key(plan->layout, plan->assignment, Role::Input));
    ev.out_class = intern(placement_key(plan->layout, plan->assignment, Role::Output));
    std::map<DieId, double> mem;
    for (int r = 0; r < plan->layout.rank_count(); ++r) {
      double& m = mem[plan->assignment.rank_to_die[r]];
      m += kBytesPerParam * static_cast<double>(plan->layout.ranks[r].weight.volume());
      if (op.kind == OpKind::Linear || op.kind == OpKind::LayerNorm || op.kind == OpKind::GeLU ||
          op.kind == OpKind::SiLU || op.kind == OpKind::Softmax)
        m += plan->layout.bytes(r, Role::Input);
      else if (op.kind == OpKind::FusedAttention)
        m += plan->layout.bytes(r, Role::Input) + plan->layout.bytes(r, Role::Output);
    }
    for (const auto& [_, m] : mem) ev.memory = std::max(ev.memory, m);
    ev.plan = std::move(plan);
  } catch (const InvalidArgument& e) {
    failures_.emplace(key, e.what());
    throw;
  }
  return ops_.emplace(std::move(key), std::move(ev)).first->second;
}

std::shared_ptr<const EdgePlan> PlanEvaluator::edge_plan(const OpEval& producer, const OpEval& consumer) {
  inter(producer, consumer);
  return edges_.at({producer.out_class, consumer.in_class}).plan;
}

double PlanEvaluator::inter(const OpEval& producer, const OpEval& consumer) {
  const std::pair<int, int> key{producer.out_class, consumer.in_class};
  if (auto it = edges_.find(key); it != edges_.end()) return it->second.t;
  const OpPlan& a = *producer.plan;
  const OpPlan& b = *consumer.plan;
  auto ep = std::make_shared<EdgePlan>();
  double t = 0;
  for (Stage s : {Stage::Fwd, Stage::Bwd}) {
    auto ops = reshard_ops(*topo_, a.layout, a.assignment, b.layout, b.assignment, s, 0);
    RoutePlan rp = init_routes(ops, *topo_);
    if (opts_.optimize_routes && !ops.empty()) rp = optimize_routes(std::move(rp), *topo_, opts_.routing);
    t += reshard_time(rp, *topo_, opts_.eff);
    ep->routes[static_cast<int>(s)] = std::move(rp);
  }
  edges_.emplace(key, EdgeEntry{ep, t});
  return t;
}

double PlanEvaluator::inter_lower_bound(const OpEval& producer, const OpEval& consumer) {
  const std::pair<int, int> key{producer.out_class, consumer.in_class};
  if (auto it = edges_.find(key); it != edges_.end()) return it->second.t;
  if (auto it = bounds_.find(key); it != bounds_.end()) return it->second;
  const OpPlan& a = *producer.plan;
  const OpPlan& b = *consumer.plan;
  const LinkSpec& link = topo_->link_spec();
  const double rate = link.bandwidth * opts_.eff.link_efficiency;
  double lb = 0;
  for (Stage s : {Stage::Fwd, Stage::Bwd}) {
    double worst = 0;
    for (const auto& op : reshard_ops(*topo_, a.layout, a.assignment, b.layout, b.assignment, s, 0)) {
      int hops = manhattan(topo_->coord(op.group[0]), topo_->coord(op.group[1]));
      worst = std::max(worst, op.bytes / rate + hops * link.hop_latency() + opts_.eff.message_overhead);
    }
    lb += worst;
  }
  bounds_.emplace(key, lb);
  return lb;
}

ExecutionPlan PlanEvaluator::build(const ComputeGraph& g, const std::vector<ParallelConfig>& configs,
                                   const PlacementGenes& genes, const std::vector<SplitWeights>& splits) {
  if (configs.size() != g.ops.size()) throw InvalidArgument("need one config per operator");
  if (!splits.empty() && splits.size() != g.ops.size()) throw InvalidArgument("need one split per operator");
  ExecutionPlan plan;
  plan.topology = topo_;
  plan.eff = opts_.eff;
  plan.genes = genes;
  std::vector<const OpEval*> evals;
  for (std::size_t i = 0; i < g.ops.size(); ++i) {
    const OpEval& ev = op(g.ops[i], configs[i], genes, splits.empty() ? SplitWeights{} : splits[i]);
    evals.push_back(&ev);
    plan.ops.push_back(ev.plan);
  }
  for (const auto& [p, c] : g.edges) plan.edges.push_back(edge_plan(*evals[p], *evals[c]));
  plan.report = total_cost(g, plan);
  return plan;
}

}  // namespace wsc
