#include "scenario.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wsc/errors.hpp"
#include "wsc/faults.hpp"
#include "wsc/tatp.hpp"

namespace wsc::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

std::vector<const RoutePlan*> all_routes(const ExecutionPlan& plan) {
  std::vector<const RoutePlan*> v;
  for (const auto& op : plan.ops)
    for (const auto& r : op->routes) v.push_back(&r);
  for (const auto& e : plan.edges)
    for (const auto& r : e->routes) v.push_back(&r);
  return v;
}

}  // namespace

ParallelConfig dominant_config(const ExecutionPlan& plan) {
  std::map<std::string, int> count;
  std::map<std::string, ParallelConfig> first;
  std::vector<std::string> order;
  for (const auto& op : plan.ops) {
    std::string t = op->cfg.tuple();
    if (count[t]++ == 0) {
      first[t] = op->cfg;
      order.push_back(t);
    }
  }
  if (order.empty()) return {};
  std::string best = order.front();
  for (const auto& t : order)
    if (count[t] > count[best]) best = t;
  return first[best];
}

std::string traffic_csv(const ExecutionPlan& plan) {
  std::ostringstream os;
  os << "link,src,dst,bytes,max_flows\n";
  if (!plan.topology) return os.str();
  const WaferTopology& topo = *plan.topology;
  std::vector<double> bytes(topo.link_slot_count(), 0);
  std::vector<int> flows(topo.link_slot_count(), 0);
  for (const RoutePlan* rp : all_routes(plan)) {
    if (rp->ops.empty()) continue;
    TrafficMatrix tm = link_loads(*rp, topo);
    for (int r = 0; r < tm.rounds; ++r)
      for (LinkId l = 0; l < tm.links; ++l) {
        bytes[l] += tm.bytes_at(r, l);
        flows[l] = std::max(flows[l], tm.flows_at(r, l));
      }
  }
  for (LinkId l = 0; l < topo.link_slot_count(); ++l)
    if (bytes[l] > 0)
      os << l << ',' << topo.link_src(l) << ',' << topo.link_dst(l) << ',' << num(bytes[l]) << ',' << flows[l]
         << '\n';
  return os.str();
}

std::string report_json(const ComputeGraph& g, const ExecutionPlan& plan, const ReportContext& ctx) {
  const CostReport& r = plan.report;
  ojson j;
  j["schema_version"] = 1;
  j["hardware"] = ctx.hardware_name;
  j["model"] = ctx.model_name;
  j["seed"] = ctx.seed;
  if (plan.topology) j["mesh"] = {{"rows", plan.topology->rows()}, {"cols", plan.topology->cols()}};
  j["strategy"] = plan.ops.empty() ? std::string("(1,1,1,1)") : dominant_config(plan).tuple();
  j["t_total_s"] = r.t_total;
  j["t_intra_s"] = r.t_intra_sum;
  j["t_inter_s"] = r.t_inter_sum;
  j["breakdown_s"] = {{"compute", r.comp}, {"p2p", r.p2p}, {"collective", r.collective}, {"reshard", r.t_inter_sum}};
  j["throughput_tokens_per_s"] = r.throughput;
  j["tokens_per_step"] = r.tokens;
  j["flops"] = r.flops;
  j["traffic_bytes"] = r.traffic_bytes;
  j["memory"] = {{"peak_bytes", r.memory.peak},
                 {"peak_die", r.memory.peak_die},
                 {"capacity_bytes", r.memory.capacity},
                 {"weights_bytes", r.memory.weights},
                 {"activations_bytes", r.memory.activations},
                 {"transient_bytes", r.memory.transient},
                 {"oom", r.memory.oom},
                 {"per_die_bytes", r.memory.per_die}};
  j["energy"] = {{"joules", r.energy.joules},
                 {"watts", r.energy.watts},
                 {"tokens_per_joule", r.energy.tokens_per_joule},
                 {"compute_joules", r.energy.compute_joules},
                 {"d2d_joules", r.energy.d2d_joules},
                 {"hbm_joules", r.energy.hbm_joules}};
  ojson ops = ojson::array();
  for (std::size_t i = 0; i < r.ops.size(); ++i) {
    const auto& e = r.ops[i];
    ops.push_back({{"id", e.op},
                   {"name", e.name},
                   {"kind", to_string(g.ops[i].kind)},
                   {"strategy", e.strategy},
                   {"t_intra_s", e.t_intra},
                   {"compute_s", e.comp},
                   {"p2p_s", e.p2p},
                   {"collective_s", e.collective},
                   {"flops", e.flops},
                   {"link_bytes", e.link_bytes}});
  }
  j["ops"] = std::move(ops);
  ojson edges = ojson::array();
  for (const auto& e : r.edges)
    edges.push_back({{"producer", e.producer},
                     {"consumer", e.consumer},
                     {"residual", e.residual},
                     {"t_inter_s", e.t_inter},
                     {"link_bytes", e.link_bytes}});
  j["edges"] = std::move(edges);
  return j.dump(2) + "\n";
}

namespace {

std::string summary_body(const std::string& strategy, double t_total, double comp, double p2p, double coll,
                         double reshard, double mem_peak, double mem_cap, bool oom, double joules, double watts,
                         double throughput, const std::string& hw, const std::string& model) {
  std::ostringstream os;
  os << "model        " << model << "\n";
  os << "hardware     " << hw << "\n";
  os << "(DP,TP,SP,TATP) " << strategy << "\n";
  os << "t_total      " << num(t_total) << " s\n";
  os << "  compute    " << num(comp) << " s\n";
  os << "  p2p        " << num(p2p) << " s\n";
  os << "  collective " << num(coll) << " s\n";
  os << "  reshard    " << num(reshard) << " s\n";
  os << "memory peak  " << num(mem_peak / 1e9) << " GB of " << num(mem_cap / 1e9) << " GB"
     << (oom ? "  OOM" : "") << "\n";
  os << "energy       " << num(joules) << " J, " << num(watts) << " W\n";
  os << "throughput   " << num(throughput) << " tokens/s\n";
  return os.str();
}

}  // namespace

std::string summary_text(const ComputeGraph& g, const ExecutionPlan& plan, const ReportContext& ctx) {
  const CostReport& r = plan.report;
  std::string s = summary_body(plan.ops.empty() ? "(1,1,1,1)" : dominant_config(plan).tuple(), r.t_total, r.comp,
                               r.p2p, r.collective, r.t_inter_sum, r.memory.peak, r.memory.capacity, r.memory.oom,
                               r.energy.joules, r.energy.watts, r.throughput, ctx.hardware_name, ctx.model_name);
  std::ostringstream os;
  os << s << "\nop                         strategy              t_intra_s    compute_s    p2p_s        collective_s\n";
  for (std::size_t i = 0; i < r.ops.size() && i < g.ops.size(); ++i) {
    const auto& e = r.ops[i];
    char line[256];
    std::snprintf(line, sizeof line, "%-26s %-21s %-12.5g %-12.5g %-12.5g %-12.5g\n", e.name.c_str(),
                  e.strategy.c_str(), e.t_intra, e.comp, e.p2p, e.collective);
    os << line;
  }
  return os.str();
}

std::string summary_from_json(const std::string& text) {
  ojson j = ojson::parse(text);
  if (!j.contains("schema_version")) throw ConfigError("schema_version", "missing; not a report file");
  const auto& b = j.at("breakdown_s");
  const auto& m = j.at("memory");
  const auto& e = j.at("energy");
  return summary_body(j.at("strategy").get<std::string>(), j.at("t_total_s").get<double>(),
                      b.at("compute").get<double>(), b.at("p2p").get<double>(), b.at("collective").get<double>(),
                      b.at("reshard").get<double>(), m.at("peak_bytes").get<double>(),
                      m.at("capacity_bytes").get<double>(), m.at("oom").get<bool>(), e.at("joules").get<double>(),
                      e.at("watts").get<double>(), j.at("throughput_tokens_per_s").get<double>(),
                      j.at("hardware").get<std::string>(), j.at("model").get<std::string>());
}

std::vector<std::string> emit_report(const ComputeGraph& g, const ExecutionPlan& plan, const std::string& dir,
                                     const ReportContext& ctx) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  std::vector<std::string> files;
  auto put = [&](const char* name, const std::string& text) {
    write_file(out / name, text);
    files.push_back((out / name).string());
  };
  put("report.json", report_json(g, plan, ctx));
  put("summary.txt", summary_text(g, plan, ctx));
  put("traffic.csv", traffic_csv(plan));
  std::ostringstream sched;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < plan.ops.size(); ++i) {
    const OpPlan& p = *plan.ops[i];
    if (!p.schedule) continue;
    std::string key = g.ops[i].shape_key() + p.cfg.tuple();
    if (!seen.insert(key).second) continue;
    sched << "# " << g.ops[i].name << " " << p.cfg.tuple() << " transfer=" << to_string(p.schedule->transfer_choice)
          << " buffer_peak=" << p.verdict.buffer_peak << "\n"
          << dump_schedule(*p.schedule) << "\n";
  }
  put("schedule.txt", sched.str());
  if (ctx.trace) {
    std::ostringstream t;
    t << "generation,best_cost_s\n";
    for (const auto& tp : *ctx.trace) t << tp.generation << ',' << num(tp.best_cost) << '\n';
    put("trace.csv", t.str());
  }
  return files;
}

// ---- scenarios ----------------------------------------------------------------

namespace {

struct Loaded {
  HardwareConfig hw;
  ModelConfig model;
  std::shared_ptr<const WaferTopology> topo;
  ComputeGraph graph;
  std::string hw_name;
};

Loaded load(const Scenario& s) {
  Loaded l;
  if (s.hardware_path.empty()) throw ConfigError("hardware", "no hardware config given");
  if (s.model_path.empty()) throw ConfigError("model", "no model config given");
  l.hw = load_hardware(s.hardware_path);
  l.model = load_model(s.model_path);
  l.hw_name = fs::path(s.hardware_path).stem().string();
  try {
    l.topo = std::make_shared<const WaferTopology>(l.hw.build());
  } catch (const InvalidArgument& e) {
    throw ConfigError("mesh", e.what());
  }
  if (s.single_linear) {
    Dims d{l.model.batch, l.model.seq_len, l.model.hidden_size, l.model.hidden_size};
    l.graph = build_linear_chain({d}, l.model.precision);
    l.graph.ops[0].name = "linear";
  } else {
    l.graph = build_transformer_graph(l.model);
  }
  return l;
}

ParallelConfig strategy_or_throw(const std::string& text, const WaferTopology& topo) {
  ParallelConfig c;
  try {
    c = parse_strategy(text);
  } catch (const std::exception& e) {
    throw ConfigError("strategy", e.what());
  }
  if (c.product() > topo.enabled_die_count() || topo.enabled_die_count() % c.product() != 0)
    throw ConfigError("strategy", c.tuple() + " does not divide the " + std::to_string(topo.enabled_die_count()) +
                                      "-die mesh");
  return c;
}

EvaluatorOptions eval_options(const Loaded& l) {
  EvaluatorOptions o;
  o.eff = l.hw.eff;
  return o;
}

ExecutionPlan uniform_plan(PlanEvaluator& ev, const ComputeGraph& g, const ParallelConfig& c) {
  try {
    return ev.build(g, std::vector<ParallelConfig>(g.ops.size(), c), PlacementGenes{});
  } catch (const InvalidArgument& e) {
    throw ConfigError("strategy", e.what());
  }
}

ScenarioResult finish(const ComputeGraph& g, const ExecutionPlan& plan, const Scenario& s, const Loaded& l,
                      const std::vector<TracePoint>* trace) {
  ScenarioResult r;
  ReportContext ctx{l.hw_name, l.model.name, s.seed, trace};
  r.files = emit_report(g, plan, s.out_dir, ctx);
  if (plan.report.memory.oom) {
    r.exit_code = kInfeasible;
    r.message = "infeasible: die " + std::to_string(plan.report.memory.peak_die) + " needs " +
                num(plan.report.memory.peak / 1e9) + " GB, capacity " + num(plan.report.memory.capacity / 1e9) +
                " GB";
  } else {
    r.message = "ok: " + dominant_config(plan).tuple() + " t_total=" + num(plan.report.t_total) + " s";
  }
  return r;
}

SolveResult search(const Loaded& l, const Scenario& s) {
  SolverOptions so;
  so.eval = eval_options(l);
  so.ga.population = s.population;
  so.ga.generations = s.generations;
  so.ga.seed = s.seed;
  so.budget_seconds = s.budget_seconds;
  return solve(l.graph, l.topo, so);
}

ScenarioResult run_sweep(const Loaded& l, const Scenario& s) {
  static const std::map<std::string, int ParallelConfig::*> axes = {{"dp", &ParallelConfig::dp},
                                                                   {"tp", &ParallelConfig::tp},
                                                                   {"sp", &ParallelConfig::sp},
                                                                   {"cp", &ParallelConfig::cp},
                                                                   {"tatp", &ParallelConfig::tatp}};
  auto it = axes.find(s.sweep_axis);
  if (it == axes.end()) throw ConfigError("axis", "expected one of dp, tp, sp, cp, tatp");
  if (s.sweep_values.empty()) throw ConfigError("values", "no sweep values given");
  ParallelConfig base = s.strategy.empty() ? ParallelConfig{} : parse_strategy(s.strategy);
  PlanEvaluator ev(l.topo, eval_options(l));
  std::ostringstream os;
  os << s.sweep_axis << ",strategy,t_total_s,throughput_tokens_per_s,memory_peak_bytes,oom,status\n";
  for (int v : s.sweep_values) {
    ParallelConfig c = base;
    c.*(it->second) = v;
    os << v << ",\"" << c.tuple() << "\",";
    try {
      if (c.product() > l.topo->enabled_die_count()) throw InvalidArgument("needs more dies than the mesh has");
      ExecutionPlan p = ev.build(l.graph, std::vector<ParallelConfig>(l.graph.ops.size(), c), PlacementGenes{});
      os << num(p.report.t_total) << ',' << num(p.report.throughput) << ',' << num(p.report.memory.peak) << ','
         << (p.report.memory.oom ? 1 : 0) << ",ok\n";
    } catch (const std::exception& e) {
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      os << ",,,," << msg << "\n";
    }
  }
  fs::create_directories(s.out_dir);
  ScenarioResult r;
  write_file(fs::path(s.out_dir) / "sweep.csv", os.str());
  r.files.push_back((fs::path(s.out_dir) / "sweep.csv").string());
  r.message = "ok: " + std::to_string(s.sweep_values.size()) + " sweep points";
  return r;
}

ScenarioResult run_faults(const Loaded& l, const Scenario& s) {
  if (s.fault_kind != "link" && s.fault_kind != "core") throw ConfigError("kind", "expected link or core");
  ExecutionPlan healthy;
  if (s.strategy.empty()) {
    auto sr = search(l, s);
    if (!sr.feasible) {
      ScenarioResult r;
      r.exit_code = kInfeasible;
      r.message = sr.message;
      return r;
    }
    healthy = std::move(sr.plan);
  } else {
    PlanEvaluator ev(l.topo, eval_options(l));
    healthy = uniform_plan(ev, l.graph, strategy_or_throw(s.strategy, *l.topo));
  }
  ScenarioResult r = finish(l.graph, healthy, s, l, nullptr);
  std::vector<double> rates = s.fault_rates;
  if (rates.empty()) rates = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4};
  std::ostringstream os;
  os << "kind,rate,enabled_dies,disabled_links,t_total_s,throughput_tokens_per_s,normalized_throughput,status\n";
  RecoverOptions ro;
  ro.eval = eval_options(l);
  ro.budget_seconds = s.budget_seconds;
  const FaultKind kind = s.fault_kind == "link" ? FaultKind::Link : FaultKind::Core;
  for (const auto& p : fault_sweep(l.graph, healthy, *l.topo, kind, rates, s.seed, ro)) {
    os << s.fault_kind << ',' << num(p.rate) << ',' << p.enabled_dies << ',' << p.disabled_links << ',';
    if (p.ok) {
      os << num(p.t_total) << ',' << num(p.throughput) << ',' << num(p.normalized) << ",ok\n";
    } else {
      std::string msg = p.message;
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      os << ",,0," << msg << "\n";
    }
  }
  write_file(fs::path(s.out_dir) / "faults.csv", os.str());
  r.files.push_back((fs::path(s.out_dir) / "faults.csv").string());
  return r;
}

}  // namespace

ScenarioResult run_scenario(const Scenario& s) {
  try {
    Loaded l = load(s);
    switch (s.mode) {
      case Mode::Simulate: {
        if (s.strategy.empty()) throw ConfigError("strategy", "simulate needs a strategy tuple");
        PlanEvaluator ev(l.topo, eval_options(l));
        ExecutionPlan plan = uniform_plan(ev, l.graph, strategy_or_throw(s.strategy, *l.topo));
        return finish(l.graph, plan, s, l, nullptr);
      }
      case Mode::Search: {
        auto sr = search(l, s);
        ScenarioResult r = finish(l.graph, sr.plan, s, l, &sr.trace);
        if (!sr.feasible) {
          r.exit_code = kInfeasible;
          r.message = sr.message;
        }
        return r;
      }
      case Mode::Sweep:
        return run_sweep(l, s);
      case Mode::Faults:
        return run_faults(l, s);
    }
  } catch (const ConfigError& e) {
    return {kConfigError, std::string("config error: ") + e.what(), {}};
  } catch (const NoRouteError& e) {
    return {kNoRoute, std::string("no route: ") + e.what(), {}};
  } catch (const std::exception& e) {
    return {kError, std::string("error: ") + e.what(), {}};
  }
  return {kError, "unknown mode", {}};
}

}  // namespace wsc::cli
