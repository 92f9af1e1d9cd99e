#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wsc/config_io.hpp"
#include "wsc/plan.hpp"
#include "wsc/solver.hpp"

namespace wsc::cli {

enum class Mode { Simulate, Search, Sweep, Faults };

enum Exit : int { kOk = 0, kError = 1, kInfeasible = 2, kConfigError = 3, kNoRoute = 4 };

struct Scenario {
  Mode mode = Mode::Simulate;
  std::string hardware_path;
  std::string model_path;
  std::string strategy;  // simulate/sweep/faults base tuple; empty = search for one
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  double budget_seconds = 600;
  int population = 32;
  int generations = 50;
  bool single_linear = false;  // one Linear op of the model's hidden size
  // sweep
  std::string sweep_axis = "tatp";
  std::vector<int> sweep_values;
  // faults
  std::string fault_kind = "link";  // link | core
  std::vector<double> fault_rates;
};

struct ScenarioResult {
  int exit_code = kOk;
  std::string message;
  std::vector<std::string> files;
};

// Never throws for bad input; the exit code and message carry the diagnosis.
ScenarioResult run_scenario(const Scenario& s);

struct ReportContext {
  std::string hardware_name;
  std::string model_name;
  std::uint64_t seed = 1;
  const std::vector<TracePoint>* trace = nullptr;
};

// report.json, summary.txt, traffic.csv, schedule.txt (+ trace.csv when a
// trace is given). Output is byte-identical for identical inputs.
std::vector<std::string> emit_report(const ComputeGraph& g, const ExecutionPlan& plan, const std::string& dir,
                                     const ReportContext& ctx = {});

std::string report_json(const ComputeGraph& g, const ExecutionPlan& plan, const ReportContext& ctx = {});
std::string summary_text(const ComputeGraph& g, const ExecutionPlan& plan, const ReportContext& ctx = {});
// Summary rebuilt from a report.json document.
std::string summary_from_json(const std::string& report_json_text);
std::string traffic_csv(const ExecutionPlan& plan);

// Most frequent per-op tuple, ties broken by first occurrence.
ParallelConfig dominant_config(const ExecutionPlan& plan);

}  // namespace wsc::cli
