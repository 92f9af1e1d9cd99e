#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "scenario.hpp"

using namespace wsc::cli;

int main(int argc, char** argv) {
  CLI::App app{"Wafer-scale parallelism planner and cost simulator"};
  app.require_subcommand(1);
  Scenario s;

  auto common = [&](CLI::App* sub, bool needs_strategy) {
    sub->add_option("--hardware,-H", s.hardware_path, "hardware config (JSON)")->required();
    sub->add_option("--model,-m", s.model_path, "model config (JSON)")->required();
    auto* st = sub->add_option("--strategy,-s", s.strategy, "tuple (DP,TP,SP,TATP)[,cp=N][,fsdp]");
    if (needs_strategy) st->required();
    sub->add_option("--out,-o", s.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", s.seed, "RNG seed")->capture_default_str();
    sub->add_option("--budget", s.budget_seconds, "search budget, seconds")->capture_default_str();
    sub->add_flag("--single-linear", s.single_linear, "model a single hidden x hidden linear layer");
  };
  auto* sim = app.add_subcommand("simulate", "cost one fixed strategy");
  common(sim, true);
  auto* srch = app.add_subcommand("search", "find a strategy");
  common(srch, false);
  srch->add_option("--population", s.population)->capture_default_str();
  srch->add_option("--generations", s.generations)->capture_default_str();
  auto* swp = app.add_subcommand("sweep", "vary one parallel degree");
  common(swp, false);
  swp->add_option("--axis", s.sweep_axis, "dp|tp|sp|cp|tatp")->capture_default_str();
  swp->add_option("--values", s.sweep_values, "degrees to try")->required()->delimiter(',');
  auto* flt = app.add_subcommand("faults", "fault-rate sweep with recovery");
  common(flt, false);
  flt->add_option("--kind", s.fault_kind, "link|core")->capture_default_str();
  flt->add_option("--rates", s.fault_rates, "fault rates in [0,1]")->delimiter(',');
  flt->add_option("--population", s.population)->capture_default_str();
  flt->add_option("--generations", s.generations)->capture_default_str();
  std::string report_path;
  auto* rep = app.add_subcommand("report", "print the summary of a report.json");
  rep->add_option("report", report_path, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  if (rep->parsed()) {
    std::ifstream in(report_path);
    if (!in) {
      std::cerr << "config error: cannot open " << report_path << "\n";
      return kConfigError;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      std::cout << summary_from_json(ss.str());
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfigError;
    }
    return kOk;
  }
  if (sim->parsed()) s.mode = Mode::Simulate;
  if (srch->parsed()) s.mode = Mode::Search;
  if (swp->parsed()) s.mode = Mode::Sweep;
  if (flt->parsed()) s.mode = Mode::Faults;

  ScenarioResult r = run_scenario(s);
  (r.exit_code == kOk ? std::cout : std::cerr) << r.message << "\n";
  for (const auto& f : r.files) std::cout << "wrote " << f << "\n";
  return r.exit_code;
}
