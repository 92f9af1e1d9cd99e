#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scenario.hpp"
#include "wsc/config_io.hpp"
#include "wsc/errors.hpp"

using namespace wsc;
using namespace wsc::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(WSC_SOURCE_DIR) / "configs";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory per test.
fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path d = fs::temp_directory_path() / "wsc_tests" / (std::string(info->test_suite_name()) + "." + info->name());
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream(dir / name) << text;
  return dir / name;
}

const char* kTinyModel = R"({"name": "tiny", "heads": 4, "batch": 4, "hidden_size": 256, "layers": 1, "seq_len": 128})";

template <class F>
std::string config_field(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

int run_cli(const std::string& args) {
  int rc = std::system((std::string(WSC_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(HardwareConfig, ShippedWaferMatchesDefaults) {
  auto hw = load_hardware((kConfigs / "hardware" / "wafer_4x8.json").string());
  EXPECT_EQ(hw.rows, 4);
  EXPECT_EQ(hw.cols, 8);
  EXPECT_DOUBLE_EQ(hw.die.peak_compute, 1800e12);
  EXPECT_DOUBLE_EQ(hw.die.hbm_bytes, 72e9);
  EXPECT_DOUBLE_EQ(hw.link.bandwidth, 4e12);
  EXPECT_DOUBLE_EQ(hw.link.latency, 200e-9);
  EXPECT_DOUBLE_EQ(hw.link.energy, 5e-12);
  EXPECT_DOUBLE_EQ(hw.eff.message_overhead, 1e-6);
  EXPECT_EQ(hw.link.fec_penalty, 0);
  auto topo = hw.build();
  EXPECT_EQ(topo.die_count(), 32);
  auto fec = load_hardware((kConfigs / "hardware" / "wafer_4x8_fec.json").string());
  EXPECT_GT(fec.link.hop_latency(), hw.link.hop_latency());
}

TEST(HardwareConfig, UnitStringsNormalize) {
  auto hw = parse_hardware(R"({"mesh": {"rows": 2, "cols": 2},
    "d2d": {"bandwidth_tbps": "4000 GB/s", "latency_ns": "0.2 us", "energy_pj_per_bit": "5 pJ/bit"},
    "die": {"hbm_gb": "72 GB", "peak_compute_tflops": "1.8 PFLOPS"}})");
  EXPECT_DOUBLE_EQ(hw.link.bandwidth, 4e12);
  EXPECT_NEAR(hw.link.latency, 200e-9, 1e-20);
  EXPECT_DOUBLE_EQ(hw.link.energy, 5e-12);
  EXPECT_DOUBLE_EQ(hw.die.hbm_bytes, 72e9);
  EXPECT_DOUBLE_EQ(hw.die.peak_compute, 1.8e15);
}

TEST(HardwareConfig, ErrorsNameTheField) {
  EXPECT_EQ(config_field([] { parse_hardware(R"({"d2d": {"bandwidth_tbps": "5 ns"}})"); }), "d2d.bandwidth_tbps");
  EXPECT_EQ(config_field([] { parse_hardware(R"({"d2d": {"latency_ns": "fast"}})"); }), "d2d.latency_ns");
  EXPECT_EQ(config_field([] { parse_hardware(R"({"die": {"hbm_gb": "72 parsecs"}})"); }), "die.hbm_gb");
  EXPECT_EQ(config_field([] { parse_hardware(R"({"die": {"turbo": true}})"); }), "die.turbo");
  EXPECT_EQ(config_field([] { parse_hardware(R"({"mesh": {"rows": 0}})"); }), "mesh.rows");
  EXPECT_EQ(config_field([] { parse_hardware(R"({"mesh": {"rows": "four"}})"); }), "mesh.rows");
  EXPECT_EQ(config_field([] { parse_hardware(R"({"efficiency": {"link_efficiency": 2}})"); }),
            "efficiency.link_efficiency");
  EXPECT_EQ(config_field([] { parse_hardware(R"([1, 2])"); }), "hardware");
}

TEST(HardwareConfig, ParseErrorHasLineAndColumn) {
  try {
    parse_hardware("{\n  \"mesh\": {\n    \"rows\": ,\n  }\n}");
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_hardware("/nonexistent/hw.json"), ConfigError);
}

TEST(HardwareConfig, JsonRoundTrip) {
  auto hw = load_hardware((kConfigs / "hardware" / "wafer_4x8_fec.json").string());
  auto back = parse_hardware(hardware_to_json(hw));
  EXPECT_EQ(back.rows, hw.rows);
  EXPECT_DOUBLE_EQ(back.link.bandwidth, hw.link.bandwidth);
  EXPECT_DOUBLE_EQ(back.link.fec_penalty, hw.link.fec_penalty);
  EXPECT_DOUBLE_EQ(back.die.hbm_energy, hw.die.hbm_energy);
  EXPECT_DOUBLE_EQ(back.eff.compute_utilization, hw.eff.compute_utilization);
}

TEST(ModelConfig, PresetsAndOverrides) {
  auto m = load_model((kConfigs / "models" / "llama2-7b-16k.json").string());
  EXPECT_EQ(m.seq_len, 16384);
  EXPECT_EQ(m.hidden_size, 4096);
  EXPECT_TRUE(m.gated_mlp);
  EXPECT_EQ(m.name, "llama2-7b-16k");
  auto g = load_model((kConfigs / "models" / "gpt3-6.7b.json").string());
  EXPECT_EQ(g.layers, 32);
  EXPECT_EQ(g.hidden_size, 4096);
  auto t = parse_model(kTinyModel);
  EXPECT_EQ(t.heads, 4);
  EXPECT_EQ(t.mlp_width(), 1024);
  auto back = parse_model(model_to_json(m));
  EXPECT_EQ(back.seq_len, m.seq_len);
  EXPECT_EQ(back.intermediate_size, m.intermediate_size);
  EXPECT_EQ(back.gated_mlp, m.gated_mlp);
}

TEST(ModelConfig, ErrorsNameTheField) {
  EXPECT_EQ(config_field([] { parse_model(R"({"preset": "gpt-5"})"); }), "preset");
  EXPECT_EQ(config_field([] { parse_model(R"({"preset": "gpt3-6.7b", "depth": 3})"); }), "depth");
  EXPECT_EQ(config_field([] { parse_model(R"({"heads": 3, "hidden_size": 256})"); }), "heads");
  EXPECT_EQ(config_field([] { parse_model(R"({"preset": "gpt3-6.7b", "precision": "int4"})"); }), "precision");
  EXPECT_EQ(config_field([] { parse_model(R"({"preset": "gpt3-6.7b", "layers": "many"})"); }), "layers");
}

TEST(Scenario, SimulateGpt67OnFourByEight) {
  auto dir = scratch();
  Scenario s;
  s.hardware_path = (kConfigs / "hardware" / "wafer_4x8.json").string();
  s.model_path = (kConfigs / "models" / "gpt3-6.7b.json").string();
  s.strategy = "(4,1,1,8)";
  s.out_dir = dir.string();
  auto r = run_scenario(s);
  ASSERT_EQ(r.exit_code, kOk) << r.message;
  for (const char* f : {"report.json", "summary.txt", "traffic.csv", "schedule.txt"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  auto summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("(DP,TP,SP,TATP) (4,1,1,8)"), std::string::npos);
  EXPECT_EQ(summary.find("OOM"), std::string::npos);
  EXPECT_EQ(summary_from_json(slurp(dir / "report.json")), summary.substr(0, summary.find("\n\n") + 1));
  EXPECT_EQ(slurp(dir / "traffic.csv").rfind("link,src,dst,bytes,max_flows\n", 0), 0u);
  EXPECT_NE(slurp(dir / "schedule.txt").find("# n=8 transfer="), std::string::npos);
}

TEST(Scenario, MalformedConfigIsConfigError) {
  auto dir = scratch();
  Scenario s;
  s.hardware_path = write(dir, "hw.json", R"({"d2d": {"bandwidth_tbps": -1}})").string();
  s.model_path = write(dir, "m.json", kTinyModel).string();
  s.strategy = "(4,1,1,1)";
  s.out_dir = (dir / "out").string();
  auto r = run_scenario(s);
  EXPECT_EQ(r.exit_code, kConfigError);
  EXPECT_NE(r.message.find("d2d.bandwidth_tbps"), std::string::npos) << r.message;
  s.hardware_path = (kConfigs / "hardware" / "wafer_2x2.json").string();
  s.strategy = "(8,1,1,1)";
  r = run_scenario(s);
  EXPECT_EQ(r.exit_code, kConfigError);
  EXPECT_NE(r.message.find("strategy"), std::string::npos);
  s.strategy = "(4,1)";
  EXPECT_EQ(run_scenario(s).exit_code, kConfigError);
  s.strategy.clear();
  EXPECT_EQ(run_scenario(s).exit_code, kConfigError);
}

TEST(Scenario, OutOfMemoryIsInfeasible) {
  auto dir = scratch();
  Scenario s;
  s.hardware_path = (kConfigs / "hardware" / "wafer_2x2.json").string();
  s.model_path = (kConfigs / "models" / "gpt3-175b.json").string();
  s.strategy = "(1,1,1,4)";
  s.out_dir = dir.string();
  auto r = run_scenario(s);
  EXPECT_EQ(r.exit_code, kInfeasible);
  EXPECT_NE(r.message.find("GB"), std::string::npos);
  EXPECT_NE(slurp(dir / "summary.txt").find("OOM"), std::string::npos);
}

TEST(Scenario, SearchIsByteIdenticalAcrossRuns) {
  auto dir = scratch();
  Scenario s;
  s.mode = Mode::Search;
  s.hardware_path = (kConfigs / "hardware" / "wafer_2x2.json").string();
  s.model_path = write(dir, "m.json", kTinyModel).string();
  s.population = 8;
  s.generations = 3;
  s.seed = 5;
  std::map<std::string, std::string> first;
  for (int run = 0; run < 2; ++run) {
    s.out_dir = (dir / ("run" + std::to_string(run))).string();
    auto r = run_scenario(s);
    ASSERT_EQ(r.exit_code, kOk) << r.message;
    EXPECT_EQ(r.files.size(), 5u);  // includes trace.csv
    for (const auto& f : r.files) {
      auto name = fs::path(f).filename().string();
      if (run == 0)
        first[name] = slurp(f);
      else
        EXPECT_EQ(slurp(f), first[name]) << name;
    }
  }
  EXPECT_EQ(first["trace.csv"].rfind("generation,best_cost_s\n", 0), 0u);
}

TEST(Scenario, SweepWritesOneRowPerValue) {
  auto dir = scratch();
  Scenario s;
  s.mode = Mode::Sweep;
  s.hardware_path = (kConfigs / "hardware" / "wafer_4x8.json").string();
  s.model_path = (kConfigs / "models" / "gpt3-175b-linear.json").string();
  s.single_linear = true;
  s.sweep_axis = "tatp";
  s.sweep_values = {1, 2, 4, 8, 16, 32, 64};
  s.out_dir = dir.string();
  auto r = run_scenario(s);
  ASSERT_EQ(r.exit_code, kOk) << r.message;
  std::istringstream in(slurp(dir / "sweep.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0], "tatp,strategy,t_total_s,throughput_tokens_per_s,memory_peak_bytes,oom,status");
  EXPECT_NE(rows[4].find("\"(1,1,1,8)\""), std::string::npos);
  EXPECT_NE(rows[4].find(",ok"), std::string::npos);
  EXPECT_EQ(rows[7].find(",ok"), std::string::npos);  // 64 dies do not exist
  s.sweep_axis = "pp";
  EXPECT_EQ(run_scenario(s).exit_code, kConfigError);
}

TEST(Scenario, FaultSweepCsv) {
  auto dir = scratch();
  Scenario s;
  s.mode = Mode::Faults;
  s.hardware_path = (kConfigs / "hardware" / "wafer_2x2.json").string();
  s.model_path = write(dir, "m.json", kTinyModel).string();
  s.strategy = "(2,1,1,2)";
  s.fault_kind = "core";
  s.fault_rates = {0.0, 0.25, 0.5};
  s.out_dir = (dir / "out").string();
  auto r = run_scenario(s);
  ASSERT_EQ(r.exit_code, kOk) << r.message;
  auto csv = slurp(dir / "out" / "faults.csv");
  EXPECT_EQ(csv.rfind("kind,rate,enabled_dies,disabled_links,t_total_s,throughput_tokens_per_s,normalized_throughput,status\n", 0), 0u);
  EXPECT_NE(csv.find("core,0,4,0,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  s.fault_kind = "thermal";
  EXPECT_EQ(run_scenario(s).exit_code, kConfigError);
}

TEST(Report, EmptyGraphStillWritesValidFiles) {
  auto dir = scratch();
  ComputeGraph g;
  ExecutionPlan plan;
  plan.topology = std::make_shared<const WaferTopology>(build_mesh(2, 2));
  plan.report = total_cost(g, plan);
  auto files = emit_report(g, plan, dir.string());
  EXPECT_EQ(files.size(), 4u);
  auto json = slurp(dir / "report.json");
  EXPECT_NE(json.find("\"schema_version\": 1"), std::string::npos);
  EXPECT_NE(json.find("\"t_total_s\": 0"), std::string::npos);
  EXPECT_NE(summary_from_json(json).find("(DP,TP,SP,TATP) (1,1,1,1)"), std::string::npos);
  EXPECT_THROW(summary_from_json("{}"), ConfigError);
}

TEST(Report, DominantConfigFirstOnTies) {
  auto t = std::make_shared<const WaferTopology>(build_mesh(2, 2));
  auto g = build_linear_chain({{4, 64, 64, 64}, {4, 64, 64, 64}, {4, 64, 64, 64}});
  PlanEvaluator ev(t);
  auto a = parse_strategy("(4,1,1,1)"), b = parse_strategy("(1,1,1,4)");
  EXPECT_EQ(dominant_config(ev.build(g, {a, b, b}, {})), b);
  auto g2 = build_linear_chain({{4, 64, 64, 64}, {4, 64, 64, 64}});
  EXPECT_EQ(dominant_config(ev.build(g2, {b, a}, {})), b);
}

TEST(Cli, ExitCodes) {
  auto dir = scratch();
  const std::string hw = (kConfigs / "hardware" / "wafer_2x2.json").string();
  const std::string model = write(dir, "m.json", kTinyModel).string();
  const std::string out = " -o " + (dir / "out").string();
  EXPECT_EQ(run_cli("simulate -H " + hw + " -m " + model + " -s '(2,1,1,2)'" + out), 0);
  EXPECT_EQ(run_cli("report " + (dir / "out" / "report.json").string()), 0);
  EXPECT_EQ(run_cli("simulate -H " + hw + " -m " + model + out), kConfigError);  // no strategy
  EXPECT_EQ(run_cli("simulate -H /nope.json -m " + model + " -s '(4,1,1,1)'" + out), kConfigError);
  EXPECT_EQ(run_cli("simulate -H " + hw + " -m " + (kConfigs / "models" / "gpt3-175b.json").string() +
                    " -s '(1,1,1,4)'" + out),
            kInfeasible);
  EXPECT_EQ(run_cli("report " + model), kConfigError);
  EXPECT_EQ(run_cli("bogus"), kConfigError);
}
