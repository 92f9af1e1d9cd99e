#include "wsc/config_io.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "wsc/errors.hpp"

namespace wsc {

namespace {

using nlohmann::json;

json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports byte offsets; convert to line/column.
    std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin, "parse error at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Unit {
  double to_si;
  const char* dim;
};

// Factor from a unit string to SI, with its dimension.
const std::map<std::string, Unit>& units() {
  static const std::map<std::string, Unit> u = {
      {"tflops", {1e12, "flop/s"}}, {"pflops", {1e15, "flop/s"}}, {"gflops", {1e9, "flop/s"}},
      {"flops", {1, "flop/s"}},     {"tb/s", {1e12, "B/s"}},      {"gb/s", {1e9, "B/s"}},
      {"mb/s", {1e6, "B/s"}},       {"b/s", {1, "B/s"}},          {"ns", {1e-9, "s"}},
      {"us", {1e-6, "s"}},          {"ms", {1e-3, "s"}},          {"s", {1, "s"}},
      {"pj/bit", {1e-12, "J/bit"}}, {"j/bit", {1, "J/bit"}},      {"pj/flop", {1e-12, "J/flop"}},
      {"j/flop", {1, "J/flop"}},    {"tb", {1e12, "B"}},          {"gb", {1e9, "B"}},
      {"mb", {1e6, "B"}},           {"kb", {1e3, "B"}},           {"b", {1, "B"}},
      {"mm", {1, "mm"}},            {"tflops/w", {1e12, "flop/J"}}};
  return u;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Reads `obj[key]` as a quantity. Bare numbers are in `unit`.
double quantity(const json& obj, const std::string& key, const std::string& path, const std::string& unit,
                double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  const Unit& base = units().at(unit);
  const double to_si = base.to_si;
  const std::string field = path + key;
  if (it->is_number()) return it->get<double>() * to_si;
  if (!it->is_string()) throw ConfigError(field, "expected a number or a quantity string");
  std::string s = it->get<std::string>();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(field, "cannot read a number from '" + s + "'");
  }
  std::string u = lower(s.substr(used));
  u.erase(0, u.find_first_not_of(' '));
  u.erase(u.find_last_not_of(' ') + 1);
  if (u.empty()) return v * to_si;
  auto f = units().find(u);
  if (f == units().end()) throw ConfigError(field, "unknown unit '" + u + "'");
  if (std::string_view(f->second.dim) != base.dim)
    throw ConfigError(field, "unit '" + u + "' is not a " + base.dim + " unit");
  return v * f->second.to_si;
}

template <class T>
T value(const json& obj, const std::string& key, const std::string& path, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key, "wrong type");
  }
}

const json& section(const json& root, const std::string& key) {
  static const json empty = json::object();
  auto it = root.find(key);
  if (it == root.end()) return empty;
  if (!it->is_object()) throw ConfigError(key, "expected an object");
  return *it;
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(path + it.key(), "unknown field");
  }
}

template <class F>
void checked(const std::string& field, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

HardwareConfig parse_hardware(const std::string& text) {
  json root = parse_text(text, "hardware");
  if (!root.is_object()) throw ConfigError("hardware", "expected a JSON object");
  reject_unknown(root, "", {"name", "mesh", "die", "d2d", "efficiency"});
  HardwareConfig hw;

  const json& mesh = section(root, "mesh");
  reject_unknown(mesh, "mesh.", {"rows", "cols", "die_pitch_mm"});
  hw.rows = value<int>(mesh, "rows", "mesh.", hw.rows);
  hw.cols = value<int>(mesh, "cols", "mesh.", hw.cols);
  hw.die_pitch_mm = quantity(mesh, "die_pitch_mm", "mesh.", "mm", hw.die_pitch_mm);
  if (hw.rows < 1) throw ConfigError("mesh.rows", "must be >= 1");
  if (hw.cols < 1) throw ConfigError("mesh.cols", "must be >= 1");

  const json& die = section(root, "die");
  reject_unknown(die, "die.", {"peak_compute_tflops", "sram_mb", "hbm_gb", "hbm_bandwidth_tbps", "hbm_latency_ns",
                               "compute_efficiency_tflops_per_w", "hbm_energy_pj_per_bit"});
  hw.die.peak_compute = quantity(die, "peak_compute_tflops", "die.", "tflops", hw.die.peak_compute);
  hw.die.sram_bytes = quantity(die, "sram_mb", "die.", "mb", hw.die.sram_bytes);
  hw.die.hbm_bytes = quantity(die, "hbm_gb", "die.", "gb", hw.die.hbm_bytes);
  hw.die.hbm_bandwidth = quantity(die, "hbm_bandwidth_tbps", "die.", "tb/s", hw.die.hbm_bandwidth);
  hw.die.hbm_latency = quantity(die, "hbm_latency_ns", "die.", "ns", hw.die.hbm_latency);
  if (die.contains("compute_efficiency_tflops_per_w")) {
    double flops_per_joule = quantity(die, "compute_efficiency_tflops_per_w", "die.", "tflops/w", 0);
    if (!(flops_per_joule > 0)) throw ConfigError("die.compute_efficiency_tflops_per_w", "must be > 0");
    hw.die.compute_energy = 1.0 / flops_per_joule;
  }
  hw.die.hbm_energy = quantity(die, "hbm_energy_pj_per_bit", "die.", "pj/bit", hw.die.hbm_energy);

  const json& d2d = section(root, "d2d");
  reject_unknown(d2d, "d2d.", {"bandwidth_tbps", "latency_ns", "energy_pj_per_bit", "max_length_mm", "fec"});
  hw.link.bandwidth = quantity(d2d, "bandwidth_tbps", "d2d.", "tb/s", hw.link.bandwidth);
  hw.link.latency = quantity(d2d, "latency_ns", "d2d.", "ns", hw.link.latency);
  hw.link.energy = quantity(d2d, "energy_pj_per_bit", "d2d.", "pj/bit", hw.link.energy);
  hw.link.max_length_mm = quantity(d2d, "max_length_mm", "d2d.", "mm", hw.link.max_length_mm);
  if (value<bool>(d2d, "fec", "d2d.", false)) hw.link.fec_penalty = kFecLatency;

  const json& eff = section(root, "efficiency");
  reject_unknown(eff, "efficiency.", {"compute_utilization", "link_efficiency", "message_overhead_us"});
  hw.eff.compute_utilization = value<double>(eff, "compute_utilization", "efficiency.", hw.eff.compute_utilization);
  hw.eff.link_efficiency = value<double>(eff, "link_efficiency", "efficiency.", hw.eff.link_efficiency);
  hw.eff.message_overhead = quantity(eff, "message_overhead_us", "efficiency.", "us", hw.eff.message_overhead);

  auto positive = [](double v, const char* field) {
    if (!(v > 0)) throw ConfigError(field, "must be > 0");
  };
  positive(hw.die.peak_compute, "die.peak_compute_tflops");
  positive(hw.die.sram_bytes, "die.sram_mb");
  positive(hw.die.hbm_bytes, "die.hbm_gb");
  positive(hw.die.hbm_bandwidth, "die.hbm_bandwidth_tbps");
  positive(hw.link.bandwidth, "d2d.bandwidth_tbps");
  positive(hw.link.max_length_mm, "d2d.max_length_mm");
  positive(hw.die_pitch_mm, "mesh.die_pitch_mm");
  if (hw.link.latency < 0) throw ConfigError("d2d.latency_ns", "must be >= 0");
  if (hw.link.energy < 0) throw ConfigError("d2d.energy_pj_per_bit", "must be >= 0");
  if (hw.die.hbm_energy < 0) throw ConfigError("die.hbm_energy_pj_per_bit", "must be >= 0");
  checked("die", [&] { hw.die.validate(); });
  checked("d2d", [&] { hw.link.validate(); });
  try {
    hw.eff.validate();
  } catch (const ConfigError& e) {
    std::string key = e.field() == "message_overhead" ? "message_overhead_us" : e.field();
    throw ConfigError("efficiency." + key, std::string(e.what()).substr(e.field().size() + 2));
  }
  checked("mesh.die_pitch_mm", [&] {
    if (hw.rows * hw.cols > 1 && hw.die_pitch_mm > hw.link.max_length_mm)
      throw InvalidArgument("die pitch exceeds the link reach");
  });
  return hw;
}

HardwareConfig load_hardware(const std::string& path) {
  try {
    return parse_hardware(read_file(path));
  } catch (const ConfigError& e) {
    if (e.field() == "hardware") throw ConfigError(path, e.what());
    throw;
  }
}

ModelConfig parse_model(const std::string& text) {
  json root = parse_text(text, "model");
  if (!root.is_object()) throw ConfigError("model", "expected a JSON object");
  reject_unknown(root, "", {"name", "preset", "heads", "batch", "hidden_size", "layers", "seq_len", "vocab",
                            "intermediate_size", "gated_mlp", "activation", "precision", "include_embedding"});
  ModelConfig m;
  if (root.contains("preset")) {
    std::string p = value<std::string>(root, "preset", "", "");
    try {
      m = model_preset(p);
    } catch (const std::exception&) {
      throw ConfigError("preset", "unknown model preset '" + p + "'");
    }
  }
  m.name = value<std::string>(root, "name", "", m.name);
  m.heads = value<int>(root, "heads", "", m.heads);
  m.batch = value<std::int64_t>(root, "batch", "", m.batch);
  m.hidden_size = value<std::int64_t>(root, "hidden_size", "", m.hidden_size);
  m.layers = value<int>(root, "layers", "", m.layers);
  m.seq_len = value<std::int64_t>(root, "seq_len", "", m.seq_len);
  m.vocab = value<std::int64_t>(root, "vocab", "", m.vocab);
  m.intermediate_size = value<std::int64_t>(root, "intermediate_size", "", m.intermediate_size);
  m.gated_mlp = value<bool>(root, "gated_mlp", "", m.gated_mlp);
  m.include_embedding = value<bool>(root, "include_embedding", "", m.include_embedding);
  if (root.contains("activation")) {
    std::string a = lower(value<std::string>(root, "activation", "", ""));
    if (a == "gelu") m.activation = Activation::GeLU;
    else if (a == "silu" || a == "swiglu") m.activation = Activation::SiLU;
    else throw ConfigError("activation", "expected gelu or silu");
  }
  if (root.contains("precision")) {
    std::string p = lower(value<std::string>(root, "precision", "", ""));
    if (p == "fp16" || p == "bf16") m.precision = Precision::FP16;
    else if (p == "fp32") m.precision = Precision::FP32;
    else throw ConfigError("precision", "expected fp16 or fp32");
  }
  // Map validation failures onto the field they mention.
  try {
    m.validate();
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (const char* f : {"heads", "batch", "hidden_size", "layers", "seq_len", "vocab", "intermediate_size"})
      if (msg.find(f) != std::string::npos) throw ConfigError(f, msg);
    throw ConfigError("model", msg);
  }
  return m;
}

ModelConfig load_model(const std::string& path) {
  try {
    return parse_model(read_file(path));
  } catch (const ConfigError& e) {
    if (e.field() == "model") throw ConfigError(path, e.what());
    throw;
  }
}

std::string hardware_to_json(const HardwareConfig& hw) {
  json j;
  j["mesh"] = {{"rows", hw.rows}, {"cols", hw.cols}, {"die_pitch_mm", hw.die_pitch_mm}};
  j["die"] = {{"peak_compute_tflops", hw.die.peak_compute / 1e12},
              {"sram_mb", hw.die.sram_bytes / 1e6},
              {"hbm_gb", hw.die.hbm_bytes / 1e9},
              {"hbm_bandwidth_tbps", hw.die.hbm_bandwidth / 1e12},
              {"hbm_latency_ns", hw.die.hbm_latency / 1e-9},
              {"compute_efficiency_tflops_per_w", 1.0 / hw.die.compute_energy / 1e12},
              {"hbm_energy_pj_per_bit", hw.die.hbm_energy / 1e-12}};
  j["d2d"] = {{"bandwidth_tbps", hw.link.bandwidth / 1e12},
              {"latency_ns", hw.link.latency / 1e-9},
              {"energy_pj_per_bit", hw.link.energy / 1e-12},
              {"max_length_mm", hw.link.max_length_mm},
              {"fec", hw.link.fec_penalty > 0}};
  j["efficiency"] = {{"compute_utilization", hw.eff.compute_utilization},
                     {"link_efficiency", hw.eff.link_efficiency},
                     {"message_overhead_us", hw.eff.message_overhead / 1e-6}};
  return j.dump(2);
}

std::string model_to_json(const ModelConfig& m) {
  json j = {{"name", m.name},
            {"heads", m.heads},
            {"batch", m.batch},
            {"hidden_size", m.hidden_size},
            {"layers", m.layers},
            {"seq_len", m.seq_len},
            {"vocab", m.vocab},
            {"intermediate_size", m.mlp_width()},
            {"gated_mlp", m.gated_mlp},
            {"activation", m.activation == Activation::GeLU ? "gelu" : "silu"},
            {"precision", m.precision == Precision::FP16 ? "fp16" : "fp32"},
            {"include_embedding", m.include_embedding}};
  return j.dump(2);
}

}  // namespace wsc
