#pragma once

#include <string>

#include "wsc/costmodel.hpp"
#include "wsc/topology.hpp"
#include "wsc/workload.hpp"

namespace wsc {

struct HardwareConfig {
  int rows = 4;
  int cols = 8;
  double die_pitch_mm = kDefaultDiePitchMm;
  DieSpec die;
  LinkSpec link;
  EfficiencyParams eff;

  WaferTopology build() const { return build_mesh(rows, cols, die, link, die_pitch_mm); }
};

// JSON text. Numbers are read in the unit named by the key suffix
// (bandwidth_tbps, latency_ns, energy_pj_per_bit, ...); strings such as
// "4 TB/s" or "200 ns" are converted. Throws ConfigError naming the field.
HardwareConfig parse_hardware(const std::string& json_text);
HardwareConfig load_hardware(const std::string& path);
// Accepts "preset" plus per-field overrides, or a full field list.
ModelConfig parse_model(const std::string& json_text);
ModelConfig load_model(const std::string& path);

std::string hardware_to_json(const HardwareConfig& hw);
std::string model_to_json(const ModelConfig& m);

}  // namespace wsc
