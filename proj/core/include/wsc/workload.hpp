#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace wsc {

using OpId = int;
inline constexpr OpId kGraphInput = -1;

enum class OpKind { Linear, FusedAttention, Softmax, GeLU, SiLU, LayerNorm, ResidualAdd, Embedding };
enum class Precision { FP16, FP32 };

inline int element_bytes(Precision p) { return p == Precision::FP16 ? 2 : 4; }
const char* to_string(OpKind k);
bool is_gemm(OpKind k);         // Linear or Embedding: has a weight operand
bool is_elementwise(OpKind k);  // Softmax, activations, LayerNorm, ResidualAdd

// Activation tensors are [B, M, width]; Linear weights are [N, K].
// For non-GEMM ops N is the input width and K the output width.
struct Dims {
  std::int64_t B = 1;
  std::int64_t M = 1;
  std::int64_t N = 1;
  std::int64_t K = 1;
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct Operator {
  OpId id = 0;
  std::string name;
  OpKind kind = OpKind::Linear;
  Dims dims;
  Precision precision = Precision::FP16;
  std::vector<OpId> predecessors;  // kGraphInput marks the external graph input
  int heads = 1;                   // attention only
  bool online_softmax = true;      // attention only
  int layer = -1;

  int width() const { return element_bytes(precision); }
  std::int64_t input_elems() const { return dims.B * dims.M * dims.N; }
  std::int64_t output_elems() const { return dims.B * dims.M * dims.K; }
  std::int64_t weight_elems() const;
  // Ops with identical shape keys have identical cost under any config.
  std::string shape_key() const;
};

struct ComputeGraph {
  std::vector<Operator> ops;                   // topological order, ops[i].id == i
  std::vector<std::pair<OpId, OpId>> edges;    // includes residual edges
  std::vector<std::pair<OpId, OpId>> residual_edges;
  std::vector<OpId> origin;                    // id in the graph this was cut from (empty = self)

  std::size_t size() const { return ops.size(); }
  bool empty() const { return ops.empty(); }
  bool is_residual(std::pair<OpId, OpId> e) const;
  // Throws InvalidArgument on cycles, bad ids, or mismatched tensor dims.
  void validate() const;
  std::vector<OpId> topological_order() const;
  std::vector<OpId> consumers(OpId id) const;
};

enum class Activation { GeLU, SiLU };

struct ModelConfig {
  std::string name = "custom";
  int heads = 1;
  std::int64_t batch = 1;
  std::int64_t hidden_size = 1;
  int layers = 1;
  std::int64_t seq_len = 1;
  std::int64_t vocab = 50000;
  std::int64_t intermediate_size = 0;  // 0 -> 4 * hidden
  bool gated_mlp = false;              // fused gate+up projection, SiLU-style
  Activation activation = Activation::GeLU;
  Precision precision = Precision::FP16;
  bool include_embedding = false;

  std::int64_t mlp_width() const { return intermediate_size > 0 ? intermediate_size : 4 * hidden_size; }
  void validate() const;
};

// Known model shapes: "gpt3-6.7b", "llama2-7b", "llama3-70b", "gpt3-76b",
// "gpt3-175b", "opt-175b". Throws InvalidArgument for other names.
ModelConfig model_preset(const std::string& name);
std::vector<std::string> model_preset_names();

ComputeGraph build_transformer_graph(const ModelConfig& cfg);

// A straight chain of Linear ops, no residuals. Handy for search tests.
ComputeGraph build_linear_chain(const std::vector<Dims>& dims, Precision p = Precision::FP16);

struct TensorBytes {
  double input = 0;
  double weight = 0;
  double output = 0;
  double gradients = 0;  // weight gradient
};

struct OpCosts {
  double fwd_flops = 0;
  double bwd_flops = 0;   // input gradient
  double grad_flops = 0;  // weight gradient
  TensorBytes bytes;
  double training_flops() const { return fwd_flops + bwd_flops + grad_flops; }
};

// FLOPs per element for non-GEMM ops.
double elementwise_flops_per_elem(OpKind k);

OpCosts op_costs(const Operator& op);
double parameter_count(const ComputeGraph& g);
double training_flops(const ComputeGraph& g);

// Sub-graphs separated at edges no residual span covers.
std::vector<ComputeGraph> split_graph(const ComputeGraph& g);
// Edges (in the parent graph) where split_graph cuts.
std::vector<std::pair<OpId, OpId>> cut_edges(const ComputeGraph& g);

std::string graph_to_json(const ComputeGraph& g);

}  // namespace wsc
