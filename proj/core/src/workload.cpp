#include "wsc/workload.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>

#include "wsc/errors.hpp"

namespace wsc {

const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::Linear: return "Linear";
    case OpKind::FusedAttention: return "FusedAttention";
    case OpKind::Softmax: return "Softmax";
    case OpKind::GeLU: return "GeLU";
    case OpKind::SiLU: return "SiLU";
    case OpKind::LayerNorm: return "LayerNorm";
    case OpKind::ResidualAdd: return "ResidualAdd";
    case OpKind::Embedding: return "Embedding";
  }
  return "?";
}

bool is_gemm(OpKind k) { return k == OpKind::Linear || k == OpKind::Embedding; }

bool is_elementwise(OpKind k) {
  return k == OpKind::Softmax || k == OpKind::GeLU || k == OpKind::SiLU ||
         k == OpKind::LayerNorm || k == OpKind::ResidualAdd;
}

std::int64_t Operator::weight_elems() const {
  switch (kind) {
    case OpKind::Linear:
    case OpKind::Embedding: return dims.N * dims.K;
    case OpKind::LayerNorm: return 2 * dims.N;
    default: return 0;
  }
}

std::string Operator::shape_key() const {
  std::string k = to_string(kind);
  for (auto v : {dims.B, dims.M, dims.N, dims.K}) k += ":" + std::to_string(v);
  k += precision == Precision::FP16 ? ":h" : ":f";
  if (kind == OpKind::FusedAttention) k += ":" + std::to_string(heads);
  k += ":" + std::to_string(predecessors.size());
  return k;
}

bool ComputeGraph::is_residual(std::pair<OpId, OpId> e) const {
  return std::find(residual_edges.begin(), residual_edges.end(), e) != residual_edges.end();
}

std::vector<OpId> ComputeGraph::topological_order() const {
  const int n = static_cast<int>(ops.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<OpId>> out(n);
  for (auto [p, c] : edges) {
    if (p < 0 || p >= n || c < 0 || c >= n) throw InvalidArgument("edge references unknown op");
    out[p].push_back(c);
    ++indeg[c];
  }
  std::vector<OpId> order;
  std::vector<OpId> ready;
  for (int i = n - 1; i >= 0; --i)
    if (indeg[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    OpId u = ready.back();
    ready.pop_back();
    order.push_back(u);
    for (OpId v : out[u])
      if (--indeg[v] == 0) ready.push_back(v);
    std::sort(ready.begin(), ready.end(), std::greater<>());
  }
  if (static_cast<int>(order.size()) != n) throw InvalidArgument("compute graph has a cycle");
  return order;
}

std::vector<OpId> ComputeGraph::consumers(OpId id) const {
  std::vector<OpId> out;
  for (auto [p, c] : edges)
    if (p == id) out.push_back(c);
  return out;
}

void ComputeGraph::validate() const {
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const Operator& op = ops[i];
    if (op.id != static_cast<OpId>(i)) throw InvalidArgument("op ids must equal their index");
    const Dims& d = op.dims;
    if (d.B <= 0 || d.M <= 0 || d.N <= 0 || d.K <= 0)
      throw InvalidArgument("op " + op.name + " has a non-positive dim");
    for (OpId p : op.predecessors)
      if (p != kGraphInput && (p < 0 || p >= op.id))
        throw InvalidArgument("op " + op.name + " predecessor is not earlier in order");
  }
  for (auto e : residual_edges)
    if (std::find(edges.begin(), edges.end(), e) == edges.end())
      throw InvalidArgument("residual edge missing from edge list");
  for (auto [p, c] : edges) {
    if (p < 0 || c < 0 || p >= static_cast<OpId>(ops.size()) || c >= static_cast<OpId>(ops.size()))
      throw InvalidArgument("edge references unknown op");
    const Dims& a = ops[p].dims;
    const Dims& b = ops[c].dims;
    if (a.B != b.B || a.M != b.M || a.K != b.N)
      throw InvalidArgument("tensor dims mismatch on edge " + ops[p].name + " -> " + ops[c].name);
  }
  (void)topological_order();
}

void ModelConfig::validate() const {
  if (heads < 1 || batch < 1 || hidden_size < 1 || layers < 1 || seq_len < 1 || vocab < 1)
    throw InvalidArgument("model config fields must be >= 1");
  if (hidden_size % heads != 0) throw InvalidArgument("hidden_size not divisible by heads");
  if (intermediate_size < 0) throw InvalidArgument("intermediate_size must be >= 0");
}

namespace {

struct Preset {
  const char* name;
  int heads;
  std::int64_t batch, hidden;
  int layers;
  std::int64_t seq, intermediate;
  bool gated;
};

// Intermediate widths follow the public model architectures.
constexpr Preset kPresets[] = {
    {"gpt3-6.7b", 32, 128, 4096, 32, 2048, 0, false},
    {"llama2-7b", 32, 128, 4096, 32, 4096, 11008, true},
    {"llama3-70b", 64, 128, 8192, 80, 4096, 28672, true},
    {"gpt3-76b", 80, 128, 10240, 60, 2048, 0, false},
    {"gpt3-175b", 96, 128, 12288, 96, 2048, 0, false},
    {"opt-175b", 96, 128, 12288, 96, 4096, 0, false},
};

}  // namespace

ModelConfig model_preset(const std::string& name) {
  for (const auto& p : kPresets) {
    if (name != p.name) continue;
    ModelConfig c;
    c.name = p.name;
    c.heads = p.heads;
    c.batch = p.batch;
    c.hidden_size = p.hidden;
    c.layers = p.layers;
    c.seq_len = p.seq;
    c.intermediate_size = p.intermediate;
    c.gated_mlp = p.gated;
    c.activation = p.gated ? Activation::SiLU : Activation::GeLU;
    return c;
  }
  throw InvalidArgument("unknown model preset '" + name + "'");
}

std::vector<std::string> model_preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

ComputeGraph build_transformer_graph(const ModelConfig& cfg) {
  cfg.validate();
  ComputeGraph g;
  const std::int64_t B = cfg.batch, M = cfg.seq_len, h = cfg.hidden_size;
  const std::int64_t inter = cfg.mlp_width();
  const std::int64_t up_width = cfg.gated_mlp ? 2 * inter : inter;

  auto add = [&](std::string name, OpKind kind, std::int64_t N, std::int64_t K,
                 std::vector<OpId> preds, int layer) {
    Operator op;
    op.id = static_cast<OpId>(g.ops.size());
    op.name = std::move(name);
    op.kind = kind;
    op.dims = {B, M, N, K};
    op.precision = cfg.precision;
    op.predecessors = std::move(preds);
    op.layer = layer;
    for (OpId p : op.predecessors)
      if (p != kGraphInput) g.edges.emplace_back(p, op.id);
    g.ops.push_back(std::move(op));
    return g.ops.back().id;
  };

  OpId x = kGraphInput;
  if (cfg.include_embedding) x = add("embed", OpKind::Embedding, cfg.vocab, h, {kGraphInput}, -1);

  for (int l = 0; l < cfg.layers; ++l) {
    std::string p = "L" + std::to_string(l) + ".";
    OpId qkv = add(p + "qkv", OpKind::Linear, h, 3 * h, {x}, l);
    OpId attn = add(p + "attn", OpKind::FusedAttention, 3 * h, h, {qkv}, l);
    g.ops[attn].heads = cfg.heads;
    OpId proj = add(p + "proj", OpKind::Linear, h, h, {attn}, l);
    OpId add1 = add(p + "add1", OpKind::ResidualAdd, h, h, {proj, x}, l);
    if (x != kGraphInput) g.residual_edges.emplace_back(x, add1);
    OpId ln = add(p + "ln", OpKind::LayerNorm, h, h, {add1}, l);
    OpId up = add(p + "mlp_up", OpKind::Linear, h, up_width, {ln}, l);
    OpKind act_kind = cfg.activation == Activation::SiLU ? OpKind::SiLU : OpKind::GeLU;
    OpId act = add(p + "act", act_kind, up_width, inter, {up}, l);
    OpId down = add(p + "mlp_down", OpKind::Linear, inter, h, {act}, l);
    OpId add2 = add(p + "add2", OpKind::ResidualAdd, h, h, {down, ln}, l);
    g.residual_edges.emplace_back(ln, add2);
    x = add2;
  }
  g.validate();
  return g;
}

ComputeGraph build_linear_chain(const std::vector<Dims>& dims, Precision p) {
  ComputeGraph g;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    Operator op;
    op.id = static_cast<OpId>(i);
    op.name = "linear" + std::to_string(i);
    op.kind = OpKind::Linear;
    op.dims = dims[i];
    op.precision = p;
    op.predecessors = {i == 0 ? kGraphInput : static_cast<OpId>(i - 1)};
    if (i > 0) g.edges.emplace_back(static_cast<OpId>(i - 1), static_cast<OpId>(i));
    g.ops.push_back(std::move(op));
  }
  g.validate();
  return g;
}

double elementwise_flops_per_elem(OpKind k) {
  switch (k) {
    case OpKind::ResidualAdd: return 1;
    case OpKind::GeLU: return 8;
    case OpKind::SiLU: return 4;
    case OpKind::LayerNorm: return 7;
    case OpKind::Softmax: return 5;
    default: return 0;
  }
}

OpCosts op_costs(const Operator& op) {
  OpCosts c;
  const double w = op.width();
  const Dims& d = op.dims;
  const double in = static_cast<double>(op.input_elems());
  const double out = static_cast<double>(op.output_elems());
  switch (op.kind) {
    case OpKind::Linear: {
      double f = 2.0 * d.B * d.M * d.N * d.K;
      c.fwd_flops = c.bwd_flops = c.grad_flops = f;
      break;
    }
    case OpKind::Embedding:
      c.fwd_flops = c.bwd_flops = out;
      break;
    case OpKind::FusedAttention:
      // Score and PV products; the M x M scores never hit memory.
      c.fwd_flops = 4.0 * d.B * d.M * d.M * d.K;
      c.bwd_flops = 2.0 * c.fwd_flops;
      break;
    default:
      c.fwd_flops = elementwise_flops_per_elem(op.kind) * in;
      c.bwd_flops = 2.0 * c.fwd_flops;
      break;
  }
  c.bytes.input = in * w * (op.kind == OpKind::ResidualAdd ? 2 : 1);
  if (op.kind == OpKind::Embedding) c.bytes.input = static_cast<double>(d.B * d.M) * 4;
  c.bytes.weight = static_cast<double>(op.weight_elems()) * w;
  c.bytes.output = out * w;
  c.bytes.gradients = c.bytes.weight;
  return c;
}

double parameter_count(const ComputeGraph& g) {
  double n = 0;
  for (const auto& op : g.ops) n += static_cast<double>(op.weight_elems());
  return n;
}

double training_flops(const ComputeGraph& g) {
  double f = 0;
  for (const auto& op : g.ops) f += op_costs(op).training_flops();
  return f;
}

namespace {

// cut[i] is true when the boundary between ops i and i+1 is a cut point.
std::vector<bool> cut_points(const ComputeGraph& g) {
  const int n = static_cast<int>(g.ops.size());
  std::vector<bool> cut(n > 0 ? n - 1 : 0, true);
  for (auto [p, c] : g.edges) {
    // Any edge longer than one step spans the boundaries it jumps over.
    // A one-step edge only blocks boundaries when some other edge spans it.
    if (c - p >= 2)
      for (int i = p; i < c; ++i) cut[i] = false;
  }
  // A later op reading the external input spans everything before it.
  for (const auto& op : g.ops)
    if (op.id > 0 && std::count(op.predecessors.begin(), op.predecessors.end(), kGraphInput))
      for (int i = 0; i < op.id; ++i) cut[i] = false;
  return cut;
}

}  // namespace

std::vector<std::pair<OpId, OpId>> cut_edges(const ComputeGraph& g) {
  auto cut = cut_points(g);
  std::vector<std::pair<OpId, OpId>> out;
  for (std::size_t i = 0; i < cut.size(); ++i) {
    if (!cut[i]) continue;
    std::pair<OpId, OpId> e{static_cast<OpId>(i), static_cast<OpId>(i + 1)};
    if (std::find(g.edges.begin(), g.edges.end(), e) != g.edges.end()) out.push_back(e);
  }
  return out;
}

std::vector<ComputeGraph> split_graph(const ComputeGraph& g) {
  g.validate();
  std::vector<ComputeGraph> parts;
  if (g.ops.empty()) return parts;
  auto cut = cut_points(g);
  const int n = static_cast<int>(g.ops.size());
  int start = 0;
  for (int i = 0; i < n; ++i) {
    if (i + 1 < n && !cut[i]) continue;
    ComputeGraph sub;
    for (int j = start; j <= i; ++j) {
      Operator op = g.ops[j];
      op.id = j - start;
      for (OpId& p : op.predecessors) p = (p >= start && p != kGraphInput) ? p - start : kGraphInput;
      sub.ops.push_back(std::move(op));
      sub.origin.push_back(g.origin.empty() ? j : g.origin[j]);
    }
    for (auto [p, c] : g.edges)
      if (p >= start && c <= i && c >= start) sub.edges.emplace_back(p - start, c - start);
    for (auto [p, c] : g.residual_edges)
      if (p >= start && c <= i && c >= start) sub.residual_edges.emplace_back(p - start, c - start);
    parts.push_back(std::move(sub));
    start = i + 1;
  }
  return parts;
}

std::string graph_to_json(const ComputeGraph& g) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& op : g.ops) {
    auto c = op_costs(op);
    nodes.push_back({{"id", op.id},
                     {"name", op.name},
                     {"kind", to_string(op.kind)},
                     {"B", op.dims.B},
                     {"M", op.dims.M},
                     {"N", op.dims.N},
                     {"K", op.dims.K},
                     {"precision", op.precision == Precision::FP16 ? "fp16" : "fp32"},
                     {"layer", op.layer},
                     {"fwd_flops", c.fwd_flops},
                     {"weight_bytes", c.bytes.weight}});
  }
  json edges = json::array();
  for (auto [p, c] : g.edges)
    edges.push_back({{"src", p}, {"dst", c}, {"residual", g.is_residual({p, c})}});
  json doc = {{"nodes", nodes}, {"edges", edges}};
  return doc.dump(2);
}

}  // namespace wsc
