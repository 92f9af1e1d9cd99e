#include "wsc/parallelism.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include "wsc/errors.hpp"
#include "wsc/tatp.hpp"

namespace wsc {

const char* to_string(Axis a) {
  switch (a) {
    case Axis::DP: return "dp";
    case Axis::TP: return "tp";
    case Axis::SP: return "sp";
    case Axis::CP: return "cp";
    case Axis::TATP: return "tatp";
  }
  return "?";
}

const char* to_string(TransferChoice c) { return c == TransferChoice::Weight ? "Weight" : "Input"; }

const char* to_string(CommKind k) {
  switch (k) {
    case CommKind::AllReduce: return "AllReduce";
    case CommKind::AllGather: return "AllGather";
    case CommKind::ReduceScatter: return "ReduceScatter";
    case CommKind::P2PStream: return "P2P-stream";
    case CommKind::ReshardP2P: return "Reshard-P2P";
  }
  return "?";
}

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Fwd: return "fwd";
    case Stage::Bwd: return "bwd";
    case Stage::Grad: return "grad";
  }
  return "?";
}

int ParallelConfig::degree(Axis a) const {
  switch (a) {
    case Axis::DP: return dp;
    case Axis::TP: return tp;
    case Axis::SP: return sp;
    case Axis::CP: return cp;
    case Axis::TATP: return tatp;
  }
  return 1;
}

int ParallelConfig::tp_n() const {
  for (int d = 1; d <= tp; ++d)
    if (tp % d == 0 && d * d >= tp) return d;
  return tp;
}

void ParallelConfig::validate() const {
  if (dp < 1 || tp < 1 || sp < 1 || cp < 1 || tatp < 1)
    throw InvalidArgument("parallel degrees must be >= 1");
  std::array<bool, kAxisCount> seen{};
  for (Axis a : axis_order) {
    int i = static_cast<int>(a);
    if (i < 0 || i >= kAxisCount || seen[i]) throw InvalidArgument("axis_order must be a permutation");
    seen[i] = true;
  }
}

std::string ParallelConfig::tuple() const {
  std::string s = "(" + std::to_string(dp) + "," + std::to_string(tp) + "," + std::to_string(sp) + "," +
                  std::to_string(tatp);
  if (cp > 1) s += ",cp=" + std::to_string(cp);
  if (fsdp) s += ",fsdp";
  return s + ")";
}

ParallelConfig parse_strategy(std::string_view text) {
  std::string t;
  for (char c : text)
    if (c != ' ' && c != '(' && c != ')') t += c;
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= t.size()) {
    auto pos = t.find(',', start);
    if (pos == std::string::npos) pos = t.size();
    parts.push_back(t.substr(start, pos - start));
    start = pos + 1;
  }
  auto num = [&](const std::string& s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 1)
      throw InvalidArgument("bad strategy field '" + s + "' in '" + std::string(text) + "'");
    return v;
  };
  if (parts.size() < 4) throw InvalidArgument("strategy needs (DP,TP,SP,TATP): '" + std::string(text) + "'");
  ParallelConfig c;
  c.dp = num(parts[0]);
  c.tp = num(parts[1]);
  c.sp = num(parts[2]);
  c.tatp = num(parts[3]);
  for (std::size_t i = 4; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p == "fsdp") c.fsdp = true;
    else if (p.rfind("cp=", 0) == 0) c.cp = num(p.substr(3));
    else throw InvalidArgument("unknown strategy suffix '" + p + "'");
  }
  return c;
}

Box intersect(const Box& a, const Box& b) {
  Box o;
  for (int i = 0; i < 3; ++i) {
    o.r[i].lo = std::max(a.r[i].lo, b.r[i].lo);
    o.r[i].hi = std::min(a.r[i].hi, b.r[i].hi);
    if (o.r[i].hi < o.r[i].lo) o.r[i].hi = o.r[i].lo;
  }
  return o;
}

const Box& ShardLayout::box(int rank, Role r) const {
  const RankShard& s = ranks.at(rank);
  switch (r) {
    case Role::Input: return s.input;
    case Role::Weight: return s.weight;
    case Role::Output: return s.output;
  }
  return s.input;
}

int ShardLayout::distinct(Role r) const {
  std::set<Box> boxes;
  for (int i = 0; i < rank_count(); ++i)
    if (!box(i, r).empty()) boxes.insert(box(i, r));
  return static_cast<int>(boxes.size());
}

// ---- ranks ------------------------------------------------------------------

std::array<int, kAxisCount> rank_coords(const ParallelConfig& cfg, int rank) {
  std::array<int, kAxisCount> c{};
  for (int a = kAxisCount - 1; a >= 0; --a) {
    int d = cfg.degree(static_cast<Axis>(a));
    c[a] = rank % d;
    rank /= d;
  }
  return c;
}

int rank_of(const ParallelConfig& cfg, const std::array<int, kAxisCount>& coords) {
  int r = 0;
  for (int a = 0; a < kAxisCount; ++a) r = r * cfg.degree(static_cast<Axis>(a)) + coords[a];
  return r;
}

std::vector<std::vector<int>> rank_groups(const ParallelConfig& cfg, std::span<const Axis> axes) {
  std::array<bool, kAxisCount> in{};
  for (Axis a : axes) in[static_cast<int>(a)] = true;
  std::map<std::array<int, kAxisCount>, std::vector<int>> by_rest;
  for (int r = 0; r < cfg.product(); ++r) {
    auto c = rank_coords(cfg, r);
    for (int a = 0; a < kAxisCount; ++a)
      if (in[a]) c[a] = 0;
    by_rest[c].push_back(r);  // canonical order keeps inner axes fastest
  }
  std::vector<std::vector<int>> out;
  out.reserve(by_rest.size());
  for (auto& [_, g] : by_rest) out.push_back(std::move(g));
  return out;
}

// ---- shard layout ---------------------------------------------------------------

namespace {

std::vector<std::int64_t> boundaries(std::int64_t len, int parts, const std::vector<double>& weights,
                                     const char* what) {
  std::vector<std::int64_t> b(parts + 1, 0);
  if (weights.empty()) {
    if (len % parts != 0)
      throw InvalidArgument(std::string(what) + " dim " + std::to_string(len) + " not divisible by " +
                            std::to_string(parts));
    for (int i = 0; i <= parts; ++i) b[i] = len / parts * i;
    return b;
  }
  if (static_cast<int>(weights.size()) != parts)
    throw InvalidArgument(std::string(what) + " split weights need one entry per part");
  if (len < parts) throw InvalidArgument(std::string(what) + " dim smaller than part count");
  double total = 0;
  for (double w : weights) {
    if (!(w > 0)) throw InvalidArgument("split weights must be > 0");
    total += w;
  }
  double acc = 0;
  for (int i = 1; i < parts; ++i) {
    acc += weights[i - 1];
    b[i] = static_cast<std::int64_t>(std::llround(static_cast<double>(len) * acc / total));
  }
  b[parts] = len;
  // Every part keeps at least one row.
  for (int i = 1; i < parts; ++i) b[i] = std::max(b[i], b[i - 1] + 1);
  for (int i = parts - 1; i >= 1; --i) b[i] = std::min(b[i], b[i + 1] - 1);
  return b;
}

Range part(const std::vector<std::int64_t>& b, int i) { return {b[i], b[i + 1]}; }

Range even(std::int64_t len, int parts, int i, const char* what) {
  if (len % parts != 0)
    throw InvalidArgument(std::string(what) + " dim " + std::to_string(len) + " not divisible by " +
                          std::to_string(parts));
  return {len / parts * i, len / parts * (i + 1)};
}

int replication(const ShardLayout& l, Role r) {
  int d = l.distinct(r);
  return d == 0 ? 0 : l.rank_count() / d;
}

}  // namespace

ShardLayout shard_tensors(const Operator& op, const ParallelConfig& cfg, std::optional<TransferChoice> choice,
                          const SplitWeights& splits) {
  cfg.validate();
  const Dims& d = op.dims;
  ShardLayout l;
  l.kind = op.kind;
  l.dims = d;
  l.width = op.width();
  l.cfg = cfg;
  const int P = cfg.product();
  const int tn = cfg.tp_n(), tk = cfg.tp_k();
  const bool gemm = is_gemm(op.kind);
  if (op.kind == OpKind::FusedAttention) l.choice = TransferChoice::Input;
  else if (gemm) l.choice = choice.value_or(select_transfer_operand(op, cfg));
  else l.choice = TransferChoice::Weight;
  if (cfg.tatp == 1) l.choice = gemm ? TransferChoice::Weight : l.choice;

  auto bb = boundaries(d.B, cfg.dp, splits.b, "B");
  auto mb = boundaries(d.M, cfg.m_parts(), splits.m, "M");
  // K parts: tk uniform blocks, each cut into tatp (possibly weighted) slices.
  std::vector<std::int64_t> kb;
  if (gemm) {
    if (d.K % tk != 0) throw InvalidArgument("K dim not divisible by tp_k");
    std::int64_t blk = d.K / tk;
    kb.push_back(0);
    for (int j = 0; j < tk; ++j) {
      auto inner = boundaries(blk, cfg.tatp, splits.k, "K");
      for (int t = 1; t <= cfg.tatp; ++t) kb.push_back(j * blk + inner[t]);
    }
  }
  if (op.kind == OpKind::FusedAttention && op.heads % cfg.tp != 0)
    throw InvalidArgument("attention heads not divisible by tp");
  if (cfg.fsdp && gemm && (d.N / tn) % cfg.dp != 0)
    throw InvalidArgument("FSDP weight shard not divisible by dp");

  l.ranks.resize(P);
  for (int r = 0; r < P; ++r) {
    auto c = rank_coords(cfg, r);
    const int c_dp = c[0], c_tp = c[1], c_sp = c[2], c_cp = c[3], c_t = c[4];
    const int tn_i = c_tp / tk, tk_i = c_tp % tk;
    const int m_group = (c_sp * cfg.cp + c_cp) * cfg.tatp;
    const Range Br = part(bb, c_dp);
    const Range Mr = part(mb, m_group + c_t);
    RankShard& s = l.ranks[r];
    if (gemm) {
      Range Nr = even(d.N, tn, tn_i, "N");
      Range Kr = part(kb, tk_i * cfg.tatp + c_t);
      Range Kblock{kb[tk_i * cfg.tatp], kb[(tk_i + 1) * cfg.tatp]};
      s.input = op.kind == OpKind::Embedding ? Box{{Br, Mr, Range{0, 1}}} : Box{{Br, Mr, Nr}};
      s.weight_compute = Box{{Nr, Kr, Range{0, 1}}};
      s.weight = s.weight_compute;
      if (cfg.fsdp) {
        std::int64_t w = Nr.size() / cfg.dp;
        s.weight.r[0] = {Nr.lo + w * c_dp, Nr.lo + w * (c_dp + 1)};
      }
      if (l.choice == TransferChoice::Weight) {
        s.output = Box{{Br, Mr, Kblock}};
      } else {
        Range Mg{mb[m_group], mb[m_group + cfg.tatp]};
        s.output = Box{{Br, Mg, Kr}};
      }
    } else if (op.kind == OpKind::FusedAttention) {
      const int h_idx = tk_i * tn + tn_i;
      s.input = Box{{Br, Mr, even(d.N, cfg.tp, h_idx, "attention width")}};
      s.output = Box{{Br, Mr, even(d.K, cfg.tp, h_idx, "attention width")}};
    } else {
      s.input = Box{{Br, Mr, even(d.N, tk, tk_i, "width")}};
      s.output = Box{{Br, Mr, even(d.K, tk, tk_i, "width")}};
      if (op.kind == OpKind::LayerNorm) {
        s.weight = Box{{even(d.N, tk, tk_i, "width"), Range{0, 2}, Range{0, 1}}};
        s.weight_compute = s.weight;
      }
    }
  }
  l.replication_input = replication(l, Role::Input);
  l.replication_weight = replication(l, Role::Weight);
  l.replication_output = replication(l, Role::Output);
  return l;
}

double rank_flops(const Operator& op, const ShardLayout& layout, int rank, Stage stage) {
  const RankShard& s = layout.ranks.at(rank);
  double fwd = 0;
  switch (op.kind) {
    case OpKind::Linear:
      if (stage == Stage::Fwd || stage == Stage::Bwd || stage == Stage::Grad)
        return 2.0 * static_cast<double>(s.output.volume()) * static_cast<double>(s.input.r[2].size());
      return 0;
    case OpKind::Embedding:
      return stage == Stage::Grad ? 0 : static_cast<double>(s.output.volume());
    case OpKind::FusedAttention:
      fwd = 4.0 * s.output.r[0].size() * s.output.r[1].size() * static_cast<double>(op.dims.M) *
            s.output.r[2].size();
      break;
    default:
      fwd = elementwise_flops_per_elem(op.kind) * static_cast<double>(s.input.volume());
      break;
  }
  if (stage == Stage::Fwd) return fwd;
  if (stage == Stage::Bwd) return 2.0 * fwd;
  return 0;
}

// ---- placement --------------------------------------------------------------

std::string PlacementGenes::key() const {
  std::string k;
  if (axis_order)
    for (Axis a : *axis_order) k += std::to_string(static_cast<int>(a));
  else
    k += "-";
  k += "|";
  for (int e : row_exp) k += std::to_string(e) + ",";
  k += "|" + std::to_string(origin_row) + "," + std::to_string(origin_col);
  k += snake_list ? "|s" : "|b";
  k += "|" + std::to_string(static_cast<int>(transfer));
  return k;
}

std::vector<DieId> GroupAssignment::dies_of(const std::vector<int>& ranks) const {
  std::vector<DieId> out;
  out.reserve(ranks.size());
  for (int r : ranks) out.push_back(rank_to_die.at(r));
  return out;
}

std::string GroupAssignment::signature() const {
  std::string s;
  for (DieId d : rank_to_die) s += std::to_string(d) + ".";
  return s;
}

namespace {

int largest_divisor_at_most(int n, int cap) {
  for (int d = std::min(n, cap); d >= 1; --d)
    if (n % d == 0) return d;
  return 1;
}

}  // namespace

GroupAssignment assign_groups(const WaferTopology& topo, const ParallelConfig& cfg, const PlacementGenes& genes) {
  cfg.validate();
  const int P = cfg.product();
  if (P > topo.enabled_die_count())
    throw InvalidArgument("degree product " + std::to_string(P) + " exceeds enabled die count");
  AxisOrder order = genes.axis_order.value_or(cfg.axis_order);
  {
    ParallelConfig probe = cfg;
    probe.axis_order = order;
    probe.validate();
  }
  GroupAssignment ga;
  ga.cfg = cfg;
  ga.cfg.axis_order = order;
  ga.rank_to_die.assign(P, -1);

  if (genes.snake_list) {
    // Enabled dies in boustrophedon order, starting at the origin die.
    std::vector<DieId> snake;
    for (int r = 0; r < topo.rows(); ++r)
      for (int i = 0; i < topo.cols(); ++i) {
        int c = (r % 2 == 0) ? i : topo.cols() - 1 - i;
        DieId d = topo.id({r, c});
        if (topo.die_enabled(d)) snake.push_back(d);
      }
    int start = 0;
    DieId origin = topo.id({std::clamp(genes.origin_row, 0, topo.rows() - 1),
                            std::clamp(genes.origin_col, 0, topo.cols() - 1)});
    auto it = std::find(snake.begin(), snake.end(), origin);
    if (it != snake.end()) start = static_cast<int>(it - snake.begin());
    if (start + P > static_cast<int>(snake.size())) start = static_cast<int>(snake.size()) - P;
    // Rank index in axis order, innermost axis fastest.
    for (int r = 0; r < P; ++r) {
      auto c = rank_coords(cfg, r);
      int idx = 0;
      for (Axis a : order) idx = idx * cfg.degree(a) + c[static_cast<int>(a)];
      ga.rank_to_die[r] = snake[start + idx];
    }
  } else {
    const int avail_rows = topo.rows() - genes.origin_row;
    const int avail_cols = topo.cols() - genes.origin_col;
    if (genes.origin_row < 0 || genes.origin_col < 0 || avail_rows < 1 || avail_cols < 1)
      throw InvalidArgument("placement origin outside the mesh");
    std::array<int, kAxisCount> rf{}, cf{};
    int used_cols = 1;
    for (int i = kAxisCount - 1; i >= 0; --i) {
      int a = static_cast<int>(order[i]);
      int d = cfg.degree(order[i]);
      int e = genes.row_exp[a];
      if (d == 1) {
        rf[a] = cf[a] = 1;
        continue;
      }
      if (e < 0) {
        cf[a] = largest_divisor_at_most(d, avail_cols / used_cols);
      } else {
        int r = std::gcd(d, 1 << std::min(e, 30));
        cf[a] = d / r;
      }
      rf[a] = d / cf[a];
      used_cols *= cf[a];
    }
    int used_rows = 1;
    for (int a = 0; a < kAxisCount; ++a) used_rows *= rf[a];
    if (used_rows > avail_rows || used_cols > avail_cols)
      throw InvalidArgument("placement block " + std::to_string(used_rows) + "x" + std::to_string(used_cols) +
                            " does not fit the mesh");
    std::array<int, kAxisCount> rs{}, cs{};
    int row_stride = 1, col_stride = 1;
    for (int i = kAxisCount - 1; i >= 0; --i) {
      int a = static_cast<int>(order[i]);
      rs[a] = row_stride;
      cs[a] = col_stride;
      row_stride *= rf[a];
      col_stride *= cf[a];
    }
    for (int r = 0; r < P; ++r) {
      auto c = rank_coords(cfg, r);
      int row = genes.origin_row, col = genes.origin_col;
      for (int a = 0; a < kAxisCount; ++a) {
        int j = c[a];
        int rd = j / cf[a];
        int cd = (rd % 2 == 0) ? j % cf[a] : cf[a] - 1 - j % cf[a];
        row += rd * rs[a];
        col += cd * cs[a];
      }
      ga.rank_to_die[r] = topo.id({row, col});
    }
  }
  for (DieId d : ga.rank_to_die)
    if (!topo.die_enabled(d)) throw InvalidArgument("placement uses disabled die " + std::to_string(d));
  for (int a = 0; a < kAxisCount; ++a) {
    Axis ax = static_cast<Axis>(a);
    for (const auto& g : rank_groups(cfg, std::span<const Axis>(&ax, 1))) ga.groups[a].push_back(ga.dies_of(g));
  }
  return ga;
}

const std::vector<DieId>& RingCache::order(const std::vector<DieId>& group) {
  auto it = memo_.find(group);
  if (it != memo_.end()) return it->second;
  std::vector<DieId> out = group;
  if (group.size() >= 3) {
    auto ring = find_ring_embedding(*topo_, group);
    if (ring.contiguous) {
      out = ring.die_cycle;
    } else if (!is_chain(*topo_, group)) {
      if (auto chain = find_chain_embedding(*topo_, group)) out = *chain;
    }
  }
  return memo_.emplace(group, std::move(out)).first->second;
}

// ---- communication ------------------------------------------------------------

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  return h;
}

struct CommBuilder {
  const Operator& op;
  const ParallelConfig& cfg;
  const ShardLayout& layout;
  const GroupAssignment& ga;
  RingCache& rings;
  const CommOptions& opts;
  std::vector<CommOp> out;
  int next_stream = 0;

  void collective(CommKind kind, const std::vector<int>& ranks, double bytes, Stage stage, std::uint64_t tag) {
    if (ranks.size() < 2 || !(bytes > 0)) return;
    CommOp c;
    c.kind = kind;
    c.group = rings.order(ga.dies_of(ranks));
    c.bytes = bytes;
    c.stage = stage;
    c.op = op.id;
    c.payload = mix(mix(static_cast<std::uint64_t>(op.id) + 1, tag), static_cast<std::uint64_t>(ranks.front()));
    out.push_back(std::move(c));
  }

  // Stream group in chain order when one exists.
  std::vector<int> chain_ranks(const std::vector<int>& ranks) {
    auto dies = ga.dies_of(ranks);
    if (dies.size() < 2 || is_chain(rings.topology(), dies)) return ranks;
    auto chain = find_chain_embedding(rings.topology(), dies);
    if (!chain) return ranks;
    std::vector<int> out;
    for (DieId d : *chain) out.push_back(ranks[std::find(dies.begin(), dies.end(), d) - dies.begin()]);
    return out;
  }

  void stream(const std::vector<int>& ranks, const std::vector<double>& bytes_by_rank, Stage stage,
              double scale, TransferChoice choice) {
    const int n = static_cast<int>(ranks.size());
    if (n < 2) return;
    auto ordered = chain_ranks(ranks);
    std::vector<double> bytes;
    for (int r : ordered) bytes.push_back(bytes_by_rank[r] * scale);
    auto dies = ga.dies_of(ordered);
    StreamSchedule s = generate_stream_schedule(n, choice);
    StreamBinding b;
    b.stream = opts.stream_id_base + next_stream++;
    b.stage = stage;
    b.op = op.id;
    b.strict = !opts.allow_multihop_streams;
    b.payload_salt = static_cast<std::uint64_t>(op.id) + 1;
    auto ops = schedule_to_comm_ops(s, rings.topology(), dies, bytes, b);
    out.insert(out.end(), ops.begin(), ops.end());
  }

  // Ring pass of each member's block to its successor, n-1 rounds.
  void ring_pass(const std::vector<int>& ranks, const std::vector<double>& bytes_by_rank, Stage stage, double scale) {
    const int n = static_cast<int>(ranks.size());
    if (n < 2) return;
    auto dies = rings.order(ga.dies_of(ranks));
    int sid = opts.stream_id_base + next_stream++;
    std::vector<int> ordered;
    for (DieId d : dies)
      for (int r : ranks)
        if (ga.rank_to_die[r] == d) ordered.push_back(r);
    for (int t = 0; t + 1 < n; ++t)
      for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        CommOp c;
        c.kind = CommKind::P2PStream;
        c.group = {dies[i], dies[j]};
        c.bytes = bytes_by_rank[ordered[(i - t + n) % n]] * scale;
        c.round = t;
        c.stage = stage;
        c.stream = sid;
        c.src_pos = i;
        c.dst_pos = j;
        c.op = op.id;
        c.payload = mix(mix(static_cast<std::uint64_t>(op.id) + 7, static_cast<std::uint64_t>(sid)),
                        static_cast<std::uint64_t>((i - t + n) % n));
        out.push_back(std::move(c));
      }
  }

  // Split TP groups into (same tk_i) n-groups or (same tn_i) k-groups.
  std::vector<std::vector<int>> tp_subgroups(bool n_groups) {
    std::vector<std::vector<int>> res;
    const Axis tp = Axis::TP;
    const int tk = cfg.tp_k();
    for (const auto& g : rank_groups(cfg, std::span<const Axis>(&tp, 1))) {
      std::map<int, std::vector<int>> sub;
      for (int r : g) {
        int c_tp = rank_coords(cfg, r)[1];
        sub[n_groups ? c_tp % tk : c_tp / tk].push_back(r);
      }
      for (auto& [_, v] : sub) res.push_back(std::move(v));
    }
    return res;
  }

  void run() {
    const int P = cfg.product();
    const int tn = cfg.tp_n(), tk = cfg.tp_k();
    const double w = layout.width;
    const Axis tatp_axis = Axis::TATP;
    auto tatp_groups = rank_groups(cfg, std::span<const Axis>(&tatp_axis, 1));

    if (is_gemm(op.kind)) {
      if (cfg.tatp > 1 && op.kind == OpKind::Linear) {
        std::vector<double> sub(P);
        for (int r = 0; r < P; ++r)
          sub[r] = layout.choice == TransferChoice::Weight
                       ? static_cast<double>(layout.ranks[r].weight_compute.volume()) * w
                       : layout.bytes(r, Role::Input);
        for (const auto& g : tatp_groups)
          for (Stage s : {Stage::Fwd, Stage::Bwd, Stage::Grad}) stream(g, sub, s, 1.0, layout.choice);
      }
      if (tn > 1)
        for (const auto& g : tp_subgroups(true)) collective(CommKind::AllReduce, g, layout.bytes(g[0], Role::Output), Stage::Fwd, 1);
      if (tk > 1 && op.kind == OpKind::Linear)
        for (const auto& g : tp_subgroups(false)) collective(CommKind::AllReduce, g, layout.bytes(g[0], Role::Input), Stage::Bwd, 2);
      if (cfg.fsdp && cfg.dp > 1) {
        const Axis dp = Axis::DP;
        for (const auto& g : rank_groups(cfg, std::span<const Axis>(&dp, 1))) {
          double full = static_cast<double>(layout.ranks[g[0]].weight_compute.volume()) * w;
          collective(CommKind::AllGather, g, full, Stage::Fwd, 3);
          collective(CommKind::AllGather, g, full, Stage::Bwd, 4);
          collective(CommKind::ReduceScatter, g, full, Stage::Grad, 5);
        }
        std::vector<Axis> rest{Axis::SP, Axis::CP};
        for (const auto& g : rank_groups(cfg, rest)) collective(CommKind::AllReduce, g, layout.bytes(g[0], Role::Weight), Stage::Grad, 6);
      } else {
        std::vector<Axis> rep{Axis::DP, Axis::SP, Axis::CP};
        for (const auto& g : rank_groups(cfg, rep)) collective(CommKind::AllReduce, g, layout.bytes(g[0], Role::Weight), Stage::Grad, 6);
      }
      return;
    }

    if (op.kind == OpKind::FusedAttention) {
      // K and V of the rank's sequence slice: two thirds of the qkv input.
      std::vector<double> kv(P);
      for (int r = 0; r < P; ++r) kv[r] = layout.bytes(r, Role::Input) * 2.0 / 3.0;
      if (cfg.sp > 1) {
        const Axis sp = Axis::SP;
        for (const auto& g : rank_groups(cfg, std::span<const Axis>(&sp, 1))) {
          double full = 0;
          for (int r : g) full += kv[r];
          collective(CommKind::AllGather, g, full, Stage::Fwd, 11);
          collective(CommKind::ReduceScatter, g, full, Stage::Bwd, 12);
        }
      }
      const double gathered = static_cast<double>(cfg.sp);
      if (cfg.cp > 1) {
        const Axis cp = Axis::CP;
        for (const auto& g : rank_groups(cfg, std::span<const Axis>(&cp, 1))) {
          ring_pass(g, kv, Stage::Fwd, gathered);
          ring_pass(g, kv, Stage::Bwd, 2.0 * gathered);
        }
      }
      if (cfg.tatp > 1) {
        for (const auto& g : tatp_groups) {
          stream(g, kv, Stage::Fwd, gathered, TransferChoice::Input);
          stream(g, kv, Stage::Bwd, 2.0 * gathered, TransferChoice::Input);
        }
      }
      return;
    }

    if (op.kind == OpKind::LayerNorm && tk > 1) {
      for (const auto& g : tp_subgroups(false)) {
        const Box& b = layout.ranks[g[0]].input;
        double stats = static_cast<double>(b.r[0].size() * b.r[1].size()) * 2 * 4;
        collective(CommKind::AllReduce, g, stats, Stage::Fwd, 21);
        collective(CommKind::AllReduce, g, stats, Stage::Bwd, 22);
      }
    }
  }
};

}  // namespace

std::vector<CommOp> derive_comm_ops(const Operator& op, const ParallelConfig& cfg, const ShardLayout& layout,
                                    const GroupAssignment& assignment, RingCache& rings, const CommOptions& opts) {
  if (layout.rank_count() != cfg.product() || static_cast<int>(assignment.rank_to_die.size()) != cfg.product())
    throw InvalidArgument("layout/assignment do not match config");
  CommBuilder b{op, cfg, layout, assignment, rings, opts, {}, 0};
  b.run();
  return std::move(b.out);
}

std::vector<CommOp> reshard_ops(const WaferTopology& topo, const ShardLayout& from, const GroupAssignment& from_assign,
                                const ShardLayout& to, const GroupAssignment& to_assign, Stage stage, OpId consumer) {
  // Forward: producer outputs feed consumer inputs. Backward: consumer input
  // gradients flow back into the producer's output layout.
  const bool fwd = stage == Stage::Fwd;
  const ShardLayout& have_l = fwd ? from : to;
  const GroupAssignment& have_a = fwd ? from_assign : to_assign;
  const Role have_role = fwd ? Role::Output : Role::Input;
  const ShardLayout& need_l = fwd ? to : from;
  const GroupAssignment& need_a = fwd ? to_assign : from_assign;
  const Role need_role = fwd ? Role::Input : Role::Output;
  const double width = need_l.width;

  std::map<Box, std::vector<DieId>> holders;
  std::map<DieId, std::vector<Box>> held_by_die;
  for (int r = 0; r < have_l.rank_count(); ++r) {
    const Box& b = have_l.box(r, have_role);
    DieId d = have_a.rank_to_die[r];
    holders[b].push_back(d);
    held_by_die[d].push_back(b);
  }
  std::vector<CommOp> out;
  std::set<std::pair<DieId, Box>> done;
  for (int r = 0; r < need_l.rank_count(); ++r) {
    DieId dst = need_a.rank_to_die[r];
    const Box& want = need_l.box(r, need_role);
    if (!done.insert({dst, want}).second) continue;
    for (const auto& [box, hs] : holders) {
      Box piece = intersect(want, box);
      if (piece.empty()) continue;
      bool local = false;
      for (const Box& own : held_by_die[dst])
        if (intersect(own, piece) == piece) local = true;
      if (local) continue;
      DieId best = hs.front();
      int best_d = manhattan(topo.coord(best), topo.coord(dst));
      for (DieId h : hs) {
        int dd = manhattan(topo.coord(h), topo.coord(dst));
        if (dd < best_d || (dd == best_d && h < best)) {
          best = h;
          best_d = dd;
        }
      }
      CommOp c;
      c.kind = CommKind::ReshardP2P;
      c.group = {best, dst};
      c.bytes = static_cast<double>(piece.volume()) * width;
      c.stage = stage;
      c.op = consumer;
      std::uint64_t h = mix(static_cast<std::uint64_t>(consumer) + 101, static_cast<std::uint64_t>(stage));
      for (const auto& rg : piece.r) h = mix(mix(h, static_cast<std::uint64_t>(rg.lo)), static_cast<std::uint64_t>(rg.hi));
      c.payload = h;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::string placement_key(const ShardLayout& layout, const GroupAssignment& assignment, Role role) {
  std::vector<std::pair<DieId, Box>> v;
  v.reserve(layout.ranks.size());
  for (int r = 0; r < layout.rank_count(); ++r) v.emplace_back(assignment.rank_to_die[r], layout.box(r, role));
  std::sort(v.begin(), v.end());
  std::string k;
  k.reserve(v.size() * 52);
  auto put = [&](std::int64_t x) { k.append(reinterpret_cast<const char*>(&x), sizeof x); };
  for (const auto& [d, b] : v) {
    put(d);
    for (const auto& rg : b.r) {
      put(rg.lo);
      put(rg.hi);
    }
  }
  return k;
}

}  // namespace wsc
