#include "wsc/tatp.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "wsc/errors.hpp"

namespace wsc {

std::size_t StreamSchedule::send_count() const {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.sends.size();
  return n;
}

int stream_compute_index(int n, int die, int t) {
  const int half = (n + 1) / 2;
  return die < half ? (die + t) % n : (die - t % n + n) % n;
}

StreamSchedule generate_stream_schedule(int n, TransferChoice choice) {
  if (n < 1) throw InvalidArgument("stream schedule needs n >= 1");
  StreamSchedule s;
  s.n_dies = n;
  s.transfer_choice = choice;
  s.rounds.resize(n);
  for (int t = 0; t < n; ++t) {
    s.rounds[t].compute.resize(n);
    for (int d = 0; d < n; ++d) s.rounds[t].compute[d] = stream_compute_index(n, d, t);
  }
  const int half = (n + 1) / 2;
  auto send = [&](int round, int src, int dst, int item) {
    s.rounds.at(round).sends.push_back({src, dst, item});
  };

  // Outward waves: item k walks away from its owner one hop per round until it
  // reaches the farthest die that still needs it on the first pass.
  for (int k = 0; k < n; ++k) {
    int far_right = k;
    for (int d = k + 1; d < n; ++d)
      if (d >= half) far_right = d;
    for (int j = 0; j < far_right - k; ++j) send(j, k + j, k + j + 1, k);
    int far_left = k;
    for (int d = k - 1; d >= 0; --d)
      if (d < half) far_left = d;
    for (int j = 0; j < k - far_left; ++j) send(j, k - j, k - j - 1, k);
  }
  // Lower-half dies that need an item late get it by a bounce trip
  // j -> half-1 -> j+1, timed to arrive exactly when it is used.
  for (int j = 0; j + 1 <= half - 1; ++j) {
    int r = n - 2 * half + 2 + 2 * j;
    for (int d = j; d < half - 1; ++d) send(r++, d, d + 1, j);
    for (int d = half - 1; d > j + 1; --d) send(r++, d, d - 1, j);
  }
  // Mirror image for the upper half: k -> half -> k-1.
  for (int k = half + 1; k < n; ++k) {
    int r = n - 2 * (k - half);
    for (int d = k; d > half; --d) send(r++, d, d - 1, k);
    for (int d = half; d < k - 1; ++d) send(r++, d, d + 1, k);
  }
  for (auto& round : s.rounds)
    std::sort(round.sends.begin(), round.sends.end(), [](const StreamSend& a, const StreamSend& b) {
      return std::tie(a.src, a.dst, a.item) < std::tie(b.src, b.dst, b.item);
    });
  return s;
}

StreamSchedule naive_ring_schedule(int n, TransferChoice choice) {
  if (n < 1) throw InvalidArgument("stream schedule needs n >= 1");
  StreamSchedule s;
  s.n_dies = n;
  s.transfer_choice = choice;
  s.rounds.resize(n);
  for (int t = 0; t < n; ++t) {
    s.rounds[t].compute.resize(n);
    for (int d = 0; d < n; ++d) s.rounds[t].compute[d] = (d + t) % n;
    if (t + 1 < n)
      for (int d = 0; d < n; ++d)
        s.rounds[t].sends.push_back({d, (d - 1 + n) % n, (d + t) % n});
  }
  return s;
}

ScheduleVerdict verify_schedule(const StreamSchedule& s) {
  ScheduleVerdict v;
  const int n = s.n_dies;
  v.coverage_ok = static_cast<int>(s.rounds.size()) == n;
  for (const auto& r : s.rounds)
    if (static_cast<int>(r.compute.size()) != n) v.coverage_ok = false;
  if (v.coverage_ok) {
    for (int d = 0; d < n && v.coverage_ok; ++d) {
      std::vector<int> seen(n, 0);
      for (const auto& r : s.rounds) {
        int k = r.compute[d];
        if (k < 0 || k >= n || seen[k]++) v.coverage_ok = false;
      }
    }
  }

  v.hop_ok = true;
  for (const auto& r : s.rounds)
    for (const auto& snd : r.sends)
      if (snd.src < 0 || snd.src >= n || snd.dst < 0 || snd.dst >= n || std::abs(snd.src - snd.dst) != 1)
        v.hop_ok = false;

  // Residency: own item always; received items for the following round only.
  v.availability_ok = true;
  std::vector<std::set<int>> arrived(n);
  for (std::size_t t = 0; t < s.rounds.size(); ++t) {
    const auto& r = s.rounds[t];
    std::vector<std::set<int>> next(n);
    std::map<std::pair<int, int>, int> edge_load;
    for (int d = 0; d < n; ++d) {
      std::set<int> resident = arrived[d];
      resident.insert(d);
      v.buffer_peak = std::max(v.buffer_peak, static_cast<int>(resident.size()));
      if (d < static_cast<int>(r.compute.size()) && !resident.count(r.compute[d])) v.availability_ok = false;
    }
    for (const auto& snd : r.sends) {
      if (snd.src < 0 || snd.src >= n || snd.dst < 0 || snd.dst >= n) {
        v.availability_ok = false;
        continue;
      }
      if (snd.item != snd.src && !arrived[snd.src].count(snd.item)) v.availability_ok = false;
      next[snd.dst].insert(snd.item);
      v.max_link_load = std::max(v.max_link_load, ++edge_load[{snd.src, snd.dst}]);
    }
    arrived = std::move(next);
  }
  return v;
}

TransferChoice select_transfer_operand(const Operator& op, const ParallelConfig& cfg) {
  if (!is_gemm(op.kind)) return TransferChoice::Input;
  const Dims& d = op.dims;
  const int tn = cfg.tp_n(), tk = cfg.tp_k();
  // One streamed sub-block of each operand inside a TATP group.
  double w = static_cast<double>(d.N) / tn * (static_cast<double>(d.K) / (tk * cfg.tatp));
  double in = static_cast<double>(d.B) / cfg.dp * (static_cast<double>(d.M) / cfg.m_parts()) *
              (static_cast<double>(d.N) / tn);
  return w <= in ? TransferChoice::Weight : TransferChoice::Input;
}

std::vector<CommOp> schedule_to_comm_ops(const StreamSchedule& s, const WaferTopology& topo,
                                         std::span<const DieId> group,
                                         std::span<const double> bytes_per_position,
                                         const StreamBinding& bind) {
  if (static_cast<int>(group.size()) != s.n_dies)
    throw InvalidArgument("stream group size does not match schedule");
  if (static_cast<int>(bytes_per_position.size()) != s.n_dies)
    throw InvalidArgument("need one byte count per chain position");
  if (bind.strict && !is_chain(topo, group))
    throw TopologyMismatch("stream group is not a mesh-adjacent chain");
  std::vector<CommOp> out;
  out.reserve(s.send_count());
  for (std::size_t t = 0; t < s.rounds.size(); ++t) {
    for (const auto& snd : s.rounds[t].sends) {
      CommOp c;
      c.kind = CommKind::P2PStream;
      c.group = {group[snd.src], group[snd.dst]};
      c.bytes = bytes_per_position[snd.item];
      c.round = static_cast<int>(t);
      c.stage = bind.stage;
      c.stream = bind.stream;
      c.src_pos = snd.src;
      c.dst_pos = snd.dst;
      c.op = bind.op;
      c.payload = (bind.payload_salt * 1000003ull + static_cast<std::uint64_t>(bind.stream)) * 4099ull +
                  static_cast<std::uint64_t>(snd.item);
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<CommOp> schedule_to_comm_ops(const StreamSchedule& s, const WaferTopology& topo,
                                         std::span<const DieId> group, double bytes_per_subtensor,
                                         const StreamBinding& bind) {
  if (!(bytes_per_subtensor > 0)) throw InvalidArgument("sub-tensor bytes must be > 0");
  std::vector<double> bytes(s.n_dies, bytes_per_subtensor);
  return schedule_to_comm_ops(s, topo, group, bytes, bind);
}

std::string dump_schedule(const StreamSchedule& s) {
  std::ostringstream os;
  os << "# n=" << s.n_dies << " transfer=" << to_string(s.transfer_choice) << "\n";
  for (std::size_t t = 0; t < s.rounds.size(); ++t) {
    const auto& r = s.rounds[t];
    for (int d = 0; d < s.n_dies; ++d) {
      os << t << " " << d << " compute " << r.compute[d] << "\n";
      for (const auto& snd : r.sends)
        if (snd.src == d) os << t << " " << d << " send " << snd.item << " -> " << snd.dst << "\n";
    }
  }
  return os.str();
}

std::vector<float> stream_gemm(const StreamSchedule& s, int m, int n, int k,
                               std::span<const float> input, std::span<const float> weight) {
  const int p = s.n_dies;
  if (m % p || k % p) throw InvalidArgument("m and k must divide by the group size");
  if (input.size() != static_cast<std::size_t>(m) * n || weight.size() != static_cast<std::size_t>(n) * k)
    throw InvalidArgument("operand sizes do not match m, n, k");
  const int mb = m / p, kb = k / p;
  const bool stream_weight = s.transfer_choice == TransferChoice::Weight;

  // A block is a copy of one streamed sub-tensor.
  using Block = std::vector<float>;
  auto row_block = [&](int b) {
    return Block(input.begin() + static_cast<std::ptrdiff_t>(b) * mb * n,
                 input.begin() + static_cast<std::ptrdiff_t>(b + 1) * mb * n);
  };
  auto col_block = [&](int b) {
    Block out(static_cast<std::size_t>(n) * kb);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < kb; ++j) out[i * kb + j] = weight[static_cast<std::size_t>(i) * k + b * kb + j];
    return out;
  };

  std::vector<float> result(static_cast<std::size_t>(m) * k, 0.0f);
  std::vector<std::map<int, Block>> arrived(p);
  for (std::size_t t = 0; t < s.rounds.size(); ++t) {
    const auto& r = s.rounds[t];
    auto resident = [&](int die, int item) -> Block {
      if (item == die) return stream_weight ? col_block(die) : row_block(die);
      auto it = arrived[die].find(item);
      if (it == arrived[die].end())
        throw InternalError("round " + std::to_string(t) + ": die " + std::to_string(die) +
                            " lacks sub-tensor " + std::to_string(item));
      return it->second;
    };
    for (int d = 0; d < p; ++d) {
      int c = r.compute[d];
      Block streamed = resident(d, c);
      // Stationary operand stays on its owner.
      Block rows = stream_weight ? row_block(d) : streamed;
      Block cols = stream_weight ? streamed : col_block(d);
      int rb = stream_weight ? d : c;
      int cb = stream_weight ? c : d;
      for (int i = 0; i < mb; ++i)
        for (int j = 0; j < kb; ++j) {
          float acc = 0.0f;
          for (int x = 0; x < n; ++x) acc += rows[static_cast<std::size_t>(i) * n + x] * cols[static_cast<std::size_t>(x) * kb + j];
          result[static_cast<std::size_t>(rb * mb + i) * k + cb * kb + j] = acc;
        }
    }
    std::vector<std::map<int, Block>> next(p);
    for (const auto& snd : r.sends) next[snd.dst][snd.item] = resident(snd.src, snd.item);
    arrived = std::move(next);
  }
  return result;
}

}  // namespace wsc
