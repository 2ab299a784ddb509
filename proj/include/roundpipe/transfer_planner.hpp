#pragma once

// Packing of parameter/gradient transfers into the M per-micro-batch
// windows of a stage: oversized tensors are chunked, then chunks are
// assigned longest-first to the least-loaded window (LPT, Graham's
// 4/3 - 1/(3M) makespan guarantee).

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "roundpipe/cost_model.hpp"
#include "roundpipe/partitioner.hpp"

namespace roundpipe {

enum class TransferDirection { Upload, Download };

struct TransferItem {
  std::string tensor_id;
  std::int64_t bytes = 0;
  TransferDirection direction = TransferDirection::Upload;
  int chunk_index = 0;  // assigned during chunking
};

struct WindowAssignment {
  int window_id = 0;
  std::vector<TransferItem> items;
  std::int64_t total_bytes = 0;
};

struct TransferPlan {
  std::vector<WindowAssignment> windows;  // size M, ids 0..M-1
  std::int64_t makespan_bytes = 0;        // max window load
};

namespace transfer_planner {

// ceil(total / M): every chunk then fits a perfectly balanced window.
inline std::int64_t default_max_chunk(const std::vector<TransferItem>& items,
                                      int num_windows) {
  std::int64_t total = 0;
  for (const auto& it : items) total += it.bytes;
  return std::max<std::int64_t>(1, (total + num_windows - 1) / num_windows);
}

inline std::vector<TransferItem> chunk_items(
    const std::vector<TransferItem>& items, std::int64_t max_chunk_bytes) {
  if (max_chunk_bytes < 1)
    throw std::invalid_argument("chunk_items: max_chunk_bytes < 1");
  std::vector<TransferItem> out;
  for (const auto& it : items) {
    if (it.bytes <= 0) throw std::invalid_argument("chunk_items: bytes <= 0");
    const std::int64_t k = (it.bytes + max_chunk_bytes - 1) / max_chunk_bytes;
    std::int64_t rem = it.bytes;
    for (std::int64_t c = 0; c < k; ++c) {
      TransferItem chunk = it;
      chunk.chunk_index = static_cast<int>(c);
      chunk.bytes = std::min(max_chunk_bytes, rem);
      rem -= chunk.bytes;
      out.push_back(chunk);
    }
  }
  return out;
}

// Deterministic LPT: chunks sorted by (bytes desc, tensor id, chunk
// index); each goes to the least-loaded window, ties to the lowest id.
inline TransferPlan plan(std::vector<TransferItem> items, int num_windows,
                         std::int64_t max_chunk_bytes = 0) {
  if (num_windows < 1) throw std::invalid_argument("plan: num_windows < 1");
  if (max_chunk_bytes <= 0)
    max_chunk_bytes = default_max_chunk(items, num_windows);
  auto chunks = chunk_items(items, max_chunk_bytes);
  std::sort(chunks.begin(), chunks.end(),
            [](const TransferItem& a, const TransferItem& b) {
              if (a.bytes != b.bytes) return a.bytes > b.bytes;
              if (a.tensor_id != b.tensor_id) return a.tensor_id < b.tensor_id;
              return a.chunk_index < b.chunk_index;
            });
  TransferPlan out;
  out.windows.resize(num_windows);
  for (int w = 0; w < num_windows; ++w) out.windows[w].window_id = w;
  using Load = std::pair<std::int64_t, int>;  // (bytes, window id)
  std::priority_queue<Load, std::vector<Load>, std::greater<>> pq;
  for (int w = 0; w < num_windows; ++w) pq.emplace(0, w);
  for (auto& c : chunks) {
    auto [load, w] = pq.top();
    pq.pop();
    out.windows[w].items.push_back(c);
    out.windows[w].total_bytes += c.bytes;
    pq.emplace(out.windows[w].total_bytes, w);
  }
  for (const auto& w : out.windows)
    out.makespan_bytes = std::max(out.makespan_bytes, w.total_bytes);
  return out;
}

// Exhaustive optimal makespan; only for oracle-scale instances.
inline std::int64_t optimal_makespan(const std::vector<std::int64_t>& chunks,
                                     int num_windows,
                                     std::size_t max_chunks = 12) {
  if (chunks.size() > max_chunks)
    throw std::invalid_argument("optimal_makespan: instance too large");
  std::vector<std::int64_t> load(num_windows, 0);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == chunks.size()) {
      best = std::min(best, *std::max_element(load.begin(), load.end()));
      return;
    }
    for (int w = 0; w < num_windows; ++w) {
      load[w] += chunks[i];
      if (load[w] < best) self(self, i + 1);
      load[w] -= chunks[i];
      if (load[w] == 0) break;  // empty windows are symmetric
    }
  };
  rec(rec, 0);
  return best;
}

// LPT/optimal ratio on an oracle-scale instance; callers assert it
// against Graham's bound 4/3 - 1/(3M).
inline double makespan_bound_check(const std::vector<std::int64_t>& sizes,
                                   int num_windows) {
  std::vector<TransferItem> items;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    items.push_back({"t" + std::to_string(i), sizes[i],
                     TransferDirection::Upload, 0});
  // no chunking: the bound is about raw LPT assignment
  const std::int64_t big = std::accumulate(sizes.begin(), sizes.end(),
                                           std::int64_t{0}) +
                           1;
  const auto lpt = plan(items, num_windows, big);
  const auto opt = optimal_makespan(sizes, num_windows);
  return static_cast<double>(lpt.makespan_bytes) / static_cast<double>(opt);
}

struct WindowVerdict {
  int slot = 0;
  std::int64_t window_ns = 0;        // per-micro-batch stage time
  std::int64_t weight_bytes = 0;     // max weight-chunk load per window
  std::int64_t activation_bytes = 0; // checkpointed input up+down
  bool feasible = false;
};

// Per-stage check that weight traffic (packed by LPT into M windows)
// plus activation hand-off fits inside the stage's compute windows at
// the given host-link bandwidth. Backward/fused stages move weights up
// and equally sized gradients down; the link is full-duplex, so the
// two directions are checked against the window independently and the
// larger one governs.
inline std::vector<WindowVerdict> stage_feasibility(
    const StagePlan& plan_in, const std::vector<LayerCost>& costs,
    const GpuSpec& gpu, int micro_batches) {
  std::vector<WindowVerdict> out;
  auto eval = [&](StageKind kind, LayerRange r, int slot) {
    std::vector<TransferItem> items;
    for (int l = r.first; l <= r.last; ++l)
      items.push_back({"layer" + std::to_string(l), costs[l].param_bytes,
                       TransferDirection::Upload, 0});
    const auto packed = plan(items, micro_batches);
    WindowVerdict v;
    v.slot = slot;
    v.window_ns = partitioner::stage_time(kind, r, costs);
    v.weight_bytes = packed.makespan_bytes;
    // stage-boundary hand-off: input activation in, output out
    v.activation_bytes = 2 * costs[r.first].act_ckpt_bytes;
    const double budget =
        static_cast<double>(v.window_ns) * 1e-9 * gpu.link_bandwidth;
    v.feasible = static_cast<double>(v.weight_bytes) <= budget &&
                 static_cast<double>(v.activation_bytes) <= budget;
    out.push_back(v);
  };
  int slot = 0;
  for (auto r : plan_in.fwd_stages) eval(StageKind::Forward, r, slot++);
  eval(StageKind::Fused, plan_in.fused_stage, slot++);
  for (auto r : plan_in.bwd_stages) eval(StageKind::Backward, r, slot++);
  return out;
}

}  // namespace transfer_planner
}  // namespace roundpipe
