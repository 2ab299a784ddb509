#pragma once

// Task-list synthesis for the round-robin dispatch schedule (sync and
// async) and the four fixed-placement baselines. The emitted order per
// GPU is the dispatch order; the simulator treats it as a FIFO.

#include <cstdint>
#include <numeric>
#include <tuple>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roundpipe/partitioner.hpp"

namespace roundpipe {

enum class ScheduleKind {
  RoundPipe,      // async: iterations chain without flush
  RoundPipeSync,  // flush barrier between iterations
  GPipe,
  OneFOneB,
  Interleaved1F1B,
  LoopedBFS,
};

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::RoundPipe: return "roundpipe";
    case ScheduleKind::RoundPipeSync: return "roundpipe-sync";
    case ScheduleKind::GPipe: return "gpipe";
    case ScheduleKind::OneFOneB: return "1f1b";
    case ScheduleKind::Interleaved1F1B: return "interleaved-1f1b";
    case ScheduleKind::LoopedBFS: return "looped-bfs";
  }
  return "?";
}

inline std::optional<ScheduleKind> schedule_kind_from(const std::string& s) {
  if (s == "roundpipe") return ScheduleKind::RoundPipe;
  if (s == "roundpipe-sync") return ScheduleKind::RoundPipeSync;
  if (s == "gpipe") return ScheduleKind::GPipe;
  if (s == "1f1b") return ScheduleKind::OneFOneB;
  if (s == "interleaved-1f1b") return ScheduleKind::Interleaved1F1B;
  if (s == "looped-bfs") return ScheduleKind::LoopedBFS;
  return std::nullopt;
}

struct StageSlot {
  int index = 0;  // position in the per-iteration slot sequence
  StageKind kind = StageKind::Forward;
  LayerRange layers;
  std::int64_t dur_ns = 0;  // per-micro-batch time
};

// One unit of work. Dependency chaining uses (round, slot, mb): a task
// waits for (round, slot-1, mb). `round` is globally unique across
// iterations so distinct rounds (disjoint micro-batch groups) never
// chain onto each other.
struct Task {
  int iteration = 0;
  int round = 0;
  int slot = 0;
  int mb = 0;
  int gpu = 0;
  std::int64_t dur_ns = 0;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::RoundPipe;
  int num_gpus = 1;             // N
  int micro_batches = 1;        // M (per iteration)
  int round_micro_batches = 0;  // M_R; 0 means "apply the default rule"
  int iterations = 1;
  // roundpipe variants: per-slot durations over the concatenated
  // forward-then-backward sequence (from a StagePlan).
  std::vector<std::int64_t> slot_durs;
  // baselines: symmetric per-stage durations; S = v * N for the looped
  // kinds, S = N for gpipe/1f1b.
  std::vector<std::int64_t> stage_fwd_durs;
  std::vector<std::int64_t> stage_bwd_durs;
};

struct Schedule {
  ScheduleKind kind = ScheduleKind::RoundPipe;
  int num_gpus = 1;
  int slots_per_iteration = 0;
  std::vector<StageSlot> slot_table;  // empty for baselines built from durs
  std::vector<Task> tasks;            // emission order
};

namespace scheduler {

// Single round when M is small; otherwise the smallest divisor of M
// that still satisfies M_R >= N.
inline int default_round_micro_batches(int M, int N) {
  if (M <= 4 * N) return M;
  for (int d = N; d <= M; ++d)
    if (M % d == 0) return d;
  return M;
}

inline std::vector<StageSlot> slot_table_from_plan(
    const StagePlan& plan, const std::vector<LayerCost>& costs) {
  std::vector<StageSlot> slots;
  int idx = 0;
  for (auto r : plan.fwd_stages)
    slots.push_back({idx++, StageKind::Forward, r,
                     partitioner::stage_time(StageKind::Forward, r, costs)});
  slots.push_back({idx++, StageKind::Fused, plan.fused_stage,
                   partitioner::stage_time(StageKind::Fused, plan.fused_stage,
                                           costs)});
  for (auto r : plan.bwd_stages)
    slots.push_back({idx++, StageKind::Backward, r,
                     partitioner::stage_time(StageKind::Backward, r, costs)});
  return slots;
}

inline Schedule synthesize_roundpipe(const ScheduleSpec& spec) {
  const int N = spec.num_gpus, M = spec.micro_batches;
  const int S = static_cast<int>(spec.slot_durs.size());
  int MR = spec.round_micro_batches;
  if (MR == 0) MR = default_round_micro_batches(M, N);
  if (S < 1 || N < 1 || MR < N || M % MR != 0 || spec.iterations < 1)
    throw std::invalid_argument(
        "roundpipe schedule: need S >= 1, M_R >= N, M_R | M");
  const int R = M / MR;
  Schedule out{spec.kind, N, S, {}, {}};
  out.tasks.reserve(static_cast<std::size_t>(spec.iterations) * R * S * MR);
  int g0 = 0, global_round = 0;
  for (int it = 0; it < spec.iterations; ++it) {
    for (int r = 0; r < R; ++r) {
      for (int i = 0; i < S; ++i) {
        const int g = (g0 + i) % N;
        for (int mb = 0; mb < MR; ++mb)
          out.tasks.push_back({it, global_round, i, mb, g, spec.slot_durs[i]});
      }
      g0 = (g0 + S) % N;
      ++global_round;
    }
  }
  return out;
}

// GPipe / looped-BFS: full forward wave, then backward wave in reverse
// stage order. Slots 0..S-1 are forward, slot S+j is the backward of
// stage S-1-j. GPipe pins stage st to GPU st (N = S); looped-BFS wraps
// stage st onto GPU st % N.
inline Schedule synthesize_wave(const ScheduleSpec& spec) {
  const int S = static_cast<int>(spec.stage_fwd_durs.size());
  const int M = spec.micro_batches;
  const bool wrap = spec.kind == ScheduleKind::LoopedBFS;
  const int N = wrap ? spec.num_gpus : S;
  if (S < 1 || M < 1 || (wrap && S % N != 0))
    throw std::invalid_argument("wave schedule: need S >= 1, N | S");
  Schedule out{spec.kind, N, 2 * S, {}, {}};
  for (int st = 0; st < S; ++st)
    for (int mb = 0; mb < M; ++mb)
      out.tasks.push_back(
          {0, 0, st, mb, wrap ? st % N : st, spec.stage_fwd_durs[st]});
  for (int j = 0; j < S; ++j) {
    const int st = S - 1 - j;
    for (int mb = 0; mb < M; ++mb)
      out.tasks.push_back(
          {0, 0, S + j, mb, wrap ? st % N : st, spec.stage_bwd_durs[st]});
  }
  return out;
}

// 1F1B: per-rank warmup of min(M, S-1-r) forwards, then alternating
// forward/backward, then the backward cooldown. N = S.
inline Schedule synthesize_1f1b(const ScheduleSpec& spec) {
  const int S = static_cast<int>(spec.stage_fwd_durs.size());
  const int M = spec.micro_batches;
  if (S < 1 || M < 1)
    throw std::invalid_argument("1f1b schedule: need S >= 1, M >= 1");
  Schedule out{spec.kind, S, 2 * S, {}, {}};
  for (int r = 0; r < S; ++r) {
    const int warm = std::min(M, S - 1 - r);
    auto fwd = [&](int mb) {
      out.tasks.push_back({0, 0, r, mb, r, spec.stage_fwd_durs[r]});
    };
    auto bwd = [&](int mb) {
      out.tasks.push_back({0, 0, 2 * S - 1 - r, mb, r, spec.stage_bwd_durs[r]});
    };
    for (int mb = 0; mb < warm; ++mb) fwd(mb);
    for (int j = warm; j < M; ++j) {
      fwd(j);
      bwd(j - warm);
    }
    for (int j = M - warm; j < M; ++j) bwd(j);
  }
  return out;
}

// Interleaved 1F1B with v virtual chunks per rank: rank r owns stages
// r, r+N, ..., forwards cycle chunks over groups of N micro-batches.
inline Schedule synthesize_interleaved(const ScheduleSpec& spec) {
  const int N = spec.num_gpus;
  const int S = static_cast<int>(spec.stage_fwd_durs.size());
  const int M = spec.micro_batches;
  if (N < 1 || S % N != 0 || M < 1)
    throw std::invalid_argument("interleaved schedule: need N | S");
  const int v = S / N;
  Schedule out{spec.kind, N, 2 * S, {}, {}};
  for (int r = 0; r < N; ++r) {
    auto chunk_of = [&](int step, bool fwd) {
      const int c = (step % (N * v)) / N;
      return fwd ? c : v - 1 - c;
    };
    auto mb_of = [&](int step) {
      return (step / (N * v)) * N + (step % (N * v)) % N;
    };
    auto emit = [&](int step, bool fwd) {
      const int st = chunk_of(step, fwd) * N + r;
      const int mb = mb_of(step);
      if (fwd)
        out.tasks.push_back({0, 0, st, mb, r, spec.stage_fwd_durs[st]});
      else
        out.tasks.push_back(
            {0, 0, 2 * S - 1 - st, mb, r, spec.stage_bwd_durs[st]});
    };
    const int warm = std::min((N - r - 1) * 2 + (v - 1) * N, v * M);
    int fstep = 0, bstep = 0;
    for (int i = 0; i < warm; ++i) emit(fstep++, true);
    for (int i = 0; i < v * M - warm; ++i) {
      emit(fstep++, true);
      emit(bstep++, false);
    }
    while (bstep < v * M) emit(bstep++, false);
  }
  return out;
}

inline Schedule synthesize(const ScheduleSpec& spec) {
  switch (spec.kind) {
    case ScheduleKind::RoundPipe:
    case ScheduleKind::RoundPipeSync:
      return synthesize_roundpipe(spec);
    case ScheduleKind::GPipe:
    case ScheduleKind::LoopedBFS:
      return synthesize_wave(spec);
    case ScheduleKind::OneFOneB:
      return synthesize_1f1b(spec);
    case ScheduleKind::Interleaved1F1B:
      return synthesize_interleaved(spec);
  }
  throw std::invalid_argument("unknown schedule kind");
}

// Structural checks on a task list: unique coverage of
// (round, slot, mb), GPU ids in range, and — for round-robin kinds —
// the dispatch formula and all-micro-batches-before-next-slot ordering.
inline std::optional<std::string> validate(const Schedule& sched) {
  std::vector<Task> sorted = sched.tasks;
  std::sort(sorted.begin(), sorted.end(), [](const Task& a, const Task& b) {
    return std::tie(a.round, a.slot, a.mb) < std::tie(b.round, b.slot, b.mb);
  });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (std::tie(sorted[i - 1].round, sorted[i - 1].slot, sorted[i - 1].mb) ==
        std::tie(sorted[i].round, sorted[i].slot, sorted[i].mb))
      return "duplicate (round, slot, micro-batch)";
  for (const Task& t : sched.tasks) {
    if (t.gpu < 0 || t.gpu >= sched.num_gpus) return "gpu id out of range";
    if (t.slot < 0 || t.slot >= sched.slots_per_iteration)
      return "slot out of range";
    if (t.dur_ns <= 0) return "non-positive duration";
  }
  const bool rp = sched.kind == ScheduleKind::RoundPipe ||
                  sched.kind == ScheduleKind::RoundPipeSync;
  if (rp) {
    // g0 starts at 0 and advances by S each round, so the dispatch
    // formula reduces to gpu = (round*S + slot) mod N.
    const std::int64_t S = sched.slots_per_iteration;
    for (const Task& t : sched.tasks)
      if (t.gpu != static_cast<int>((t.round * S + t.slot) % sched.num_gpus))
        return "dispatch formula broken";
    // Within one GPU's FIFO, all micro-batches of a (round, slot) must
    // be contiguous and ascending before the next slot appears.
    std::vector<std::pair<int, int>> last(sched.num_gpus, {-1, -1});
    std::vector<int> last_mb(sched.num_gpus, -1);
    for (const Task& t : sched.tasks) {
      auto cur = std::pair{t.round, t.slot};
      if (cur == last[t.gpu]) {
        if (t.mb != last_mb[t.gpu] + 1) return "micro-batch order broken";
      } else {
        if (cur < last[t.gpu]) return "slot order broken";
        if (t.mb != 0) return "slot does not start at micro-batch 0";
        last[t.gpu] = cur;
      }
      last_mb[t.gpu] = t.mb;
    }
  }
  return std::nullopt;
}

}  // namespace scheduler
}  // namespace roundpipe
