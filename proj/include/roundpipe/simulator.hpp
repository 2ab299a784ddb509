#pragma once

// Deterministic discrete-event execution of a task list. Each GPU is a
// FIFO over its tasks in emission order; a task starts at the max of
// its GPU's free time and its dependencies' completion. Integer
// nanoseconds throughout, so closed-form bubble checks are exact.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "roundpipe/scheduler.hpp"

namespace roundpipe {

struct TimedEvent {
  Task task;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
};

struct SimOptions {
  // Flush barrier: no task of iteration T starts before every task of
  // iteration T-1 has finished (the sync variant and all baselines run
  // one iteration anyway).
  bool barrier_between_iterations = false;
  // Cross-iteration weight turnaround: task (T, slot, mb) additionally
  // waits for its counterpart in iteration T-1 plus this delay. Zero
  // means fully hidden optimizer (no constraint added).
  std::int64_t optimizer_delay_ns = 0;
};

struct SimReport {
  std::int64_t makespan_ns = 0;  // max end
  std::int64_t span_ns = 0;      // max end - min start
  std::int64_t busy_total_ns = 0;
  std::vector<std::int64_t> busy_per_gpu_ns;
  // bubble = 1 - busy/(N*span), kept as an exact integer ratio
  std::int64_t bubble_num = 0;
  std::int64_t bubble_den = 1;
  double bubble_ratio = 0.0;
  std::vector<TimedEvent> timeline;  // emission order
};

namespace simulator {

inline SimReport simulate(const Schedule& sched, SimOptions opt = {}) {
  const int N = sched.num_gpus;
  const std::size_t n = sched.tasks.size();
  if (n == 0) throw std::invalid_argument("simulate: empty task list");

  std::vector<std::vector<std::size_t>> per_gpu(N);
  for (std::size_t i = 0; i < n; ++i)
    per_gpu[sched.tasks[i].gpu].push_back(i);

  struct Key {
    int round, slot, mb;
    bool operator<(const Key& o) const {
      return std::tie(round, slot, mb) < std::tie(o.round, o.slot, o.mb);
    }
  };
  std::map<Key, std::int64_t> end;
  std::map<std::pair<int, int>, std::int64_t> iter_slot_end;  // for delay dep
  std::map<int, std::int64_t> iter_end;
  std::map<int, int> rounds_per_iter, iter_remaining;
  for (const Task& t : sched.tasks) {
    auto [it, ins] = rounds_per_iter.try_emplace(t.iteration, t.round);
    if (!ins) it->second = std::min(it->second, t.round);
    ++iter_remaining[t.iteration];
  }

  std::vector<std::int64_t> gpu_free(N, 0);
  std::vector<std::size_t> head(N, 0);
  std::vector<TimedEvent> timeline(n);
  std::size_t done = 0;
  while (done < n) {
    bool progressed = false;
    for (int g = 0; g < N; ++g) {
      while (head[g] < per_gpu[g].size()) {
        const std::size_t ti = per_gpu[g][head[g]];
        const Task& t = sched.tasks[ti];
        std::int64_t start = gpu_free[g];
        bool ready = true;
        if (t.slot > 0) {
          auto it = end.find(Key{t.round, t.slot - 1, t.mb});
          if (it == end.end()) {
            ready = false;
          } else {
            start = std::max(start, it->second);
          }
        }
        if (ready && opt.barrier_between_iterations && t.iteration > 0) {
          // flush: every task of the previous iteration must be done
          auto rem = iter_remaining.find(t.iteration - 1);
          if (rem != iter_remaining.end() && rem->second > 0)
            ready = false;
          else
            start = std::max(start, iter_end[t.iteration - 1]);
        }
        if (ready && opt.optimizer_delay_ns > 0 && t.iteration > 0) {
          // counterpart = same slot & mb in the matching round of the
          // previous iteration
          const int round_in_iter = t.round - rounds_per_iter[t.iteration];
          const int prev_round =
              rounds_per_iter[t.iteration - 1] + round_in_iter;
          auto it = end.find(Key{prev_round, t.slot, t.mb});
          if (it == end.end())
            ready = false;
          else
            start = std::max(start, it->second + opt.optimizer_delay_ns);
        }
        if (!ready) break;
        const std::int64_t fin = start + t.dur_ns;
        end[Key{t.round, t.slot, t.mb}] = fin;
        gpu_free[g] = fin;
        auto [ie, ins] = iter_end.try_emplace(t.iteration, fin);
        if (!ins) ie->second = std::max(ie->second, fin);
        --iter_remaining[t.iteration];
        timeline[ti] = {t, start, fin};
        ++head[g];
        ++done;
        progressed = true;
      }
    }
    if (!progressed) throw std::logic_error("simulate: dependency deadlock");
  }

  SimReport rep;
  rep.timeline = std::move(timeline);
  rep.busy_per_gpu_ns.assign(N, 0);
  std::int64_t lo = rep.timeline[0].start_ns, hi = 0;
  for (const auto& e : rep.timeline) {
    lo = std::min(lo, e.start_ns);
    hi = std::max(hi, e.end_ns);
    rep.busy_per_gpu_ns[e.task.gpu] += e.task.dur_ns;
    rep.busy_total_ns += e.task.dur_ns;
  }
  rep.makespan_ns = hi;
  rep.span_ns = hi - lo;
  rep.bubble_den = static_cast<std::int64_t>(N) * rep.span_ns;
  rep.bubble_num = rep.bubble_den - rep.busy_total_ns;
  rep.bubble_ratio = rep.bubble_den == 0
                         ? 0.0
                         : static_cast<double>(rep.bubble_num) /
                               static_cast<double>(rep.bubble_den);
  return rep;
}

// Idle fraction inside [w0, w1), counting every event overlapping the
// window — not just events of a chosen iteration. Used for the
// steady-state (interior iterations) bubble of the async schedule.
inline double idle_in_window(const SimReport& rep, int num_gpus,
                             std::int64_t w0, std::int64_t w1,
                             std::int64_t* num = nullptr,
                             std::int64_t* den = nullptr) {
  if (w1 <= w0) throw std::invalid_argument("idle_in_window: empty window");
  std::int64_t busy = 0;
  for (const auto& e : rep.timeline) {
    const std::int64_t a = std::max(e.start_ns, w0);
    const std::int64_t b = std::min(e.end_ns, w1);
    if (b > a) busy += b - a;
  }
  const std::int64_t total = static_cast<std::int64_t>(num_gpus) * (w1 - w0);
  if (num) *num = total - busy;
  if (den) *den = total;
  return static_cast<double>(total - busy) / static_cast<double>(total);
}

// Steady-state bubble over iterations [iter_lo, iter_hi]: window spans
// from the first start to the last end of those iterations' events.
inline double interior_bubble(const SimReport& rep, int num_gpus, int iter_lo,
                              int iter_hi, std::int64_t* num = nullptr,
                              std::int64_t* den = nullptr) {
  std::int64_t w0 = std::numeric_limits<std::int64_t>::max(), w1 = 0;
  for (const auto& e : rep.timeline)
    if (e.task.iteration >= iter_lo && e.task.iteration <= iter_hi) {
      w0 = std::min(w0, e.start_ns);
      w1 = std::max(w1, e.end_ns);
    }
  if (w1 <= w0)
    throw std::invalid_argument("interior_bubble: no events in range");
  return idle_in_window(rep, num_gpus, w0, w1, num, den);
}

}  // namespace simulator
}  // namespace roundpipe
