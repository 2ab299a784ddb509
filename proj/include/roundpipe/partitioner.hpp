#pragma once

// Asymmetric stage partitioning: minimize (M*S + N*(N-1)) * t_max under
// per-stage time and memory limits. Candidate t_max values are the
// contiguous subsequence sums of forward/backward layer times; each
// candidate is packed greedily (fused-first-backward), giving O(L^3).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "roundpipe/cost_model.hpp"

namespace roundpipe {

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inclusive 0-based layer range.
struct LayerRange {
  int first = 0;
  int last = -1;  // empty when last < first
  int size() const { return last < first ? 0 : last - first + 1; }
  bool operator==(const LayerRange&) const = default;
};

enum class StageKind { Forward, Backward, Fused };

struct StagePlan {
  std::vector<LayerRange> fwd_stages;  // F_1..F_Sf, ascending layers
  LayerRange fused_stage;              // B_1, the last layers
  std::vector<LayerRange> bwd_stages;  // B_2..B_Sb, descending layers
  std::int64_t t_max_ns = 0;           // max per-microbatch stage time
  std::int64_t objective = 0;          // (M*S + N*(N-1)) * t_max_ns

  int s_f() const { return static_cast<int>(fwd_stages.size()); }
  int s_b() const { return 1 + static_cast<int>(bwd_stages.size()); }
  int num_slots() const { return s_f() + s_b(); }
};

struct PartitionProblem {
  std::vector<LayerCost> costs;
  int num_gpus = 1;       // N
  int micro_batches = 1;  // M
  std::int64_t mem_limit_bytes = std::numeric_limits<std::int64_t>::max();
  double residency_factor = 2.0;

  int num_layers() const { return static_cast<int>(costs.size()); }
  void validate() const {
    if (num_gpus < 1 || micro_batches < num_gpus || costs.empty())
      throw std::invalid_argument(
          "PartitionProblem: need N >= 1, M >= N, L >= 1");
  }
};

namespace partitioner {

inline std::int64_t stage_time(StageKind kind, LayerRange r,
                               const std::vector<LayerCost>& costs) {
  std::int64_t t = 0;
  for (int i = r.first; i <= r.last; ++i)
    t += kind == StageKind::Forward ? costs[i].t_fwd_ns : costs[i].t_bwd_ns;
  return t;
}

// Footprint of one stage: weights for forward, weights + same-size
// gradients for backward/fused, scaled by the residency factor to cover
// prefetch and in-flight downloads.
inline double stage_mem_bytes(StageKind kind, LayerRange r,
                              const PartitionProblem& p) {
  std::int64_t params = 0;
  for (int i = r.first; i <= r.last; ++i) params += p.costs[i].param_bytes;
  const double mult = kind == StageKind::Forward ? 1.0 : 2.0;
  return p.residency_factor * mult * static_cast<double>(params);
}

// All contiguous subsequence sums of forward and backward times, sorted
// and deduplicated.
inline std::vector<std::int64_t> candidate_tmax(
    const std::vector<LayerCost>& costs) {
  std::vector<std::int64_t> out;
  const int n = static_cast<int>(costs.size());
  out.reserve(static_cast<std::size_t>(n) * (n + 1));
  for (int p = 0; p < n; ++p) {
    std::int64_t sf = 0, sb = 0;
    for (int q = p; q < n; ++q) {
      sf += costs[q].t_fwd_ns;
      sb += costs[q].t_bwd_ns;
      out.push_back(sf);
      out.push_back(sb);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline bool stage_fits(StageKind kind, LayerRange r, std::int64_t t_max,
                       const PartitionProblem& p) {
  return stage_time(kind, r, p.costs) <= t_max &&
         stage_mem_bytes(kind, r, p) <=
             static_cast<double>(p.mem_limit_bytes);
}

// Greedy packing at a fixed t_max: fill the fused stage from the back
// first, then forward stages left-to-right, then backward stages
// right-to-left over the remaining layers.
inline std::optional<StagePlan> greedy_pack(const PartitionProblem& p,
                                            std::int64_t t_max) {
  p.validate();
  if (t_max <= 0) throw std::invalid_argument("greedy_pack: t_max <= 0");
  const int L = p.num_layers();

  StagePlan plan;
  int i = L - 1;
  while (i >= 0 &&
         stage_fits(StageKind::Fused, LayerRange{i, L - 1}, t_max, p))
    --i;
  if (i == L - 1) return std::nullopt;  // last layer alone does not fit
  plan.fused_stage = LayerRange{i + 1, L - 1};
  const int rem = i + 1;  // layers 0..rem-1 remain for both directions

  int start = 0;
  for (int j = 0; j < rem; ++j) {
    if (stage_fits(StageKind::Forward, LayerRange{start, j}, t_max, p))
      continue;
    if (j == start) return std::nullopt;  // single layer too big
    plan.fwd_stages.push_back(LayerRange{start, j - 1});
    start = j;
    if (!stage_fits(StageKind::Forward, LayerRange{start, j}, t_max, p))
      return std::nullopt;
  }
  if (rem > 0) plan.fwd_stages.push_back(LayerRange{start, rem - 1});

  int end = rem - 1;
  for (int j = rem - 1; j >= 0; --j) {
    if (stage_fits(StageKind::Backward, LayerRange{j, end}, t_max, p))
      continue;
    if (j == end) return std::nullopt;
    plan.bwd_stages.push_back(LayerRange{j + 1, end});
    end = j;
    if (!stage_fits(StageKind::Backward, LayerRange{j, end}, t_max, p))
      return std::nullopt;
  }
  if (rem > 0) plan.bwd_stages.push_back(LayerRange{0, end});

  std::int64_t achieved = stage_time(StageKind::Fused, plan.fused_stage,
                                     p.costs);
  for (auto r : plan.fwd_stages)
    achieved = std::max(achieved, stage_time(StageKind::Forward, r, p.costs));
  for (auto r : plan.bwd_stages)
    achieved = std::max(achieved, stage_time(StageKind::Backward, r, p.costs));
  plan.t_max_ns = achieved;
  const std::int64_t weight =
      static_cast<std::int64_t>(p.micro_batches) * plan.num_slots() +
      static_cast<std::int64_t>(p.num_gpus) * (p.num_gpus - 1);
  plan.objective = weight * achieved;
  return plan;
}

// Sanity validator run on every plan the partitioner returns.
inline void validate_plan(const StagePlan& plan, const PartitionProblem& p) {
  const int L = p.num_layers();
  auto check_tiling = [&](std::vector<LayerRange> ranges) {
    std::vector<bool> seen(L, false);
    for (auto r : ranges)
      for (int i = r.first; i <= r.last; ++i) {
        if (i < 0 || i >= L || seen[i])
          throw std::logic_error("StagePlan: ranges do not tile [0..L)");
        seen[i] = true;
      }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
      throw std::logic_error("StagePlan: uncovered layer");
  };
  auto fwd = plan.fwd_stages;
  fwd.push_back(plan.fused_stage);
  check_tiling(fwd);
  auto bwd = plan.bwd_stages;
  bwd.push_back(plan.fused_stage);
  check_tiling(bwd);
  if (plan.fused_stage.size() < 1)
    throw std::logic_error("StagePlan: fused stage empty");
  for (auto r : plan.fwd_stages)
    if (stage_time(StageKind::Forward, r, p.costs) > plan.t_max_ns)
      throw std::logic_error("StagePlan: forward stage exceeds t_max");
  for (auto r : plan.bwd_stages)
    if (stage_time(StageKind::Backward, r, p.costs) > plan.t_max_ns)
      throw std::logic_error("StagePlan: backward stage exceeds t_max");
}

// Scan candidates ascending; keep the plan minimizing the objective with
// ties broken by smaller slot count, then smaller t_max. Ascending order
// plus these tie-breaks makes the result deterministic.
inline StagePlan optimal_partition(const PartitionProblem& p) {
  p.validate();
  std::optional<StagePlan> best;
  for (std::int64_t t_max : candidate_tmax(p.costs)) {
    if (t_max <= 0) continue;
    auto plan = greedy_pack(p, t_max);
    if (!plan) continue;
    if (!best || plan->objective < best->objective ||
        (plan->objective == best->objective &&
         (plan->num_slots() < best->num_slots() ||
          (plan->num_slots() == best->num_slots() &&
           plan->t_max_ns < best->t_max_ns))))
      best = plan;
  }
  if (!best) throw InfeasibleError("no feasible partition at any t_max");
  validate_plan(*best, p);
  return *best;
}

// Symmetric min-max contiguous split into exactly S stages, weighted by
// t_fwd + t_bwd. Used for the fixed-stage baselines.
inline std::vector<LayerRange> symmetric_split(
    const std::vector<LayerCost>& costs, int num_stages) {
  const int L = static_cast<int>(costs.size());
  if (num_stages < 1 || num_stages > L)
    throw std::invalid_argument("symmetric_split: need 1 <= S <= L");
  std::vector<std::int64_t> w(L);
  for (int i = 0; i < L; ++i) w[i] = costs[i].t_fwd_ns + costs[i].t_bwd_ns;
  auto stages_needed = [&](std::int64_t cap) {
    int cnt = 1;
    std::int64_t cur = 0;
    for (auto x : w) {
      if (x > cap) return L + 1;
      if (cur + x <= cap)
        cur += x;
      else {
        ++cnt;
        cur = x;
      }
    }
    return cnt;
  };
  std::int64_t lo = *std::max_element(w.begin(), w.end());
  std::int64_t hi = std::accumulate(w.begin(), w.end(), std::int64_t{0});
  while (lo < hi) {
    std::int64_t mid = lo + (hi - lo) / 2;
    if (stages_needed(mid) <= num_stages)
      hi = mid;
    else
      lo = mid + 1;
  }
  std::vector<LayerRange> out;
  int start = 0;
  std::int64_t cur = 0;
  for (int i = 0; i < L; ++i) {
    if (cur + w[i] > lo) {  // w[i] <= lo, so cur > 0 here
      out.push_back(LayerRange{start, i - 1});
      start = i;
      cur = 0;
    }
    cur += w[i];
  }
  out.push_back(LayerRange{start, L - 1});
  // Pad toward exactly S stages by halving the widest stage (first one
  // on ties); stop early if only single-layer stages remain.
  while (static_cast<int>(out.size()) < num_stages) {
    auto it = std::max_element(out.begin(), out.end(),
                               [](LayerRange a, LayerRange b) {
                                 return a.size() < b.size();
                               });
    if (it->size() < 2) break;
    const LayerRange r = *it;
    const int mid = (r.first + r.last) / 2;
    *it = LayerRange{r.first, mid};
    out.insert(std::next(it), LayerRange{mid + 1, r.last});
  }
  return out;
}

}  // namespace partitioner
}  // namespace roundpipe
