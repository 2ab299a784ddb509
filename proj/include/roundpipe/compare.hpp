#pragma once

// Schedule comparison on a shared synthetic cost model: asymmetric
// partition + round-robin dispatch (sync and async) against the four
// fixed-placement baselines, each baseline at its best virtual-chunk
// setting.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "roundpipe/cost_model.hpp"
#include "roundpipe/partitioner.hpp"
#include "roundpipe/scheduler.hpp"
#include "roundpipe/simulator.hpp"

namespace roundpipe {

struct CompareOptions {
  int num_gpus = 8;
  int micro_batches = 16;
  int async_iterations = 7;  // interior window = iterations 2..4
  bool include_head = true;
};

struct CompareRow {
  std::string model;
  int num_slots = 0;        // S of the asymmetric plan
  double async_bubble = 0;  // interior-iteration idle fraction
  double sync_bubble = 0;
  std::map<std::string, double> baseline_bubbles;
  std::map<std::string, int> baseline_chunks;  // chosen v per baseline
  double best_baseline = 0;
  double reduction = 0;  // (best_baseline - sync) / best_baseline
};

namespace compare {

inline std::vector<std::int64_t> slot_durations(const StagePlan& plan,
                                                const std::vector<LayerCost>&
                                                    costs) {
  std::vector<std::int64_t> durs;
  for (auto r : plan.fwd_stages)
    durs.push_back(partitioner::stage_time(StageKind::Forward, r, costs));
  durs.push_back(
      partitioner::stage_time(StageKind::Fused, plan.fused_stage, costs));
  for (auto r : plan.bwd_stages)
    durs.push_back(partitioner::stage_time(StageKind::Backward, r, costs));
  return durs;
}

inline double baseline_bubble(ScheduleKind kind, int num_gpus, int v,
                              const std::vector<LayerCost>& costs,
                              int micro_batches) {
  const int S = v * num_gpus;
  const auto stages = partitioner::symmetric_split(costs, S);
  ScheduleSpec spec;
  spec.kind = kind;
  spec.num_gpus = num_gpus;
  spec.micro_batches = micro_batches;
  for (auto r : stages) {
    spec.stage_fwd_durs.push_back(
        partitioner::stage_time(StageKind::Forward, r, costs));
    spec.stage_bwd_durs.push_back(
        partitioner::stage_time(StageKind::Backward, r, costs));
  }
  return simulator::simulate(scheduler::synthesize(spec)).bubble_ratio;
}

inline CompareRow compare_one(const std::string& model_name,
                              const std::vector<LayerCost>& costs,
                              const CompareOptions& opt) {
  CompareRow row;
  row.model = model_name;
  const int N = opt.num_gpus, M = opt.micro_batches;

  PartitionProblem prob;
  prob.costs = costs;
  prob.num_gpus = N;
  prob.micro_batches = M;
  const StagePlan plan = partitioner::optimal_partition(prob);
  row.num_slots = plan.num_slots();

  ScheduleSpec rp;
  rp.kind = ScheduleKind::RoundPipeSync;
  rp.num_gpus = N;
  rp.micro_batches = M;
  rp.round_micro_batches = M;  // single round per iteration
  rp.iterations = 1;
  rp.slot_durs = slot_durations(plan, costs);
  row.sync_bubble = simulator::simulate(scheduler::synthesize(rp)).bubble_ratio;

  rp.kind = ScheduleKind::RoundPipe;
  rp.iterations = opt.async_iterations;
  const auto rep = simulator::simulate(scheduler::synthesize(rp));
  const int lo = opt.async_iterations / 2 - 1, hi = opt.async_iterations / 2 + 1;
  row.async_bubble = simulator::interior_bubble(rep, N, lo, hi);

  const int L = static_cast<int>(costs.size());
  struct BaselineDef {
    const char* name;
    ScheduleKind kind;
    bool sweep_v;
  };
  const BaselineDef defs[] = {
      {"gpipe", ScheduleKind::GPipe, false},
      {"1f1b", ScheduleKind::OneFOneB, false},
      {"looped-bfs", ScheduleKind::LoopedBFS, true},
      {"interleaved-1f1b", ScheduleKind::Interleaved1F1B, true},
  };
  row.best_baseline = 1.0;
  for (const auto& d : defs) {
    const int v_max = d.sweep_v ? std::max(1, L / N) : 1;
    double best = 1.0;
    int best_v = 1;
    for (int v = 1; v <= v_max; ++v) {
      if (v * N > L) break;
      const double b = baseline_bubble(d.kind, N, v, costs, M);
      if (b < best) {
        best = b;
        best_v = v;
      }
    }
    row.baseline_bubbles[d.name] = best;
    row.baseline_chunks[d.name] = best_v;
    row.best_baseline = std::min(row.best_baseline, best);
  }
  row.reduction = (row.best_baseline - row.sync_bubble) / row.best_baseline;
  return row;
}

}  // namespace compare
}  // namespace roundpipe
