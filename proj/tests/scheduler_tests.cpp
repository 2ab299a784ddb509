#include <catch2/catch_amalgamated.hpp>

#include "roundpipe/scheduler.hpp"

using namespace roundpipe;

namespace {

ScheduleSpec rp_spec(int N, int S, int M, int MR, int iters = 1) {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::RoundPipe;
  spec.num_gpus = N;
  spec.micro_batches = M;
  spec.round_micro_batches = MR;
  spec.iterations = iters;
  spec.slot_durs.assign(S, 1);
  return spec;
}

}  // namespace

TEST_CASE("round-robin dispatch formula and round continuity") {
  const auto sched = scheduler::synthesize(rp_spec(4, 6, 16, 8));
  CHECK(sched.tasks.size() == 2u * 6 * 8);  // two rounds
  for (const auto& t : sched.tasks)
    CHECK(t.gpu == (t.round * 6 + t.slot) % 4);
  // slot 0 of round 1 lands on gpu (0 + S) mod N = 2
  for (const auto& t : sched.tasks)
    if (t.round == 1 && t.slot == 0) CHECK(t.gpu == 2);
  CHECK(scheduler::validate(sched) == std::nullopt);
}

TEST_CASE("async iterations continue the dispatch cursor") {
  const auto sched = scheduler::synthesize(rp_spec(4, 6, 8, 8, 3));
  // one round per iteration; g0 advances by S each round, across
  // iteration boundaries too
  for (const auto& t : sched.tasks)
    CHECK(t.gpu == (t.round * 6 + t.slot) % 4);
  CHECK(sched.tasks.back().iteration == 2);
  CHECK(scheduler::validate(sched) == std::nullopt);
}

TEST_CASE("round micro-batch default rule") {
  CHECK(scheduler::default_round_micro_batches(16, 8) == 16);   // M <= 4N
  CHECK(scheduler::default_round_micro_batches(32, 8) == 32);
  CHECK(scheduler::default_round_micro_batches(40, 8) == 8);    // divisor >= N
  CHECK(scheduler::default_round_micro_batches(36, 8) == 9);
  CHECK(scheduler::default_round_micro_batches(24, 5) == 6);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(scheduler::synthesize(rp_spec(4, 6, 16, 2)),  // M_R < N
                  std::invalid_argument);
  CHECK_THROWS_AS(scheduler::synthesize(rp_spec(4, 6, 16, 5)),  // M_R !| M
                  std::invalid_argument);
}

TEST_CASE("gpipe emits a forward wave then a reversed backward wave") {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::GPipe;
  spec.micro_batches = 8;
  spec.stage_fwd_durs.assign(4, 1);
  spec.stage_bwd_durs.assign(4, 1);
  const auto sched = scheduler::synthesize(spec);
  CHECK(sched.num_gpus == 4);
  CHECK(sched.tasks.size() == 2u * 4 * 8);
  CHECK(sched.tasks.front().slot == 0);
  CHECK(sched.tasks.front().gpu == 0);
  // first backward task is slot S on the last stage's gpu
  const auto& first_bwd = sched.tasks[4 * 8];
  CHECK(first_bwd.slot == 4);
  CHECK(first_bwd.gpu == 3);
  CHECK(scheduler::validate(sched) == std::nullopt);
}

TEST_CASE("looped-bfs wraps stages around the gpus") {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::LoopedBFS;
  spec.num_gpus = 4;
  spec.micro_batches = 8;
  spec.stage_fwd_durs.assign(8, 1);  // v = 2
  spec.stage_bwd_durs.assign(8, 1);
  const auto sched = scheduler::synthesize(spec);
  for (const auto& t : sched.tasks) {
    const int stage = t.slot < 8 ? t.slot : 2 * 8 - 1 - t.slot;
    CHECK(t.gpu == stage % 4);
  }
  CHECK(scheduler::validate(sched) == std::nullopt);
}

TEST_CASE("1f1b per-rank emission counts") {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::OneFOneB;
  spec.micro_batches = 8;
  spec.stage_fwd_durs.assign(4, 1);
  spec.stage_bwd_durs.assign(4, 1);
  const auto sched = scheduler::synthesize(spec);
  CHECK(sched.tasks.size() == 2u * 4 * 8);
  // every rank emits M forwards and M backwards
  std::vector<int> fwd(4, 0), bwd(4, 0);
  for (const auto& t : sched.tasks)
    (t.slot < 4 ? fwd : bwd)[t.gpu]++;
  for (int r = 0; r < 4; ++r) {
    CHECK(fwd[r] == 8);
    CHECK(bwd[r] == 8);
  }
  // the deepest rank alternates immediately (no warmup)
  std::vector<const Task*> rank3;
  for (const auto& t : sched.tasks)
    if (t.gpu == 3) rank3.push_back(&t);
  CHECK(rank3[0]->slot == 3);  // forward
  CHECK(rank3[1]->slot == 4);  // backward right after
  CHECK(scheduler::validate(sched) == std::nullopt);
}

TEST_CASE("interleaved emission covers every (stage, microbatch) once") {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::Interleaved1F1B;
  spec.num_gpus = 4;
  spec.micro_batches = 8;
  spec.stage_fwd_durs.assign(8, 1);
  spec.stage_bwd_durs.assign(8, 1);
  const auto sched = scheduler::synthesize(spec);
  CHECK(sched.tasks.size() == 2u * 8 * 8);
  CHECK(scheduler::validate(sched) == std::nullopt);
}

TEST_CASE("coverage and uniqueness across kinds in a property sweep") {
  for (int N : {2, 4, 8})
    for (int M : {N, 2 * N, 4 * N}) {
      {
        auto sched = scheduler::synthesize(rp_spec(N, 2 * N, M, M, 2));
        CHECK(scheduler::validate(sched) == std::nullopt);
      }
      for (auto kind : {ScheduleKind::GPipe, ScheduleKind::OneFOneB,
                        ScheduleKind::LoopedBFS,
                        ScheduleKind::Interleaved1F1B}) {
        ScheduleSpec spec;
        spec.kind = kind;
        spec.num_gpus = N;
        spec.micro_batches = M;
        const int S = (kind == ScheduleKind::LoopedBFS ||
                       kind == ScheduleKind::Interleaved1F1B)
                          ? 2 * N
                          : N;
        spec.stage_fwd_durs.assign(S, 1);
        spec.stage_bwd_durs.assign(S, 1);
        auto sched = scheduler::synthesize(spec);
        INFO(to_string(kind) << " N=" << N << " M=" << M);
        CHECK(sched.tasks.size() == 2u * S * M);
        CHECK(scheduler::validate(sched) == std::nullopt);
      }
    }
}

TEST_CASE("validate flags injected mutations") {
  auto sched = scheduler::synthesize(rp_spec(4, 6, 8, 8));
  auto dup = sched;
  dup.tasks.push_back(dup.tasks.front());
  CHECK(scheduler::validate(dup).has_value());

  auto swapped = sched;
  // swap two micro-batches of one slot out of order
  std::swap(swapped.tasks[0], swapped.tasks[1]);
  CHECK(scheduler::validate(swapped).has_value());

  auto wrong_gpu = sched;
  wrong_gpu.tasks[0].gpu = (wrong_gpu.tasks[0].gpu + 1) % 4;
  CHECK(scheduler::validate(wrong_gpu).has_value());
}
