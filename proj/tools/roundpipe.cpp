// CLI front end: roofline reports, stage partitioning, schedule
// simulation and comparison, transfer-window packing, and the
// optimizer-consistency model checker.
//
// Exit codes: 0 ok, 2 input error, 3 infeasible, 4 protocol violation,
// 5 internal cap exceeded.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "roundpipe/roundpipe.hpp"

using nlohmann::json;
using namespace roundpipe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitViolation = 4;
constexpr int kExitCap = 5;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
}

void emit_json(const std::string& path, const json& j) {
  if (!path.empty()) write_file(path, j.dump(2) + "\n");
}

void emit_csv(const std::string& path, const std::string& csv) {
  if (!path.empty()) write_file(path, csv);
}

std::vector<LayerCost> costs_for(const std::string& model,
                                 const std::string& gpu, int seq, int batch,
                                 bool include_head) {
  const auto m = config_io::load_model(model);
  const auto g = config_io::load_gpu(gpu);
  return cost_model::layer_costs(m, Workload{seq, batch}, g, include_head);
}

json range_json(const LayerRange& r) {
  return json{{"first", r.first}, {"last", r.last}};
}

json plan_json(const StagePlan& plan) {
  json j;
  j["num_slots"] = plan.num_slots();
  j["forward_stages"] = json::array();
  for (auto r : plan.fwd_stages) j["forward_stages"].push_back(range_json(r));
  j["fused_stage"] = range_json(plan.fused_stage);
  j["backward_stages"] = json::array();
  for (auto r : plan.bwd_stages) j["backward_stages"].push_back(range_json(r));
  j["t_max_ns"] = plan.t_max_ns;
  j["objective"] = plan.objective;
  return j;
}

json report_json(const SimReport& rep, int num_gpus) {
  json j;
  j["makespan_ns"] = rep.makespan_ns;
  j["span_ns"] = rep.span_ns;
  j["bubble_ratio"] = rep.bubble_ratio;
  j["bubble_num"] = rep.bubble_num;
  j["bubble_den"] = rep.bubble_den;
  j["gpus"] = json::array();
  for (int g = 0; g < num_gpus; ++g)
    j["gpus"].push_back({{"id", g}, {"busy_ns", rep.busy_per_gpu_ns[g]}});
  j["events"] = json::array();
  for (const auto& e : rep.timeline)
    j["events"].push_back({{"iter", e.task.iteration},
                           {"round", e.task.round},
                           {"slot", e.task.slot},
                           {"mb", e.task.mb},
                           {"gpu", e.task.gpu},
                           {"start_ns", e.start_ns},
                           {"end_ns", e.end_ns}});
  return j;
}

std::string timeline_csv(const SimReport& rep) {
  std::ostringstream csv;
  csv << "iter,round,slot,mb,gpu,start_ns,end_ns\n";
  for (const auto& e : rep.timeline)
    csv << e.task.iteration << ',' << e.task.round << ',' << e.task.slot << ','
        << e.task.mb << ',' << e.task.gpu << ',' << e.start_ns << ','
        << e.end_ns << '\n';
  return csv.str();
}

const std::vector<std::string>& bundled_models() {
  static const std::vector<std::string> names = {
      "qwen3-1.7b", "llama-3.1-8b", "gpt-oss-20b", "qwen3-32b", "qwen3-235b"};
  return names;
}

// ---- roofline ----------------------------------------------------------

int cmd_roofline(const std::string& model, const std::string& gpu, int seq,
                 int max_batch, const std::string& json_path,
                 const std::string& csv_path) {
  const auto m = config_io::load_model(model);
  const auto g = config_io::load_gpu(gpu);
  const double ridge = g.ridge_point();
  const auto rb = cost_model::ridge_batch(m, g, seq);

  json j;
  j["model"] = m.name;
  j["gpu"] = g.name;
  j["seq_len"] = seq;
  j["ridge_point"] = ridge;
  j["ridge_batch"] = rb ? json(*rb) : json(nullptr);
  j["sweep"] = json::array();
  std::ostringstream csv;
  csv << "batch,oi_fwd,oi_bwd,above_ridge\n";
  std::printf("model %s on %s, seq %d\n", m.name.c_str(), g.name.c_str(), seq);
  std::printf("ridge point: %.4f FLOP/byte\n", ridge);
  std::printf("%8s %14s %14s %6s\n", "batch", "oi_fwd", "oi_bwd", "ridge?");
  for (int b = 1; b <= max_batch; b *= 2) {
    const auto oi = cost_model::oi_bwd_exceeds_fwd(m, Workload{seq, b});
    const bool above = oi.oi_fwd >= ridge;
    std::printf("%8d %14.2f %14.2f %6s\n", b, oi.oi_fwd, oi.oi_bwd,
                above ? "yes" : "no");
    j["sweep"].push_back({{"batch", b},
                          {"oi_fwd", oi.oi_fwd},
                          {"oi_bwd", oi.oi_bwd},
                          {"above_ridge", above}});
    csv << b << ',' << oi.oi_fwd << ',' << oi.oi_bwd << ',' << above << '\n';
  }
  if (rb)
    std::printf("ridge batch: %d\n", *rb);
  else
    std::printf("ridge batch: unreachable (compute-bound never)\n");
  emit_json(json_path, j);
  emit_csv(csv_path, csv.str());
  return kExitOk;
}

// ---- partition ---------------------------------------------------------

int cmd_partition(const std::string& model, const std::string& gpu, int seq,
                  int batch, int num_gpus, int micro_batches,
                  double mem_limit_gb, double residency, bool include_head,
                  const std::string& json_path, const std::string& csv_path) {
  const auto costs = costs_for(model, gpu, seq, batch, include_head);
  PartitionProblem prob;
  prob.costs = costs;
  prob.num_gpus = num_gpus;
  prob.micro_batches = micro_batches;
  prob.residency_factor = residency;
  if (mem_limit_gb > 0)
    prob.mem_limit_bytes = static_cast<std::int64_t>(mem_limit_gb * 1e9);
  const auto plan = partitioner::optimal_partition(prob);

  std::printf("%d layers -> %d slots (%zu fwd, 1 fused, %zu bwd)\n",
              prob.num_layers(), plan.num_slots(), plan.fwd_stages.size(),
              plan.bwd_stages.size());
  std::printf("t_max %lld ns, objective %lld\n",
              static_cast<long long>(plan.t_max_ns),
              static_cast<long long>(plan.objective));
  std::ostringstream csv;
  csv << "slot,kind,first_layer,last_layer,time_ns,headroom_ns\n";
  int slot = 0;
  auto row = [&](StageKind k, LayerRange r) {
    const auto t = partitioner::stage_time(k, r, costs);
    const char* kind =
        k == StageKind::Forward ? "fwd" : (k == StageKind::Fused ? "fused" : "bwd");
    std::printf("  slot %3d %-5s layers %3d..%3d  %10lld ns  headroom %lld\n",
                slot, kind, r.first, r.last, static_cast<long long>(t),
                static_cast<long long>(plan.t_max_ns - t));
    csv << slot << ',' << kind << ',' << r.first << ',' << r.last << ',' << t
        << ',' << (plan.t_max_ns - t) << '\n';
    ++slot;
  };
  for (auto r : plan.fwd_stages) row(StageKind::Forward, r);
  row(StageKind::Fused, plan.fused_stage);
  for (auto r : plan.bwd_stages) row(StageKind::Backward, r);
  emit_json(json_path, plan_json(plan));
  emit_csv(csv_path, csv.str());
  return kExitOk;
}

// ---- simulate ----------------------------------------------------------

int cmd_simulate(const std::string& schedule, const std::string& model,
                 const std::string& gpu, int seq, int batch, int num_gpus,
                 int micro_batches, int round_mb, int iterations, int chunks,
                 bool include_head, const std::string& json_path,
                 const std::string& csv_path, const std::string& svg_path) {
  const auto kind = schedule_kind_from(schedule);
  if (!kind) throw ConfigError("unknown schedule kind: " + schedule);
  const auto costs = costs_for(model, gpu, seq, batch, include_head);

  ScheduleSpec spec;
  spec.kind = *kind;
  spec.num_gpus = num_gpus;
  spec.micro_batches = micro_batches;
  spec.iterations = iterations;
  std::vector<StageSlot> slot_table;
  const bool rp = *kind == ScheduleKind::RoundPipe ||
                  *kind == ScheduleKind::RoundPipeSync;
  if (rp) {
    PartitionProblem prob;
    prob.costs = costs;
    prob.num_gpus = num_gpus;
    prob.micro_batches = micro_batches;
    const auto plan = partitioner::optimal_partition(prob);
    slot_table = scheduler::slot_table_from_plan(plan, costs);
    for (const auto& s : slot_table) spec.slot_durs.push_back(s.dur_ns);
    spec.round_micro_batches = round_mb;
  } else {
    const int S = (*kind == ScheduleKind::GPipe ||
                   *kind == ScheduleKind::OneFOneB)
                      ? num_gpus
                      : chunks * num_gpus;
    for (auto r : partitioner::symmetric_split(costs, S)) {
      spec.stage_fwd_durs.push_back(
          partitioner::stage_time(StageKind::Forward, r, costs));
      spec.stage_bwd_durs.push_back(
          partitioner::stage_time(StageKind::Backward, r, costs));
    }
  }
  const auto sched = scheduler::synthesize(spec);
  if (auto err = scheduler::validate(sched))
    throw std::logic_error("synthesized schedule invalid: " + *err);
  SimOptions opt;
  opt.barrier_between_iterations = *kind == ScheduleKind::RoundPipeSync;
  const auto rep = simulator::simulate(sched, opt);

  std::printf("schedule %s: %zu tasks on %d gpus\n", schedule.c_str(),
              sched.tasks.size(), sched.num_gpus);
  std::printf("makespan %lld ns, bubble %.4f%% (%lld/%lld)\n",
              static_cast<long long>(rep.makespan_ns),
              100.0 * rep.bubble_ratio, static_cast<long long>(rep.bubble_num),
              static_cast<long long>(rep.bubble_den));
  json j = report_json(rep, sched.num_gpus);
  j["schedule"] = schedule;
  if (*kind == ScheduleKind::RoundPipe && iterations >= 3) {
    const int lo = iterations / 2 - 1, hi = iterations / 2 + 1;
    const double ib = simulator::interior_bubble(
        rep, sched.num_gpus, std::max(lo, 1), std::min(hi, iterations - 2));
    std::printf("interior bubble %.4f%%\n", 100.0 * ib);
    j["interior_bubble"] = ib;
  }
  emit_json(json_path, j);
  emit_csv(csv_path, timeline_csv(rep));
  if (!svg_path.empty())
    write_file(svg_path, svg::render_gantt(rep, sched.num_gpus, slot_table));
  return kExitOk;
}

// ---- compare -----------------------------------------------------------

int cmd_compare(std::vector<std::string> models, const std::string& gpu,
                int seq, int batch, int num_gpus, int micro_batches,
                const std::string& json_path, const std::string& csv_path) {
  if (models.size() == 1 && models[0] == "all") models = bundled_models();
  CompareOptions opt;
  opt.num_gpus = num_gpus;
  opt.micro_batches = micro_batches;

  json j = json::array();
  std::ostringstream csv;
  csv << "model,slots,async_bubble,sync_bubble,gpipe,1f1b,looped_bfs,"
         "interleaved_1f1b,best_baseline,reduction\n";
  std::printf("%-14s %5s %8s %8s %8s %8s %8s %8s %6s\n", "model", "slots",
              "async%", "sync%", "gpipe%", "1f1b%", "l-bfs%", "int%", "red%");
  for (const auto& name : models) {
    const auto costs = costs_for(name, gpu, seq, batch, true);
    const auto row = compare::compare_one(name, costs, opt);
    std::printf("%-14s %5d %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f %6.1f\n",
                row.model.c_str(), row.num_slots, 100 * row.async_bubble,
                100 * row.sync_bubble, 100 * row.baseline_bubbles.at("gpipe"),
                100 * row.baseline_bubbles.at("1f1b"),
                100 * row.baseline_bubbles.at("looped-bfs"),
                100 * row.baseline_bubbles.at("interleaved-1f1b"),
                100 * row.reduction);
    j.push_back({{"model", row.model},
                 {"slots", row.num_slots},
                 {"async_bubble", row.async_bubble},
                 {"sync_bubble", row.sync_bubble},
                 {"baselines", row.baseline_bubbles},
                 {"baseline_chunks", row.baseline_chunks},
                 {"best_baseline", row.best_baseline},
                 {"reduction", row.reduction}});
    csv << row.model << ',' << row.num_slots << ',' << row.async_bubble << ','
        << row.sync_bubble << ',' << row.baseline_bubbles.at("gpipe") << ','
        << row.baseline_bubbles.at("1f1b") << ','
        << row.baseline_bubbles.at("looped-bfs") << ','
        << row.baseline_bubbles.at("interleaved-1f1b") << ','
        << row.best_baseline << ',' << row.reduction << '\n';
  }
  emit_json(json_path, j);
  emit_csv(csv_path, csv.str());
  return kExitOk;
}

// ---- plan-transfers ----------------------------------------------------

int cmd_plan_transfers(const std::vector<std::int64_t>& sizes, int windows,
                       std::int64_t max_chunk, const std::string& model,
                       const std::string& gpu, int seq, int batch,
                       int num_gpus, int micro_batches,
                       const std::string& json_path,
                       const std::string& csv_path) {
  json j;
  std::ostringstream csv;
  bool infeasible = false;
  if (!sizes.empty()) {
    std::vector<TransferItem> items;
    for (std::size_t i = 0; i < sizes.size(); ++i)
      items.push_back({"t" + std::to_string(i), sizes[i],
                       TransferDirection::Upload, 0});
    const auto plan = transfer_planner::plan(items, windows, max_chunk);
    std::printf("%zu items into %d windows, makespan %lld bytes\n",
                sizes.size(), windows,
                static_cast<long long>(plan.makespan_bytes));
    j["makespan_bytes"] = plan.makespan_bytes;
    j["windows"] = json::array();
    csv << "window,bytes,items\n";
    for (const auto& w : plan.windows) {
      std::printf("  window %2d: %lld bytes (%zu chunks)\n", w.window_id,
                  static_cast<long long>(w.total_bytes), w.items.size());
      json items_j = json::array();
      for (const auto& it : w.items)
        items_j.push_back({{"tensor", it.tensor_id},
                           {"chunk", it.chunk_index},
                           {"bytes", it.bytes}});
      j["windows"].push_back({{"id", w.window_id},
                              {"bytes", w.total_bytes},
                              {"items", items_j}});
      csv << w.window_id << ',' << w.total_bytes << ',' << w.items.size()
          << '\n';
    }
  } else {
    // feasibility mode: pack each stage's weights into its windows and
    // check against the host link
    const auto costs = costs_for(model, gpu, seq, batch, true);
    const auto g = config_io::load_gpu(gpu);
    PartitionProblem prob;
    prob.costs = costs;
    prob.num_gpus = num_gpus;
    prob.micro_batches = micro_batches;
    const auto plan = partitioner::optimal_partition(prob);
    const auto verdicts =
        transfer_planner::stage_feasibility(plan, costs, g, micro_batches);
    j["stages"] = json::array();
    csv << "slot,window_ns,weight_bytes,activation_bytes,feasible\n";
    std::printf("%5s %12s %14s %14s %8s\n", "slot", "window_ns", "weight_B",
                "act_B", "fits?");
    for (const auto& v : verdicts) {
      std::printf("%5d %12lld %14lld %14lld %8s\n", v.slot,
                  static_cast<long long>(v.window_ns),
                  static_cast<long long>(v.weight_bytes),
                  static_cast<long long>(v.activation_bytes),
                  v.feasible ? "yes" : "NO");
      j["stages"].push_back({{"slot", v.slot},
                             {"window_ns", v.window_ns},
                             {"weight_bytes", v.weight_bytes},
                             {"activation_bytes", v.activation_bytes},
                             {"feasible", v.feasible}});
      csv << v.slot << ',' << v.window_ns << ',' << v.weight_bytes << ','
          << v.activation_bytes << ',' << v.feasible << '\n';
      if (!v.feasible) infeasible = true;
    }
  }
  emit_json(json_path, j);
  emit_csv(csv_path, csv.str());
  if (infeasible) {
    std::printf("infeasible: at least one window cannot hide its traffic\n");
    return kExitInfeasible;
  }
  return kExitOk;
}

// ---- verify-consistency ------------------------------------------------

int cmd_verify_consistency(int layers, int iters, const std::string& mode_s,
                           int drop_edge, const std::string& json_path,
                           const std::string& csv_path) {
  const auto mode = protocol_mode_from(mode_s);
  if (!mode) throw ConfigError("unknown protocol mode: " + mode_s);
  const auto proto =
      consistency::build_protocol(layers, iters, *mode, drop_edge);
  const auto verdict = consistency::check_all_interleavings(proto);
  const auto makespan =
      consistency::protocol_makespan(proto, ActionDurations{});

  json j;
  j["mode"] = mode_s;
  j["layers"] = layers;
  j["iterations"] = iters;
  j["drop_edge"] = drop_edge;
  j["makespan"] = makespan;
  j["ok"] = verdict.ok;
  std::ostringstream csv;
  csv << "position,action,layer,iteration\n";
  if (verdict.ok) {
    std::printf("ok: all interleavings satisfy constraints (1)-(5); "
                "critical path %lld\n",
                static_cast<long long>(makespan));
  } else {
    j["violated_constraint"] = verdict.violated_constraint;
    j["witness"] = json::array();
    std::printf("violation of constraint (%d); witness:\n",
                verdict.violated_constraint);
    int pos = 0;
    for (const auto& a : verdict.witness) {
      std::printf("  %2d. %-12s layer %2d iter %d\n", pos, to_string(a.kind),
                  a.layer, a.iteration);
      j["witness"].push_back({{"kind", to_string(a.kind)},
                              {"layer", a.layer},
                              {"iteration", a.iteration}});
      csv << pos << ',' << to_string(a.kind) << ',' << a.layer << ','
          << a.iteration << '\n';
      ++pos;
    }
  }
  emit_json(json_path, j);
  emit_csv(csv_path, csv.str());
  return verdict.ok ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pipeline-parallel schedule analyzer"};
  app.require_subcommand(1);

  std::string model = "qwen3-1.7b", gpu = "rtx4090";
  std::string schedule = "roundpipe", mode = "event-per-layer";
  std::vector<std::string> models = {"all"};
  int seq = 2048, batch = 4, num_gpus = 8, micro_batches = 16;
  int round_mb = 0, iterations = 1, chunks = 2, max_batch = 128;
  int layers = 2, iters = 2, drop_edge = 0, windows = 1;
  double mem_limit_gb = 0, residency = 2.0;
  bool include_head = true;
  std::int64_t max_chunk = 0;
  std::vector<std::int64_t> sizes;
  std::string json_path, csv_path, svg_path;

  auto add_io = [&](CLI::App* cmd) {
    cmd->add_option("--json", json_path, "write JSON report to path");
    cmd->add_option("--csv", csv_path, "write CSV table to path");
  };

  auto* roofline = app.add_subcommand("roofline", "operational intensity");
  roofline->add_option("--model", model);
  roofline->add_option("--gpu", gpu);
  roofline->add_option("--seq", seq);
  roofline->add_option("--max-batch", max_batch);
  add_io(roofline);

  auto* partition = app.add_subcommand("partition", "asymmetric stage split");
  partition->add_option("--model", model);
  partition->add_option("--gpu", gpu);
  partition->add_option("--seq", seq);
  partition->add_option("--batch", batch);
  partition->add_option("--gpus", num_gpus);
  partition->add_option("--microbatches", micro_batches);
  partition->add_option("--mem-limit-gb", mem_limit_gb, "0 = unlimited");
  partition->add_option("--residency", residency);
  partition->add_flag("--no-head{false}", include_head);
  add_io(partition);

  auto* simulate = app.add_subcommand("simulate", "run one schedule");
  simulate->add_option("--schedule", schedule);
  simulate->add_option("--model", model);
  simulate->add_option("--gpu", gpu);
  simulate->add_option("--seq", seq);
  simulate->add_option("--batch", batch);
  simulate->add_option("--gpus", num_gpus);
  simulate->add_option("--microbatches", micro_batches);
  simulate->add_option("--round-microbatches", round_mb);
  simulate->add_option("--iterations", iterations);
  simulate->add_option("--chunks", chunks, "v for looped/interleaved");
  simulate->add_option("--svg", svg_path, "write Gantt chart to path");
  add_io(simulate);

  auto* cmp = app.add_subcommand("compare", "all schedules side by side");
  cmp->add_option("--models", models)->delimiter(',');
  cmp->add_option("--gpu", gpu);
  cmp->add_option("--seq", seq);
  cmp->add_option("--batch", batch);
  cmp->add_option("--gpus", num_gpus);
  cmp->add_option("--microbatches", micro_batches);
  add_io(cmp);

  auto* pt = app.add_subcommand("plan-transfers", "LPT window packing");
  pt->add_option("--sizes", sizes, "explicit chunk sizes")->delimiter(',');
  pt->add_option("--windows", windows);
  pt->add_option("--max-chunk", max_chunk, "0 = ceil(total/windows)");
  pt->add_option("--model", model);
  pt->add_option("--gpu", gpu);
  pt->add_option("--seq", seq);
  pt->add_option("--batch", batch);
  pt->add_option("--gpus", num_gpus);
  pt->add_option("--microbatches", micro_batches);
  add_io(pt);

  auto* vc = app.add_subcommand("verify-consistency", "protocol checker");
  vc->add_option("--layers", layers);
  vc->add_option("--iters", iters);
  vc->add_option("--mode", mode);
  vc->add_option("--drop-edge", drop_edge)->check(CLI::Range(0, 4));
  add_io(vc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (roofline->parsed())
      return cmd_roofline(model, gpu, seq, max_batch, json_path, csv_path);
    if (partition->parsed())
      return cmd_partition(model, gpu, seq, batch, num_gpus, micro_batches,
                           mem_limit_gb, residency, include_head, json_path,
                           csv_path);
    if (simulate->parsed())
      return cmd_simulate(schedule, model, gpu, seq, batch, num_gpus,
                          micro_batches, round_mb, iterations, chunks,
                          include_head, json_path, csv_path, svg_path);
    if (cmp->parsed())
      return cmd_compare(models, gpu, seq, batch, num_gpus, micro_batches,
                         json_path, csv_path);
    if (pt->parsed())
      return cmd_plan_transfers(sizes, windows, max_chunk, model, gpu, seq,
                                batch, num_gpus, micro_batches, json_path,
                                csv_path);
    if (vc->parsed())
      return cmd_verify_consistency(layers, iters, mode, drop_edge, json_path,
                                    csv_path);
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const consistency::CapExceededError& e) {
    std::fprintf(stderr, "cap exceeded: %s\n", e.what());
    return kExitCap;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitCap;
  }
  return kExitOk;
}
