#pragma once

// Analytic per-layer cost model for offloaded transformer training:
// matmul FLOPs, activation footprints, host-link transfer volumes,
// operational intensity and the ridge-point batch search.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace roundpipe {

struct ModelConfig {
  double hidden_dim = 0;        // h
  int num_heads = 0;            // a
  int num_kv_heads = 0;         // k
  double intermediate_dim = 0;  // m
  int active_experts = 1;       // E_act (1 for dense)
  int total_experts = 1;        // E (1 for dense)
  int num_layers = 0;           // L
  std::optional<double> head_flops_per_token;
  std::optional<double> head_param_bytes;
  std::string name;

  void validate() const {
    if (hidden_dim < 1 || intermediate_dim < 1 || num_heads < 1 ||
        num_kv_heads < 1 || num_layers < 0)
      throw std::invalid_argument("ModelConfig: dims must be >= 1");
    if (num_kv_heads > num_heads || num_heads % num_kv_heads != 0)
      throw std::invalid_argument("ModelConfig: need k <= a and a % k == 0");
    if (active_experts < 1 || total_experts < 1 ||
        active_experts > total_experts)
      throw std::invalid_argument("ModelConfig: need 1 <= E_act <= E");
  }

  double kv_ratio() const {
    return static_cast<double>(num_kv_heads) / num_heads;
  }
};

struct GpuSpec {
  double peak_fp16_flops = 0;  // FLOPS/s
  double memory_bytes = 0;
  double link_bandwidth = 0;   // bytes/s, per direction (full duplex)
  std::string name;

  void validate() const {
    if (peak_fp16_flops <= 0 || memory_bytes <= 0 || link_bandwidth <= 0)
      throw std::invalid_argument("GpuSpec: all fields must be positive");
  }

  double ridge_point() const { return peak_fp16_flops / link_bandwidth; }
};

struct Workload {
  int seq_len = 0;      // s
  int micro_batch = 0;  // b

  void validate() const {
    if (seq_len < 1 || micro_batch < 1)
      throw std::invalid_argument("Workload: need s >= 1 and b >= 1");
  }
};

// Per-layer costs consumed by the partitioner and simulator. Times are
// integer nanoseconds; t_bwd already includes the recompute forward.
struct LayerCost {
  std::int64_t t_fwd_ns = 0;
  std::int64_t t_bwd_ns = 0;
  std::int64_t param_bytes = 0;
  std::int64_t act_ckpt_bytes = 0;  // stage-boundary activation, 2sbh
  std::int64_t act_full_bytes = 0;
};

namespace cost_model {

// Forward matmul FLOPs of one transformer layer. The attention term is
// 4*b*s^2*h (two s x s matmuls per head group).
inline double flops_fwd(const ModelConfig& cfg, const Workload& w) {
  cfg.validate();
  w.validate();
  const double s = w.seq_len, b = w.micro_batch, h = cfg.hidden_dim;
  return 4 * s * b * h * h + 4 * s * b * h * h * cfg.kv_ratio() +
         4 * b * s * s * h +
         6 * s * b * h * cfg.intermediate_dim * cfg.active_experts;
}

// Full (unsaved) forward activations of one layer, bytes. fp16 element
// size is folded into the constants.
inline double act_full_bytes(const ModelConfig& cfg, const Workload& w) {
  cfg.validate();
  w.validate();
  const double s = w.seq_len, b = w.micro_batch;
  return (12 + 4 * cfg.kv_ratio()) * s * b * cfg.hidden_dim +
         6 * s * b * cfg.intermediate_dim * cfg.active_experts;
}

// Checkpointed (stage-boundary) activation of one layer: just its input.
inline double act_ckpt_bytes(const ModelConfig& cfg, const Workload& w) {
  return 2.0 * w.seq_len * w.micro_batch * cfg.hidden_dim;
}

// Parameter bytes of one layer (weights only, fp16). MoE layers carry all
// E expert weight sets.
inline double param_bytes(const ModelConfig& cfg) {
  const double h = cfg.hidden_dim;
  return 4 * h * h * (1 + cfg.kv_ratio()) +
         6 * h * cfg.intermediate_dim * cfg.total_experts;
}

// Host->GPU bytes to run one layer forward: weights plus input activation.
inline double upload_bytes_fwd(const ModelConfig& cfg, const Workload& w) {
  cfg.validate();
  w.validate();
  return param_bytes(cfg) + act_ckpt_bytes(cfg, w);
}

inline double recompute_time(const ModelConfig& cfg, const Workload& w,
                             const GpuSpec& gpu) {
  gpu.validate();
  return flops_fwd(cfg, w) / gpu.peak_fp16_flops;
}

inline double reload_time(const ModelConfig& cfg, const Workload& w,
                          const GpuSpec& gpu) {
  gpu.validate();
  return act_full_bytes(cfg, w) / gpu.link_bandwidth;
}

inline double oi_fwd(const ModelConfig& cfg, const Workload& w) {
  return flops_fwd(cfg, w) / upload_bytes_fwd(cfg, w);
}

struct BwdOiResult {
  double oi_bwd = 0;
  double oi_fwd = 0;
  bool exceeds = false;
};

// Backward OI: ~3x forward FLOPs over upload bytes plus the extra output
// gradient upload.
inline BwdOiResult oi_bwd_exceeds_fwd(const ModelConfig& cfg,
                                      const Workload& w) {
  BwdOiResult r;
  const double up = upload_bytes_fwd(cfg, w);
  r.oi_fwd = flops_fwd(cfg, w) / up;
  r.oi_bwd = 3 * flops_fwd(cfg, w) / (up + act_ckpt_bytes(cfg, w));
  r.exceeds = r.oi_bwd > r.oi_fwd;
  return r;
}

inline constexpr int kRidgeBatchCap = 1 << 20;

// Smallest micro-batch whose forward OI reaches the GPU ridge point.
// OI is strictly increasing in b, so binary search applies.
inline std::optional<int> ridge_batch(const ModelConfig& cfg,
                                      const GpuSpec& gpu, int seq_len) {
  gpu.validate();
  const double ridge = gpu.ridge_point();
  auto ok = [&](int b) {
    return oi_fwd(cfg, Workload{seq_len, b}) >= ridge;
  };
  if (!ok(kRidgeBatchCap)) return std::nullopt;
  int lo = 1, hi = kRidgeBatchCap;
  while (lo < hi) {
    int mid = lo + (hi - lo) / 2;
    if (ok(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

inline std::int64_t to_ns(double seconds) {
  return static_cast<std::int64_t>(std::nearbyint(seconds * 1e9));
}

// Synthetic per-layer timing source: t_bwd = 3 * t_fwd (recompute + two
// gradient passes). With include_head, the LM head is appended as a
// pseudo-layer after layer L.
inline std::vector<LayerCost> layer_costs(const ModelConfig& cfg,
                                          const Workload& w,
                                          const GpuSpec& gpu,
                                          bool include_head = false) {
  cfg.validate();
  w.validate();
  gpu.validate();
  LayerCost layer;
  layer.t_fwd_ns = to_ns(flops_fwd(cfg, w) / gpu.peak_fp16_flops);
  layer.t_bwd_ns = 3 * layer.t_fwd_ns;
  layer.param_bytes = static_cast<std::int64_t>(param_bytes(cfg));
  layer.act_ckpt_bytes = static_cast<std::int64_t>(act_ckpt_bytes(cfg, w));
  layer.act_full_bytes = static_cast<std::int64_t>(act_full_bytes(cfg, w));
  std::vector<LayerCost> out(cfg.num_layers, layer);
  if (include_head) {
    if (!cfg.head_flops_per_token)
      throw std::invalid_argument("layer_costs: head requested but " +
                                  cfg.name + " has no head_flops_per_token");
    LayerCost head;
    const double tokens =
        static_cast<double>(w.seq_len) * w.micro_batch;
    head.t_fwd_ns =
        to_ns(*cfg.head_flops_per_token * tokens / gpu.peak_fp16_flops);
    head.t_bwd_ns = 3 * head.t_fwd_ns;
    head.param_bytes = static_cast<std::int64_t>(
        cfg.head_param_bytes.value_or(*cfg.head_flops_per_token));
    head.act_ckpt_bytes = static_cast<std::int64_t>(act_ckpt_bytes(cfg, w));
    head.act_full_bytes = head.act_ckpt_bytes;
    out.push_back(head);
  }
  return out;
}

}  // namespace cost_model
}  // namespace roundpipe
