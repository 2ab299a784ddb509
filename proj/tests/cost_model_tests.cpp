#include <catch2/catch_amalgamated.hpp>

#include "roundpipe/config_io.hpp"
#include "roundpipe/cost_model.hpp"

using namespace roundpipe;

namespace {

ModelConfig model(const char* name) { return config_io::load_model(name); }
GpuSpec gpu(const char* name) { return config_io::load_gpu(name); }

}  // namespace

TEST_CASE("forward flops of one decoder layer") {
  const Workload w{2048, 4};
  // independent arithmetic: 4sbh^2(1 + k/a) + 4bs^2h + 6sbhm*Ea
  CHECK(cost_model::flops_fwd(model("qwen3-1.7b"), w) ==
        Catch::Approx(962072674304.0));
  CHECK(cost_model::flops_fwd(model("qwen3-32b"), w) ==
        Catch::Approx(7752415969280.0));
}

TEST_CASE("full activation bytes per layer") {
  CHECK(cost_model::act_full_bytes(model("llama-3.1-8b"),
                                   Workload{16384, 1}) ==
        Catch::Approx(2281701376.0));
  CHECK(cost_model::act_full_bytes(model("gpt-oss-20b"), Workload{2048, 4}) ==
        Catch::Approx(861143040.0));
}

TEST_CASE("checkpointed activation is just the layer input") {
  const auto m = model("qwen3-1.7b");
  CHECK(cost_model::act_ckpt_bytes(m, Workload{2048, 4}) ==
        Catch::Approx(2.0 * 2048 * 4 * 2048));
}

TEST_CASE("layer upload bytes") {
  CHECK(cost_model::upload_bytes_fwd(model("qwen3-1.7b"), Workload{2048, 8}) ==
        Catch::Approx(167772160.0));
  CHECK(cost_model::upload_bytes_fwd(model("qwen3-235b"), Workload{2048, 64}) ==
        Catch::Approx(5976883200.0));
}

TEST_CASE("reload vs recompute ratio ordering on a consumer link") {
  const auto g = gpu("rtx4090");
  const Workload w{2048, 4};
  auto ratio = [&](const char* name) {
    const auto m = model(name);
    return cost_model::reload_time(m, w, g) /
           cost_model::recompute_time(m, w, g);
  };
  CHECK(ratio("qwen3-1.7b") == Catch::Approx(5.755).margin(0.01));
  CHECK(ratio("qwen3-32b") == Catch::Approx(2.371).margin(0.01));
  CHECK(ratio("llama-3.1-8b") == Catch::Approx(3.057).margin(0.01));
  CHECK(ratio("gpt-oss-20b") == Catch::Approx(4.170).margin(0.01));
  CHECK(ratio("qwen3-235b") == Catch::Approx(3.141).margin(0.01));
}

TEST_CASE("ridge point and ridge batch") {
  const auto g = gpu("rtx4090");
  CHECK(g.ridge_point() == Catch::Approx(10312.5));

  const auto dense = model("qwen3-1.7b");
  CHECK(cost_model::oi_fwd(dense, Workload{2048, 4}) < g.ridge_point());
  CHECK(cost_model::oi_fwd(dense, Workload{2048, 8}) > g.ridge_point());
  const auto rb_dense = cost_model::ridge_batch(dense, g, 2048);
  REQUIRE(rb_dense.has_value());
  CHECK(*rb_dense == 7);

  const auto moe = model("qwen3-235b");
  CHECK(cost_model::oi_fwd(moe, Workload{2048, 64}) < g.ridge_point());
  CHECK(cost_model::oi_fwd(moe, Workload{2048, 80}) > g.ridge_point());
  const auto rb_moe = cost_model::ridge_batch(moe, g, 2048);
  REQUIRE(rb_moe.has_value());
  CHECK(*rb_moe == 77);
}

TEST_CASE("infinite-bandwidth link puts ridge batch at 1") {
  GpuSpec g = gpu("rtx4090");
  g.link_bandwidth = 1e30;
  const auto rb = cost_model::ridge_batch(model("qwen3-1.7b"), g, 2048);
  REQUIRE(rb.has_value());
  CHECK(*rb == 1);
}

TEST_CASE("backward operational intensity exceeds forward") {
  for (const char* name : {"qwen3-1.7b", "llama-3.1-8b", "gpt-oss-20b",
                           "qwen3-32b", "qwen3-235b"})
    for (int b : {1, 4, 64}) {
      const auto r = cost_model::oi_bwd_exceeds_fwd(model(name),
                                                    Workload{2048, b});
      INFO(name << " b=" << b);
      CHECK(r.exceeds);
    }
}

TEST_CASE("synthetic layer costs") {
  const auto costs = cost_model::layer_costs(model("qwen3-1.7b"),
                                             Workload{2048, 4},
                                             gpu("rtx4090"));
  REQUIRE(costs.size() == 28);
  CHECK(costs[0].t_fwd_ns == 2915372);  // 2.915 ms
  CHECK(costs[0].t_bwd_ns == 3 * costs[0].t_fwd_ns);
  CHECK(costs[0].act_ckpt_bytes == 33554432);
}

TEST_CASE("head pseudo-layer is appended when requested") {
  const auto m = model("llama-3.1-8b");
  const auto costs =
      cost_model::layer_costs(m, Workload{2048, 4}, gpu("rtx4090"), true);
  REQUIRE(costs.size() == 33);
  CHECK(costs.back().t_fwd_ns ==
        cost_model::to_ns(*m.head_flops_per_token * 2048.0 * 4 / 330e12));
  CHECK(costs.back().t_bwd_ns == 3 * costs.back().t_fwd_ns);

  ModelConfig headless = m;
  headless.head_flops_per_token.reset();
  CHECK_THROWS_AS(
      cost_model::layer_costs(headless, Workload{2048, 4}, gpu("rtx4090"),
                              true),
      std::invalid_argument);
}

TEST_CASE("config validation rejects bad inputs") {
  ModelConfig m = model("qwen3-1.7b");
  m.num_kv_heads = m.num_heads + 1;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = model("qwen3-1.7b");
  m.num_heads = 12;  // k=8 does not divide a
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  CHECK_THROWS_AS(cost_model::flops_fwd(model("qwen3-1.7b"), Workload{0, 4}),
                  std::invalid_argument);
}
