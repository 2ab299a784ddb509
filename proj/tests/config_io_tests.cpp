#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "roundpipe/config_io.hpp"

using namespace roundpipe;

TEST_CASE("all bundled configs load and validate") {
  for (const char* name : {"qwen3-1.7b", "llama-3.1-8b", "gpt-oss-20b",
                           "qwen3-32b", "qwen3-235b"}) {
    const auto m = config_io::load_model(name);
    CHECK(m.name == name);
    CHECK(m.num_layers >= 24);
    CHECK(m.head_flops_per_token.has_value());
  }
  for (const char* name : {"rtx4090", "rtx5090", "a100", "h100", "a800"}) {
    const auto g = config_io::load_gpu(name);
    CHECK(g.name == name);
    CHECK(g.ridge_point() > 0);
  }
}

TEST_CASE("bundled gpu table values") {
  const auto g4090 = config_io::load_gpu("rtx4090");
  CHECK(g4090.peak_fp16_flops == 330e12);
  CHECK(g4090.link_bandwidth == 32e9);
  const auto h100 = config_io::load_gpu("h100");
  CHECK(h100.peak_fp16_flops == 989.5e12);
  CHECK(h100.link_bandwidth == 450e9);
}

TEST_CASE("unknown names are reported as config errors") {
  CHECK_THROWS_AS(config_io::load_model("no-such-model"), ConfigError);
  CHECK_THROWS_AS(config_io::load_gpu("no-such-gpu"), ConfigError);
}

TEST_CASE("explicit paths override the bundled directory") {
  const std::string path = "test_model_tmp.json";
  {
    std::ofstream out(path);
    out << R"({"name":"tiny","hidden_dim":64,"num_heads":4,"num_kv_heads":2,
              "intermediate_dim":128,"num_layers":2})";
  }
  const auto m = config_io::load_model(path);
  CHECK(m.name == "tiny");
  CHECK(m.active_experts == 1);  // defaulted
  CHECK_FALSE(m.head_flops_per_token.has_value());
  std::remove(path.c_str());
}

TEST_CASE("malformed json and missing fields are config errors") {
  const std::string path = "test_bad_tmp.json";
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(config_io::load_model(path), ConfigError);
  {
    std::ofstream out(path);
    out << R"({"name":"x","hidden_dim":64})";
  }
  CHECK_THROWS_AS(config_io::load_model(path), ConfigError);
  std::remove(path.c_str());
}
