// Copyright 2026 iamrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iamrec/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace iamrec;

namespace {

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

bool bits_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<size_t>(a.size())) == 0;
}

ModelConfig demo_config() {
  ModelConfig config;
  config.d = 16;
  config.n_heads = 2;
  config.n_blocks = 1;
  config.ffn_mult = 2;
  config.vocab_size = 12;
  config.max_len = 10;
  config.n_items = 7;
  config.seed = 21;
  config.variant = Variant::kReversed;
  return config;
}

}  // namespace

TEST_CASE("checkpoints round-trip bit-exactly") {
  const ModelConfig config = demo_config();
  ModelParameters params = init_params(config);
  params.tok_emb(0, 0) = -0.0;  // signed zero must survive
  params.tok_emb(1, 1) = 1.0 / 3.0;
  const Vocabulary vocab = build_vocab({"red mug", "blue pen"}, 1);
  const std::string prompt = "predict the NEXT item:";

  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "ckpt_roundtrip.ckpt").string();
  const std::string path2 = (dir / "ckpt_roundtrip2.ckpt").string();
  save_checkpoint(path, params, config, vocab, prompt);

  const Checkpoint loaded = load_checkpoint(path);
  CHECK(bits_equal(loaded.params.tok_emb, params.tok_emb));
  CHECK(bits_equal(loaded.params.pos_emb, params.pos_emb));
  CHECK(bits_equal(loaded.params.adapter, params.adapter));
  CHECK(bits_equal(loaded.params.layers[0].wq, params.layers[0].wq));
  CHECK(bits_equal(loaded.params.layers[0].w2, params.layers[0].w2));
  CHECK(std::signbit(loaded.params.tok_emb(0, 0)));
  CHECK(loaded.config.variant == Variant::kReversed);
  CHECK(loaded.config.d == config.d);
  CHECK(loaded.config.seed == config.seed);
  CHECK(loaded.vocab.tokens() == vocab.tokens());
  CHECK(loaded.prompt == prompt);

  // save(load(x)) is byte-identical to save(x)
  save_checkpoint(path2, loaded.params, loaded.config, loaded.vocab, loaded.prompt);
  CHECK(read_bytes(path) == read_bytes(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("checkpoints carry LoRA adapters when present") {
  ModelConfig config = demo_config();
  config.lora = LoraConfig{4, 16.0, 0.05};
  ModelParameters params = lora_apply(init_params(config), *config.lora, 99);
  params.layers[0].lora_b_q(2, 1) = 0.125;
  const Vocabulary vocab = build_vocab({"x"}, 1);

  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "ckpt_lora.ckpt").string();
  save_checkpoint(path, params, config, vocab, "p");
  const Checkpoint loaded = load_checkpoint(path);
  REQUIRE(loaded.config.lora.has_value());
  CHECK(loaded.config.lora->rank == 4);
  CHECK(loaded.params.has_lora());
  CHECK(bits_equal(loaded.params.layers[0].lora_a_q, params.layers[0].lora_a_q));
  CHECK(loaded.params.layers[0].lora_b_q(2, 1) == 0.125);
  std::filesystem::remove(path);
}

TEST_CASE("the header line is JSON with a tensor directory") {
  const ModelConfig config = demo_config();
  const ModelParameters params = init_params(config);
  const Vocabulary vocab = build_vocab({"a"}, 1);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "ckpt_header.ckpt").string();
  save_checkpoint(path, params, config, vocab, "p");

  std::ifstream in(path, std::ios::binary);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header.find("\"tensors\"") != std::string::npos);
  CHECK(header.find("\"tok_emb\"") != std::string::npos);
  CHECK(header.find("\"offset\"") != std::string::npos);
  CHECK(header.find("\"shape\"") != std::string::npos);
  CHECK(header.find("\"config\"") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent.ckpt"), DataError);

  const auto dir = std::filesystem::temp_directory_path();
  const std::string bad = (dir / "ckpt_bad.ckpt").string();
  {
    std::ofstream out(bad, std::ios::binary);
    out << "not json\ngarbage";
  }
  CHECK_THROWS_AS(load_checkpoint(bad), DataError);

  // truncated payload
  const ModelConfig config = demo_config();
  const ModelParameters params = init_params(config);
  const Vocabulary vocab = build_vocab({"a"}, 1);
  const std::string path = (dir / "ckpt_trunc.ckpt").string();
  save_checkpoint(path, params, config, vocab, "p");
  const std::string bytes = read_bytes(path);
  {
    std::ofstream out(path, std::ios::binary);
    out << bytes.substr(0, bytes.size() - 17);
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
  std::filesystem::remove(bad);
  std::filesystem::remove(path);
}
