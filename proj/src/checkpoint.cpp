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

#include "iamrec/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace iamrec {

namespace {

constexpr const char* kFormatName = "iamrec-checkpoint";
constexpr int kFormatVersion = 1;

void append_f64_le(std::string& out, double value) {
  uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(bits));
  for (int byte = 0; byte < 8; ++byte) {
    out.push_back(static_cast<char>((bits >> (8 * byte)) & 0xff));
  }
}

double read_f64_le(const char* data) {
  uint64_t bits = 0;
  for (int byte = 0; byte < 8; ++byte) {
    bits |= static_cast<uint64_t>(static_cast<unsigned char>(data[byte])) << (8 * byte);
  }
  double value = 0.0;
  std::memcpy(&value, &bits, sizeof(value));
  return value;
}

nlohmann::json config_to_json(const ModelConfig& config) {
  nlohmann::json j;
  j["d"] = config.d;
  j["n_heads"] = config.n_heads;
  j["n_blocks"] = config.n_blocks;
  j["ffn_mult"] = config.ffn_mult;
  j["vocab_size"] = config.vocab_size;
  j["max_len"] = config.max_len;
  j["n_items"] = config.n_items;
  j["seed"] = config.seed;
  j["variant"] = to_string(config.variant);
  if (config.lora) {
    j["lora"] = {{"rank", config.lora->rank},
                 {"alpha", config.lora->alpha},
                 {"dropout", config.lora->dropout}};
  } else {
    j["lora"] = nullptr;
  }
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig config;
  config.d = j.at("d").get<int>();
  config.n_heads = j.at("n_heads").get<int>();
  config.n_blocks = j.at("n_blocks").get<int>();
  config.ffn_mult = j.at("ffn_mult").get<int>();
  config.vocab_size = j.at("vocab_size").get<int>();
  config.max_len = j.at("max_len").get<int>();
  config.n_items = j.at("n_items").get<int>();
  config.seed = j.at("seed").get<uint64_t>();
  config.variant = variant_from_string(j.at("variant").get<std::string>());
  if (!j.at("lora").is_null()) {
    LoraConfig lora;
    lora.rank = j["lora"].at("rank").get<int>();
    lora.alpha = j["lora"].at("alpha").get<double>();
    lora.dropout = j["lora"].at("dropout").get<double>();
    config.lora = lora;
  }
  return config;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParameters& params,
                     const ModelConfig& config, const Vocabulary& vocab,
                     const std::string& prompt) {
  // tensor_list only mutates through the returned pointers, which the writer
  // never does.
  const std::vector<NamedTensor> tensors =
      tensor_list(const_cast<ModelParameters&>(params));

  nlohmann::json directory = nlohmann::json::object();
  std::string payload;
  for (const NamedTensor& entry : tensors) {
    const Matrix& tensor = *entry.tensor;
    directory[entry.name] = {
        {"shape", {tensor.rows(), tensor.cols()}},
        {"offset", payload.size()},
    };
    for (Eigen::Index i = 0; i < tensor.rows(); ++i) {
      for (Eigen::Index j = 0; j < tensor.cols(); ++j) {
        append_f64_le(payload, tensor(i, j));
      }
    }
  }

  nlohmann::json header;
  header["format"] = kFormatName;
  header["version"] = kFormatVersion;
  header["config"] = config_to_json(config);
  header["vocab"] = vocab.tokens();
  header["prompt"] = prompt;
  header["tensors"] = directory;
  header["payload_bytes"] = payload.size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out << header.dump() << '\n' << payload;
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw DataError("checkpoint has no header line: " + path);
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid checkpoint header: " + std::string(e.what()));
  }
  if (header.value("format", "") != kFormatName) {
    throw DataError("not an " + std::string(kFormatName) + " file: " + path);
  }

  Checkpoint ckpt;
  ckpt.config = config_from_json(header.at("config"));
  ckpt.vocab = Vocabulary(header.at("vocab").get<std::vector<std::string>>());
  ckpt.prompt = header.value("prompt", "");

  std::string payload((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  const size_t expected = header.value("payload_bytes", size_t{0});
  if (payload.size() != expected) {
    throw DataError("checkpoint payload truncated: expected " +
                    std::to_string(expected) + " bytes, got " +
                    std::to_string(payload.size()));
  }

  ckpt.params = init_params(ckpt.config);
  if (ckpt.config.lora) {
    ckpt.params = lora_apply(ckpt.params, *ckpt.config.lora, ckpt.config.seed);
  }
  const nlohmann::json& directory = header.at("tensors");
  for (NamedTensor& entry : tensor_list(ckpt.params)) {
    if (!directory.contains(entry.name)) {
      throw DataError("checkpoint is missing tensor " + entry.name);
    }
    const nlohmann::json& meta = directory.at(entry.name);
    const auto shape = meta.at("shape").get<std::vector<Eigen::Index>>();
    Matrix& tensor = *entry.tensor;
    if (shape.size() != 2 || shape[0] != tensor.rows() || shape[1] != tensor.cols()) {
      throw DataError("checkpoint tensor " + entry.name + " has unexpected shape");
    }
    size_t offset = meta.at("offset").get<size_t>();
    const size_t bytes = static_cast<size_t>(tensor.size()) * 8;
    if (offset + bytes > payload.size()) {
      throw DataError("checkpoint tensor " + entry.name + " overruns the payload");
    }
    for (Eigen::Index i = 0; i < tensor.rows(); ++i) {
      for (Eigen::Index j = 0; j < tensor.cols(); ++j) {
        tensor(i, j) = read_f64_le(payload.data() + offset);
        offset += 8;
      }
    }
  }
  return ckpt;
}

}  // namespace iamrec
