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

#include "iamrec/run_config.hpp"

#include "iamrec/common.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace iamrec {

namespace {

std::string trim(std::string_view text) {
  size_t begin = 0;
  size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<uint64_t> parse_seeds(const std::string& key, const std::string& value) {
  std::vector<uint64_t> seeds;
  std::stringstream stream(value);
  std::string part;
  while (std::getline(stream, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), seed);
    if (ec != std::errc{} || ptr != part.data() + part.size()) {
      throw ConfigError("config key '" + key + "' expects comma-separated integers, got '" +
                        value + "'");
    }
    seeds.push_back(seed);
  }
  if (seeds.empty()) {
    throw ConfigError("config key '" + key + "' needs at least one seed");
  }
  return seeds;
}

}  // namespace

RunConfig RunConfig::parse_string(const std::string& text) {
  RunConfig config;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const size_t comment = line.find('#');
    if (comment != std::string::npos) line.resize(comment);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not 'key = value': " + trimmed);
    }
    const std::string key = trim(trimmed.substr(0, eq));
    const std::string value = trim(trimmed.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + " has an empty key");
    }

    if (key == "interactions") config.interactions = value;
    else if (key == "titles") config.titles = value;
    else if (key == "out_dir") config.out_dir = value;
    else if (key == "d") config.d = parse_int(key, value);
    else if (key == "n_heads") config.n_heads = parse_int(key, value);
    else if (key == "n_blocks") config.n_blocks = parse_int(key, value);
    else if (key == "ffn_mult") config.ffn_mult = parse_int(key, value);
    else if (key == "max_len") config.max_len = parse_int(key, value);
    else if (key == "variant") config.variant = variant_from_string(value);
    else if (key == "epochs") config.epochs = parse_int(key, value);
    else if (key == "batch_size") config.batch_size = parse_int(key, value);
    else if (key == "lr") config.lr = parse_double(key, value);
    else if (key == "seeds") config.seeds = parse_seeds(key, value);
    else if (key == "prompt") config.prompt = value;
    else if (key == "min_count") config.min_count = parse_int(key, value);
    else if (key == "threads") config.threads = parse_int(key, value);
    else if (key == "lora") config.lora = parse_bool(key, value);
    else if (key == "lora_rank") config.lora_rank = parse_int(key, value);
    else if (key == "lora_alpha") config.lora_alpha = parse_double(key, value);
    else if (key == "lora_dropout") config.lora_dropout = parse_double(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  config.validate();
  return config;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

ModelConfig RunConfig::model_config(Variant run_variant, uint64_t seed, int vocab_size,
                                    int n_items) const {
  ModelConfig model;
  model.d = d;
  model.n_heads = n_heads;
  model.n_blocks = n_blocks;
  model.ffn_mult = ffn_mult;
  model.vocab_size = vocab_size;
  model.max_len = max_len;
  model.n_items = n_items;
  model.seed = seed;
  model.variant = run_variant;
  if (lora) {
    model.lora = LoraConfig{lora_rank, lora_alpha, lora_dropout};
  }
  return model;
}

void RunConfig::validate() const {
  if (d < 1 || n_heads < 1 || n_blocks < 1 || ffn_mult < 1 || max_len < 1) {
    throw ConfigError("config: model sizes must be >= 1");
  }
  if (d % n_heads != 0) {
    throw ConfigError("config: d must be divisible by n_heads");
  }
  if (epochs < 1 || batch_size < 1) {
    throw ConfigError("config: epochs and batch_size must be >= 1");
  }
  if (!(lr > 0.0) && lr != 0.0) {
    throw ConfigError("config: lr must be >= 0");
  }
  if (min_count < 1) throw ConfigError("config: min_count must be >= 1");
  if (threads < 0) throw ConfigError("config: threads must be >= 0");
  if (lora) {
    if (lora_rank < 1) throw ConfigError("config: lora_rank must be >= 1");
    if (lora_rank > d) throw ConfigError("config: lora_rank must not exceed d");
    if (lora_dropout < 0.0 || lora_dropout >= 1.0) {
      throw ConfigError("config: lora_dropout must be in [0, 1)");
    }
  }
}

}  // namespace iamrec
