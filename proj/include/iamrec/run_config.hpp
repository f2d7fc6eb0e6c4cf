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

#pragma once

#include "iamrec/model.hpp"

#include <string>
#include <vector>

namespace iamrec {

inline constexpr const char* kDefaultPrompt =
    "Please predict the next item a user would purchase, given the following "
    "purchased items:";

/// Experiment configuration: model hyperparameters plus data paths and the
/// training schedule. Parsed from a flat "key = value" file ('#' comments);
/// unknown keys are rejected by name and every value is type-checked before
/// any work starts.
struct RunConfig {
  std::string interactions;
  std::string titles;
  std::string out_dir = "out";
  int d = 64;
  int n_heads = 4;
  int n_blocks = 2;
  int ffn_mult = 4;
  int max_len = 256;
  Variant variant = Variant::kIam;
  int epochs = 30;
  int batch_size = 64;
  double lr = 0.001;
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string prompt = kDefaultPrompt;
  int min_count = 1;
  int threads = 1;
  bool lora = false;
  int lora_rank = 8;
  double lora_alpha = 16.0;
  double lora_dropout = 0.05;

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_string(const std::string& text);

  /// ModelConfig for one run; vocab_size and n_items come from the data.
  ModelConfig model_config(Variant run_variant, uint64_t seed, int vocab_size,
                           int n_items) const;
  void validate() const;
};

}  // namespace iamrec
