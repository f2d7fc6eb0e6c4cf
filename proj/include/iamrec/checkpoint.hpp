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
#include "iamrec/segmentation.hpp"

#include <string>

namespace iamrec {

struct Checkpoint {
  ModelParameters params;
  ModelConfig config;
  Vocabulary vocab;
  std::string prompt;
};

/// Checkpoint layout: a one-line JSON header (config, vocabulary, prompt and
/// a named-tensor directory with shapes and byte offsets) terminated by '\n',
/// followed by the little-endian float64 payload. Round trips are bit-exact.
void save_checkpoint(const std::string& path, const ModelParameters& params,
                     const ModelConfig& config, const Vocabulary& vocab,
                     const std::string& prompt);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace iamrec
