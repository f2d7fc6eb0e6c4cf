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

#include "iamrec/segmentation.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace iamrec {

/// Square boolean matrix of permitted query->key pairs. Row i indexes the
/// query position, column j the key position.
class AttentionMask {
 public:
  explicit AttentionMask(int size);

  int size() const { return size_; }
  bool allowed(int i, int j) const {
    return allowed_[static_cast<size_t>(i) * static_cast<size_t>(size_) +
                    static_cast<size_t>(j)] != 0;
  }
  void set(int i, int j, bool value) {
    allowed_[static_cast<size_t>(i) * static_cast<size_t>(size_) +
             static_cast<size_t>(j)] = value ? 1 : 0;
  }
  bool row_all_masked(int i) const;

  /// One row per line, '#' for allowed and '.' for blocked.
  std::string to_text() const;

  bool operator==(const AttentionMask&) const = default;

 private:
  int size_ = 0;
  std::vector<uint8_t> allowed_;
};

enum class Variant { kIam, kIntraOnly, kInterOnly, kReversed, kStandard };

inline constexpr std::array<Variant, 5> kAllVariants = {
    Variant::kStandard, Variant::kIntraOnly, Variant::kInterOnly,
    Variant::kReversed, Variant::kIam};

std::string to_string(Variant variant);
Variant variant_from_string(std::string_view name);

/// Plain autoregressive mask: allowed[i][j] = (i >= j).
AttentionMask causal_mask(int len);

/// Description rows stay causal; item rows see only tokens of the same item,
/// bidirectionally and including themselves.
AttentionMask intra_item_mask(const std::vector<SegmentLabel>& labels);

/// Description rows stay causal; item rows see only tokens of other items,
/// bidirectionally. Rows of a lone item come out fully masked, which the
/// model treats as a zero attention branch.
AttentionMask inter_item_mask(const std::vector<SegmentLabel>& labels);

/// Per-attention-sublayer masks. Every variant yields 2*n_blocks sublayers so
/// depth and parameter count stay comparable across ablations.
std::vector<AttentionMask> mask_schedule(Variant variant,
                                         const std::vector<SegmentLabel>& labels,
                                         int n_blocks);

}  // namespace iamrec
