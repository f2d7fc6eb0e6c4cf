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

#include "iamrec/masks.hpp"

#include "iamrec/common.hpp"

namespace iamrec {

AttentionMask::AttentionMask(int size) : size_(size) {
  if (size < 1) throw ConfigError("attention mask size must be >= 1");
  allowed_.assign(static_cast<size_t>(size) * static_cast<size_t>(size), 0);
}

bool AttentionMask::row_all_masked(int i) const {
  for (int j = 0; j < size_; ++j) {
    if (allowed(i, j)) return false;
  }
  return true;
}

std::string AttentionMask::to_text() const {
  std::string out;
  out.reserve(static_cast<size_t>(size_) * static_cast<size_t>(size_ + 1));
  for (int i = 0; i < size_; ++i) {
    for (int j = 0; j < size_; ++j) {
      out.push_back(allowed(i, j) ? '#' : '.');
    }
    out.push_back('\n');
  }
  return out;
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kIam: return "iam";
    case Variant::kIntraOnly: return "intra_only";
    case Variant::kInterOnly: return "inter_only";
    case Variant::kReversed: return "reversed";
    case Variant::kStandard: return "standard";
  }
  throw ConfigError("unreachable variant");
}

Variant variant_from_string(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected one of iam, intra_only, inter_only, reversed, standard)");
}

AttentionMask causal_mask(int len) {
  AttentionMask mask(len);
  for (int i = 0; i < len; ++i) {
    for (int j = 0; j <= i; ++j) {
      mask.set(i, j, true);
    }
  }
  return mask;
}

AttentionMask intra_item_mask(const std::vector<SegmentLabel>& labels) {
  const int len = static_cast<int>(labels.size());
  AttentionMask mask(len);
  for (int i = 0; i < len; ++i) {
    const SegmentLabel& row = labels[static_cast<size_t>(i)];
    for (int j = 0; j < len; ++j) {
      const SegmentLabel& col = labels[static_cast<size_t>(j)];
      const bool ok = row.is_item() ? (col.is_item() && col.item == row.item)
                                    : (j <= i);
      mask.set(i, j, ok);
    }
  }
  return mask;
}

AttentionMask inter_item_mask(const std::vector<SegmentLabel>& labels) {
  const int len = static_cast<int>(labels.size());
  AttentionMask mask(len);
  for (int i = 0; i < len; ++i) {
    const SegmentLabel& row = labels[static_cast<size_t>(i)];
    for (int j = 0; j < len; ++j) {
      const SegmentLabel& col = labels[static_cast<size_t>(j)];
      const bool ok = row.is_item() ? (col.is_item() && col.item != row.item)
                                    : (j <= i);
      mask.set(i, j, ok);
    }
  }
  return mask;
}

std::vector<AttentionMask> mask_schedule(Variant variant,
                                         const std::vector<SegmentLabel>& labels,
                                         int n_blocks) {
  if (n_blocks < 1) throw ConfigError("mask_schedule: n_blocks must be >= 1");
  const int len = static_cast<int>(labels.size());
  std::vector<AttentionMask> schedule;
  schedule.reserve(static_cast<size_t>(2 * n_blocks));
  switch (variant) {
    case Variant::kIam:
      for (int b = 0; b < n_blocks; ++b) {
        schedule.push_back(intra_item_mask(labels));
        schedule.push_back(inter_item_mask(labels));
      }
      break;
    case Variant::kReversed:
      for (int b = 0; b < n_blocks; ++b) {
        schedule.push_back(inter_item_mask(labels));
        schedule.push_back(intra_item_mask(labels));
      }
      break;
    case Variant::kIntraOnly:
      for (int s = 0; s < 2 * n_blocks; ++s) schedule.push_back(intra_item_mask(labels));
      break;
    case Variant::kInterOnly:
      for (int s = 0; s < 2 * n_blocks; ++s) schedule.push_back(inter_item_mask(labels));
      break;
    case Variant::kStandard:
      for (int s = 0; s < 2 * n_blocks; ++s) schedule.push_back(causal_mask(len));
      break;
  }
  return schedule;
}

}  // namespace iamrec
