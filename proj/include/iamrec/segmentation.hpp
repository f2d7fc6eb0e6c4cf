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

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iamrec {

/// Lowercases, maps punctuation to separators, and splits on whitespace.
/// Bytes >= 0x80 are kept verbatim so UTF-8 titles survive untouched.
std::vector<std::string> clean_tokens(std::string_view text);

/// Whole-word vocabulary with dense ids. Ids 0..2 are reserved specials;
/// content tokens follow ordered by descending count, ties alphabetical.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kSuffixId = 2;
  static constexpr int kNumSpecials = 3;

  Vocabulary();
  /// Rebuilds from a full token list (id order), e.g. a checkpoint header.
  explicit Vocabulary(std::vector<std::string> tokens_in_id_order);

  int size() const { return static_cast<int>(tokens_.size()); }
  /// Dense id for a cleaned token; kUnkId when absent.
  int id_of(std::string_view token) const;
  const std::string& token(int id) const { return tokens_[static_cast<size_t>(id)]; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// One "token<TAB>id" line per entry, sorted by token, UTF-8.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Counts cleaned tokens across the corpus; tokens seen at least min_count
/// times get dense ids after the specials.
Vocabulary build_vocab(const std::vector<std::string>& corpus, int min_count);

/// Per-token segment tag: task-description text or the k-th item of the
/// instruction.
struct SegmentLabel {
  int item = -1;  // -1 marks task-description tokens

  bool is_item() const { return item >= 0; }
  static SegmentLabel description() { return SegmentLabel{}; }
  static SegmentLabel item_token(int position) { return SegmentLabel{position}; }
  bool operator==(const SegmentLabel&) const = default;
};

struct SegmentedSequence {
  std::vector<int> token_ids;
  std::vector<SegmentLabel> labels;

  int length() const { return static_cast<int>(token_ids.size()); }
};

/// Half-open token range [begin, end) occupied by one item.
struct ItemSpan {
  int item = 0;
  int begin = 0;
  int end = 0;

  bool operator==(const ItemSpan&) const = default;
};

/// Builds [prefix tokens | item 0 tokens | ... | item t-1 tokens | suffix
/// marker]. The prefix and the suffix marker are description-class; titles
/// are labeled with their item position. When the sequence would exceed
/// max_len, whole items are dropped oldest-first (the prefix is protected)
/// and the survivors are relabeled from zero.
SegmentedSequence tokenize_instruction(const std::string& prefix,
                                       const std::vector<std::string>& titles,
                                       const Vocabulary& vocab, int max_len);

/// One span per item, ordered and contiguous; throws on label sequences that
/// violate the contiguity invariant.
std::vector<ItemSpan> item_spans(const SegmentedSequence& seq);

}  // namespace iamrec
