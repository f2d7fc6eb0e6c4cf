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

#include "iamrec/segmentation.hpp"

#include "iamrec/common.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace iamrec {

namespace {

const char* kSpecialNames[Vocabulary::kNumSpecials] = {"<pad>", "<unk>", "<suffix>"};

bool is_word_byte(unsigned char c) {
  if (c >= 0x80) return true;  // keep multi-byte UTF-8 sequences intact
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

}  // namespace

std::vector<std::string> clean_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
      current.push_back(static_cast<char>(c));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* name : kSpecialNames) {
    ids_.emplace(name, static_cast<int>(tokens_.size()));
    tokens_.emplace_back(name);
  }
}

Vocabulary::Vocabulary(std::vector<std::string> tokens_in_id_order)
    : tokens_(std::move(tokens_in_id_order)) {
  if (tokens_.size() < kNumSpecials) {
    throw DataError("vocabulary token list is missing the reserved specials");
  }
  for (int i = 0; i < kNumSpecials; ++i) {
    if (tokens_[static_cast<size_t>(i)] != kSpecialNames[i]) {
      throw DataError("vocabulary token list has unexpected special token at id " +
                      std::to_string(i));
    }
  }
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate token in vocabulary: " + tokens_[i]);
    }
  }
}

int Vocabulary::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open vocabulary file for writing: " + path);
  std::vector<std::pair<std::string, int>> rows;
  rows.reserve(tokens_.size());
  for (size_t i = 0; i < tokens_.size(); ++i) {
    rows.emplace_back(tokens_[i], static_cast<int>(i));
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& [token, id] : rows) {
    out << token << '\t' << id << '\n';
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary file: " + path);
  std::map<int, std::string> by_id;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("malformed vocabulary line: " + line);
    const int id = std::stoi(line.substr(tab + 1));
    if (!by_id.emplace(id, line.substr(0, tab)).second) {
      throw DataError("duplicate vocabulary id " + std::to_string(id));
    }
  }
  std::vector<std::string> tokens;
  tokens.reserve(by_id.size());
  for (auto& [id, token] : by_id) {
    if (id != static_cast<int>(tokens.size())) {
      throw DataError("vocabulary ids are not dense at id " + std::to_string(id));
    }
    tokens.push_back(std::move(token));
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, int min_count) {
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");
  std::unordered_map<std::string, int64_t> counts;
  for (const std::string& text : corpus) {
    for (std::string& token : clean_tokens(text)) {
      ++counts[std::move(token)];
    }
  }
  std::vector<std::pair<int64_t, std::string>> kept;
  kept.reserve(counts.size());
  for (auto& [token, count] : counts) {
    if (count >= min_count) kept.emplace_back(count, token);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  Vocabulary vocab;
  std::vector<std::string> tokens = vocab.tokens();
  tokens.reserve(tokens.size() + kept.size());
  for (auto& [count, token] : kept) {
    tokens.push_back(std::move(token));
  }
  return Vocabulary(std::move(tokens));
}

SegmentedSequence tokenize_instruction(const std::string& prefix,
                                       const std::vector<std::string>& titles,
                                       const Vocabulary& vocab, int max_len) {
  if (titles.empty()) throw DataError("tokenize_instruction: no titles given");

  std::vector<int> prefix_ids;
  for (const std::string& token : clean_tokens(prefix)) {
    prefix_ids.push_back(vocab.id_of(token));
  }

  std::vector<std::vector<int>> title_ids(titles.size());
  for (size_t k = 0; k < titles.size(); ++k) {
    for (const std::string& token : clean_tokens(titles[k])) {
      title_ids[k].push_back(vocab.id_of(token));
    }
    if (title_ids[k].empty()) title_ids[k].push_back(Vocabulary::kUnkId);
  }

  // Drop whole items oldest-first until the instruction fits. The task
  // description and the suffix marker are never truncated.
  size_t first_kept = 0;
  auto total_len = [&]() {
    size_t len = prefix_ids.size() + 1;  // + suffix marker
    for (size_t k = first_kept; k < title_ids.size(); ++k) len += title_ids[k].size();
    return len;
  };
  while (total_len() > static_cast<size_t>(max_len) && first_kept + 1 < title_ids.size()) {
    ++first_kept;
  }
  if (total_len() > static_cast<size_t>(max_len)) {
    throw DataError("instruction exceeds max_len " + std::to_string(max_len) +
                    " even with a single item");
  }

  SegmentedSequence seq;
  seq.token_ids.reserve(total_len());
  seq.labels.reserve(total_len());
  for (int id : prefix_ids) {
    seq.token_ids.push_back(id);
    seq.labels.push_back(SegmentLabel::description());
  }
  for (size_t k = first_kept; k < title_ids.size(); ++k) {
    const int position = static_cast<int>(k - first_kept);
    for (int id : title_ids[k]) {
      seq.token_ids.push_back(id);
      seq.labels.push_back(SegmentLabel::item_token(position));
    }
  }
  seq.token_ids.push_back(Vocabulary::kSuffixId);
  seq.labels.push_back(SegmentLabel::description());
  return seq;
}

std::vector<ItemSpan> item_spans(const SegmentedSequence& seq) {
  std::vector<ItemSpan> spans;
  for (int i = 0; i < seq.length(); ++i) {
    const SegmentLabel& label = seq.labels[static_cast<size_t>(i)];
    if (!label.is_item()) continue;
    if (!spans.empty() && spans.back().item == label.item) {
      if (spans.back().end != i) {
        throw DataError("item " + std::to_string(label.item) +
                        " labels are not contiguous");
      }
      spans.back().end = i + 1;
      continue;
    }
    const int expected = spans.empty() ? 0 : spans.back().item + 1;
    if (label.item != expected) {
      throw DataError("item positions out of order at token " + std::to_string(i));
    }
    spans.push_back(ItemSpan{label.item, i, i + 1});
  }
  return spans;
}

}  // namespace iamrec
