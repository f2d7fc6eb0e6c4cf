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

#include "iamrec/data.hpp"

#include "iamrec/common.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace iamrec {

namespace {

bool parse_int64(std::string_view text, int64_t& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

IngestResult ingest(const std::string& interactions_file,
                    const std::string& titles_file) {
  IngestResult result;

  std::ifstream titles_in(titles_file, std::ios::binary);
  if (!titles_in) throw DataError("cannot open titles file: " + titles_file);
  std::string line;
  while (std::getline(titles_in, line)) {
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty()) {
      ++result.stats.malformed;
      continue;
    }
    const std::string item_id(fields[0]);
    if (result.catalog.index.contains(item_id)) {
      ++result.stats.malformed;  // duplicate catalog entry, first one wins
      continue;
    }
    result.catalog.index.emplace(item_id, result.catalog.size());
    result.catalog.item_ids.push_back(item_id);
    result.catalog.titles.emplace_back(fields[1]);
  }
  if (result.catalog.size() == 0) {
    throw DataError("titles file has no valid rows: " + titles_file);
  }

  std::ifstream inter_in(interactions_file, std::ios::binary);
  if (!inter_in) throw DataError("cannot open interactions file: " + interactions_file);
  std::set<std::tuple<std::string, std::string, int64_t>> seen;
  while (std::getline(inter_in, line)) {
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    int64_t ts = 0;
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        !parse_int64(fields[2], ts)) {
      ++result.stats.malformed;
      continue;
    }
    const std::string item_id(fields[1]);
    if (!result.catalog.index.contains(item_id)) {
      ++result.stats.malformed;  // interaction with an uncataloged item
      continue;
    }
    if (!seen.emplace(std::string(fields[0]), item_id, ts).second) {
      ++result.stats.duplicates;
      continue;
    }
    result.interactions.push_back(Interaction{std::string(fields[0]), item_id, ts});
  }
  if (result.interactions.empty()) {
    throw DataError("interactions file has no valid rows: " + interactions_file);
  }
  return result;
}

std::vector<Interaction> five_core_filter(std::vector<Interaction> interactions) {
  if (interactions.empty()) throw DataError("five_core_filter: no interactions");
  bool changed = true;
  while (changed && !interactions.empty()) {
    std::unordered_map<std::string, int> user_count, item_count;
    for (const Interaction& row : interactions) {
      ++user_count[row.user];
      ++item_count[row.item];
    }
    std::vector<Interaction> kept;
    kept.reserve(interactions.size());
    for (Interaction& row : interactions) {
      if (user_count[row.user] >= 5 && item_count[row.item] >= 5) {
        kept.push_back(std::move(row));
      }
    }
    changed = kept.size() != interactions.size();
    interactions = std::move(kept);
  }
  return interactions;
}

std::vector<UserSequence> build_sequences(const std::vector<Interaction>& interactions,
                                          const Catalog& catalog) {
  std::map<std::string, std::vector<std::pair<int64_t, std::string>>> by_user;
  for (const Interaction& row : interactions) {
    by_user[row.user].emplace_back(row.timestamp, row.item);
  }
  std::vector<UserSequence> sequences;
  sequences.reserve(by_user.size());
  for (auto& [user, rows] : by_user) {
    std::sort(rows.begin(), rows.end());
    UserSequence seq;
    seq.user = user;
    seq.items.reserve(rows.size());
    for (const auto& [ts, item] : rows) {
      const auto it = catalog.index.find(item);
      if (it == catalog.index.end()) {
        throw DataError("item missing from catalog: " + item);
      }
      seq.items.push_back(it->second);
    }
    seq.last_timestamp = rows.back().first;
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

DatasetSplits chronological_split(const std::vector<UserSequence>& sequences) {
  std::vector<const UserSequence*> usable;
  for (const UserSequence& seq : sequences) {
    if (seq.items.size() >= 2) usable.push_back(&seq);
  }
  if (usable.size() < 3) {
    throw DataError("chronological_split needs at least 3 users with 2+ items, got " +
                    std::to_string(usable.size()));
  }
  std::sort(usable.begin(), usable.end(),
            [](const UserSequence* a, const UserSequence* b) {
              if (a->last_timestamp != b->last_timestamp) {
                return a->last_timestamp < b->last_timestamp;
              }
              return a->user < b->user;
            });

  const int n = static_cast<int>(usable.size());
  const int n_validation = n / 10;
  const int n_test = n / 10;
  const int n_train = n - n_validation - n_test;

  DatasetSplits splits;
  for (int i = 0; i < n; ++i) {
    const UserSequence& seq = *usable[static_cast<size_t>(i)];
    Example example;
    example.user = seq.user;
    example.history.assign(seq.items.begin(), seq.items.end() - 1);
    example.label = seq.items.back();
    if (i < n_train) {
      splits.train.push_back(std::move(example));
    } else if (i < n_train + n_validation) {
      splits.validation.push_back(std::move(example));
    } else {
      splits.test.push_back(std::move(example));
    }
  }
  return splits;
}

namespace {

// Unique pronounceable pseudo-word for an index; 80 syllables give plenty of
// headroom before any collision.
std::string pseudo_word(int index) {
  static const char* consonants = "bdfghjklmnprstvz";
  static const char* vowels = "aeiou";
  std::string word;
  int value = index;
  for (int s = 0; s < 3; ++s) {
    const int syllable = value % 80;
    value /= 80;
    word.push_back(consonants[syllable / 5]);
    word.push_back(vowels[syllable % 5]);
  }
  return word;
}

std::string padded(const char* prefix, int value, int width) {
  std::string digits = std::to_string(value);
  std::string out(prefix);
  out.append(static_cast<size_t>(width) - std::min(digits.size(), static_cast<size_t>(width)), '0');
  out += digits;
  return out;
}

}  // namespace

SynthResult synth_generate(const SynthConfig& config) {
  if (config.n_items < 1 || config.n_users < 1 || config.n_clusters < 1) {
    throw ConfigError("synth_generate: sizes must be >= 1");
  }
  if (config.n_items % config.n_clusters != 0) {
    throw ConfigError("synth_generate: n_items must be divisible by n_clusters");
  }
  if (config.stay_prob < 0.0 || config.stay_prob > 1.0) {
    throw ConfigError("synth_generate: stay_prob must be in [0, 1]");
  }
  if (config.min_len < 1 || config.min_len > config.max_len) {
    throw ConfigError("synth_generate: need 1 <= min_len <= max_len");
  }

  SynthResult result;
  const int cluster_size = config.n_items / config.n_clusters;
  result.cluster_of.resize(static_cast<size_t>(config.n_items));
  for (int i = 0; i < config.n_items; ++i) {
    result.cluster_of[static_cast<size_t>(i)] = i / cluster_size;
    const std::string id = padded("item_", i, 5);
    result.catalog.index.emplace(id, i);
    result.catalog.item_ids.push_back(id);
    result.catalog.titles.push_back(pseudo_word(2 * i) + " " + pseudo_word(2 * i + 1));
  }

  Rng rng(config.seed);
  int64_t ts = 1;
  for (int u = 0; u < config.n_users; ++u) {
    const std::string user = padded("user_", u, 6);
    const int len = config.min_len + rng.uniform_int(config.max_len - config.min_len + 1);
    int current = rng.uniform_int(config.n_items);
    result.interactions.push_back(
        Interaction{user, result.catalog.item_ids[static_cast<size_t>(current)], ts++});
    for (int step = 1; step < len; ++step) {
      const int cluster = result.cluster_of[static_cast<size_t>(current)];
      const bool stay = config.n_clusters == 1 || rng.uniform() < config.stay_prob;
      int next_cluster = cluster;
      if (!stay) {
        next_cluster = rng.uniform_int(config.n_clusters - 1);
        if (next_cluster >= cluster) ++next_cluster;
      }
      current = next_cluster * cluster_size + rng.uniform_int(cluster_size);
      result.interactions.push_back(
          Interaction{user, result.catalog.item_ids[static_cast<size_t>(current)], ts++});
    }
  }
  return result;
}

void write_interactions(const std::string& path,
                        const std::vector<Interaction>& interactions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  for (const Interaction& row : interactions) {
    out << row.user << '\t' << row.item << '\t' << row.timestamp << '\n';
  }
}

void write_titles(const std::string& path, const Catalog& catalog) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  for (int i = 0; i < catalog.size(); ++i) {
    out << catalog.item_ids[static_cast<size_t>(i)] << '\t'
        << catalog.titles[static_cast<size_t>(i)] << '\n';
  }
}

}  // namespace iamrec
