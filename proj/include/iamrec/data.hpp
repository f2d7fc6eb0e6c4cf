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

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace iamrec {

struct Interaction {
  std::string user;
  std::string item;
  int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

/// Dense item index <-> external id plus the title text used as the item's
/// content.
struct Catalog {
  std::vector<std::string> item_ids;  // dense index -> external id
  std::vector<std::string> titles;    // dense index -> title
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(item_ids.size()); }
};

/// One supervised case: the user's history (dense item indices, time order)
/// and the chronologically final item as the label.
struct Example {
  std::string user;
  std::vector<int> history;
  int label = -1;
};

struct DatasetSplits {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;
};

struct IngestStats {
  int malformed = 0;
  int duplicates = 0;
};

struct IngestResult {
  std::vector<Interaction> interactions;
  Catalog catalog;
  IngestStats stats;
};

/// Reads "user<TAB>item<TAB>timestamp" interactions and "item<TAB>title"
/// titles. Malformed lines and rows naming unknown items are counted and
/// skipped; exact (user, item, timestamp) duplicates are removed.
IngestResult ingest(const std::string& interactions_file,
                    const std::string& titles_file);

/// Iteratively removes users and items with fewer than five interactions
/// until the fixpoint. The result may be empty.
std::vector<Interaction> five_core_filter(std::vector<Interaction> interactions);

struct UserSequence {
  std::string user;
  std::vector<int> items;   // dense indices, ascending timestamp
  int64_t last_timestamp = 0;
};

/// Per-user item sequences sorted by timestamp, ties broken by item id.
std::vector<UserSequence> build_sequences(const std::vector<Interaction>& interactions,
                                          const Catalog& catalog);

/// Orders users by final-interaction time and splits 8:1:1 (floor rule,
/// remainder to train). Each user contributes one example with the last item
/// as label; users with fewer than two items cannot form an example and are
/// dropped beforehand.
DatasetSplits chronological_split(const std::vector<UserSequence>& sequences);

struct SynthConfig {
  int n_items = 200;
  int n_users = 2000;
  int n_clusters = 10;
  double stay_prob = 0.9;
  int min_len = 5;
  int max_len = 8;
  uint64_t seed = 1;
};

struct SynthResult {
  std::vector<Interaction> interactions;
  Catalog catalog;
  std::vector<int> cluster_of;  // dense item index -> cluster id
};

/// Markov-walk interaction generator over items partitioned into clusters.
/// Each step stays in the current cluster with probability stay_prob and
/// otherwise jumps to a uniformly random other cluster. Titles are unique
/// two-word strings assigned by item index, so no word is shared between
/// items and the only cluster signal lives in co-occurrence statistics.
SynthResult synth_generate(const SynthConfig& config);

void write_interactions(const std::string& path,
                        const std::vector<Interaction>& interactions);
void write_titles(const std::string& path, const Catalog& catalog);

}  // namespace iamrec
