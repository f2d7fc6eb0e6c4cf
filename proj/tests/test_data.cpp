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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iamrec/common.hpp"
#include "iamrec/data.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>
#include <set>

using namespace iamrec;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path((std::filesystem::temp_directory_path() / name).string()) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

std::multiset<std::pair<std::string, std::string>> pairs(
    const std::vector<Interaction>& rows) {
  std::multiset<std::pair<std::string, std::string>> out;
  for (const Interaction& row : rows) out.emplace(row.user, row.item);
  return out;
}

}  // namespace

TEST_CASE("ingest reads well-formed rows") {
  TempFile titles("t_ok.tsv", "i1\tRed Mug\ni2\tBlue Pen\n");
  TempFile inter("i_ok.tsv", "u1\ti1\t10\nu1\ti2\t11\nu2\ti1\t12\n");
  const IngestResult result = ingest(inter.path, titles.path);
  CHECK(result.interactions.size() == 3);
  CHECK(result.catalog.size() == 2);
  CHECK(result.catalog.titles[0] == "Red Mug");
  CHECK(result.stats.malformed == 0);
  CHECK(result.stats.duplicates == 0);
}

TEST_CASE("ingest deduplicates identical rows and counts malformed lines") {
  TempFile titles("t_dup.tsv", "i1\tMug\n");
  TempFile inter("i_dup.tsv",
                 "u1\ti1\t10\n"
                 "u1\ti1\t10\n"        // duplicate
                 "u1\ti1\n"            // missing field
                 "u1\ti1\tnotanint\n"  // bad timestamp
                 "u1\tunknown\t11\n"   // item not in catalog
                 "u1\ti1\t12\n");
  const IngestResult result = ingest(inter.path, titles.path);
  CHECK(result.interactions.size() == 2);
  CHECK(result.stats.duplicates == 1);
  CHECK(result.stats.malformed == 3);
}

TEST_CASE("ingest fails on unreadable files and empty data") {
  TempFile titles("t_e.tsv", "i1\tMug\n");
  CHECK_THROWS_AS(ingest("/nonexistent/interactions.tsv", titles.path), DataError);
  TempFile empty("i_e.tsv", "garbage line\n");
  CHECK_THROWS_AS(ingest(empty.path, titles.path), DataError);
}

TEST_CASE("five_core_filter is the identity when all counts are high") {
  std::vector<Interaction> rows;
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < 5; ++i) {
      rows.push_back({"u" + std::to_string(u), "i" + std::to_string(i),
                      static_cast<int64_t>(u * 10 + i)});
    }
  }
  const auto filtered = five_core_filter(rows);
  CHECK(pairs(filtered) == pairs(rows));
}

TEST_CASE("five_core_filter cascades removals to the fixpoint") {
  // u0 interacts 5 times, but one of its items is rare; removing the item
  // drops u0 to 4 interactions, which removes u0 entirely on the next pass.
  std::vector<Interaction> rows;
  int64_t ts = 0;
  for (int k = 0; k < 4; ++k) rows.push_back({"u0", "common", ts++});
  rows.push_back({"u0", "rare", ts++});
  for (int u = 1; u <= 5; ++u) {
    for (int k = 0; k < 5; ++k) {
      rows.push_back({"u" + std::to_string(u), "common", ts++});
    }
  }
  const auto filtered = five_core_filter(rows);
  for (const Interaction& row : filtered) {
    CHECK(row.user != "u0");
    CHECK(row.item != "rare");
  }
  CHECK(filtered.size() == 25);
  CHECK(pairs(filtered) == pairs(oracles::five_core_reference(rows)));
}

TEST_CASE("five_core_filter may legally empty the table") {
  std::vector<Interaction> rows = {{"u1", "i1", 1}, {"u2", "i2", 2}};
  CHECK(five_core_filter(rows).empty());
}

TEST_CASE("five_core_filter matches the brute-force oracle on random tables") {
  Rng rng(2025);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Interaction> rows;
    const int n = 1 + rng.uniform_int(20);
    for (int k = 0; k < n; ++k) {
      rows.push_back({"u" + std::to_string(rng.uniform_int(4)),
                      "i" + std::to_string(rng.uniform_int(4)),
                      static_cast<int64_t>(k)});
    }
    const auto got = five_core_filter(rows);
    const auto expected = oracles::five_core_reference(rows);
    CHECK(pairs(got) == pairs(expected));

    // post-filter recount: every remaining user and item has >= 5 rows
    std::map<std::string, int> users, items;
    for (const Interaction& row : got) {
      ++users[row.user];
      ++items[row.item];
    }
    for (const auto& [user, count] : users) CHECK(count >= 5);
    for (const auto& [item, count] : items) CHECK(count >= 5);
  }
}

namespace {

Catalog catalog3() {
  Catalog catalog;
  for (int i = 0; i < 3; ++i) {
    catalog.item_ids.push_back("i" + std::to_string(i));
    catalog.titles.push_back("title " + std::to_string(i));
    catalog.index.emplace(catalog.item_ids.back(), i);
  }
  return catalog;
}

}  // namespace

TEST_CASE("build_sequences orders by timestamp") {
  const Catalog catalog = catalog3();
  const std::vector<Interaction> rows = {
      {"u", "i0", 3}, {"u", "i1", 1}, {"u", "i2", 2}};
  const auto sequences = build_sequences(rows, catalog);
  REQUIRE(sequences.size() == 1);
  CHECK(sequences[0].items == std::vector<int>{1, 2, 0});
  CHECK(sequences[0].last_timestamp == 3);
}

TEST_CASE("equal timestamps break ties by item id") {
  const Catalog catalog = catalog3();
  const std::vector<Interaction> rows = {
      {"u", "i2", 5}, {"u", "i0", 5}, {"u", "i1", 5}};
  const auto sequences = build_sequences(rows, catalog);
  CHECK(sequences[0].items == std::vector<int>{0, 1, 2});
}

TEST_CASE("build_sequences matches a comparison-sort oracle on shuffles") {
  const Catalog catalog = catalog3();
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Interaction> rows;
    const int n = 2 + rng.uniform_int(10);
    for (int k = 0; k < n; ++k) {
      rows.push_back({"u", catalog.item_ids[static_cast<size_t>(rng.uniform_int(3))],
                      static_cast<int64_t>(rng.uniform_int(5))});
    }
    const auto sequences = build_sequences(rows, catalog);

    std::vector<std::pair<int64_t, std::string>> expected;
    for (const Interaction& row : rows) expected.emplace_back(row.timestamp, row.item);
    std::sort(expected.begin(), expected.end());
    REQUIRE(sequences[0].items.size() == expected.size());
    for (size_t k = 0; k < expected.size(); ++k) {
      CHECK(sequences[0].items[k] == catalog.index.at(expected[k].second));
    }
  }
}

namespace {

std::vector<UserSequence> uniform_users(int n_users) {
  std::vector<UserSequence> users;
  for (int u = 0; u < n_users; ++u) {
    UserSequence seq;
    seq.user = "u" + std::to_string(1000 + u);
    seq.items = {0, 1, 2};
    seq.last_timestamp = 100 + u;
    users.push_back(seq);
  }
  return users;
}

}  // namespace

TEST_CASE("chronological_split divides 10 users 8/1/1") {
  const DatasetSplits splits = chronological_split(uniform_users(10));
  CHECK(splits.train.size() == 8);
  CHECK(splits.validation.size() == 1);
  CHECK(splits.test.size() == 1);
}

TEST_CASE("chronological_split floors 25 users to 21/2/2") {
  const DatasetSplits splits = chronological_split(uniform_users(25));
  CHECK(splits.train.size() == 21);
  CHECK(splits.validation.size() == 2);
  CHECK(splits.test.size() == 2);
}

TEST_CASE("chronological_split rejects fewer than three usable users") {
  CHECK_THROWS_AS(chronological_split(uniform_users(2)), DataError);
}

TEST_CASE("split labels equal each user's chronologically last item") {
  Rng rng(8);
  std::vector<UserSequence> users;
  std::map<std::string, int> expected_label;
  for (int u = 0; u < 30; ++u) {
    UserSequence seq;
    seq.user = "u" + std::to_string(u);
    const int len = 2 + rng.uniform_int(6);
    for (int k = 0; k < len; ++k) seq.items.push_back(rng.uniform_int(9));
    seq.last_timestamp = rng.uniform_int(1000);
    expected_label[seq.user] = seq.items.back();
    users.push_back(seq);
  }
  const DatasetSplits splits = chronological_split(users);
  std::set<std::string> seen;
  int64_t max_train_ts = -1, min_test_ts = 1 << 20;
  std::map<std::string, int64_t> last_ts;
  for (const UserSequence& seq : users) last_ts[seq.user] = seq.last_timestamp;
  for (const auto* split : {&splits.train, &splits.validation, &splits.test}) {
    for (const Example& example : *split) {
      CHECK(example.label == expected_label[example.user]);
      CHECK(example.history.size() + 1 ==
            static_cast<size_t>(std::find_if(users.begin(), users.end(),
                                             [&](const UserSequence& s) {
                                               return s.user == example.user;
                                             })
                                    ->items.size()));
      CHECK(seen.insert(example.user).second);  // disjoint users
    }
  }
  CHECK(seen.size() == users.size());  // exhaustive
  for (const Example& example : splits.train) {
    max_train_ts = std::max(max_train_ts, last_ts[example.user]);
  }
  for (const Example& example : splits.test) {
    min_test_ts = std::min(min_test_ts, last_ts[example.user]);
  }
  CHECK(max_train_ts <= min_test_ts);  // train users precede test users
}

TEST_CASE("synth_generate stays inside one cluster when stay_prob is 1") {
  SynthConfig config;
  config.n_items = 20;
  config.n_users = 30;
  config.n_clusters = 4;
  config.stay_prob = 1.0;
  config.min_len = 3;
  config.max_len = 6;
  const SynthResult result = synth_generate(config);
  std::map<std::string, std::set<int>> clusters_per_user;
  for (const Interaction& row : result.interactions) {
    const int item = result.catalog.index.at(row.item);
    clusters_per_user[row.user].insert(result.cluster_of[static_cast<size_t>(item)]);
  }
  for (const auto& [user, clusters] : clusters_per_user) {
    CHECK(clusters.size() == 1);
  }
}

TEST_CASE("synth_generate never repeats a cluster when stay_prob is 0") {
  SynthConfig config;
  config.n_items = 20;
  config.n_users = 30;
  config.n_clusters = 4;
  config.stay_prob = 0.0;
  config.min_len = 4;
  config.max_len = 6;
  const SynthResult result = synth_generate(config);
  std::map<std::string, std::vector<int>> walk;
  for (const Interaction& row : result.interactions) {
    walk[row.user].push_back(
        result.cluster_of[static_cast<size_t>(result.catalog.index.at(row.item))]);
  }
  for (const auto& [user, clusters] : walk) {
    for (size_t k = 1; k < clusters.size(); ++k) {
      CHECK(clusters[k] != clusters[k - 1]);
    }
  }
}

TEST_CASE("empirical stay frequency approaches stay_prob") {
  SynthConfig config;
  config.n_items = 50;
  config.n_users = 2500;  // ~10k transitions
  config.n_clusters = 5;
  config.stay_prob = 0.7;
  config.min_len = 5;
  config.max_len = 5;
  config.seed = 424242;
  const SynthResult result = synth_generate(config);
  std::map<std::string, std::vector<int>> walk;
  for (const Interaction& row : result.interactions) {
    walk[row.user].push_back(
        result.cluster_of[static_cast<size_t>(result.catalog.index.at(row.item))]);
  }
  int64_t stays = 0, steps = 0;
  for (const auto& [user, clusters] : walk) {
    for (size_t k = 1; k < clusters.size(); ++k) {
      ++steps;
      if (clusters[k] == clusters[k - 1]) ++stays;
    }
  }
  REQUIRE(steps >= 10000);
  const double frequency = static_cast<double>(stays) / static_cast<double>(steps);
  CHECK(frequency == doctest::Approx(0.7).epsilon(0.03));
  CHECK(std::abs(frequency - 0.7) < 0.02);
}

TEST_CASE("synth_generate validates its arguments") {
  SynthConfig bad;
  bad.n_items = 10;
  bad.n_clusters = 3;  // not divisible
  CHECK_THROWS_AS(synth_generate(bad), ConfigError);
  SynthConfig bad_prob;
  bad_prob.stay_prob = 1.5;
  CHECK_THROWS_AS(synth_generate(bad_prob), ConfigError);
}

TEST_CASE("synthetic titles are unique word pairs with no shared words") {
  SynthConfig config;
  config.n_items = 60;
  config.n_users = 5;
  config.n_clusters = 6;
  const SynthResult result = synth_generate(config);
  std::set<std::string> words;
  for (const std::string& title : result.catalog.titles) {
    const size_t space = title.find(' ');
    REQUIRE(space != std::string::npos);
    // every word appears in exactly one title: no lexical cluster signal
    CHECK(words.insert(title.substr(0, space)).second);
    CHECK(words.insert(title.substr(space + 1)).second);
  }
  CHECK(words.size() == 120);
}

TEST_CASE("synth_generate is deterministic per seed and timestamps increase") {
  SynthConfig config;
  config.n_items = 20;
  config.n_users = 10;
  config.n_clusters = 4;
  const SynthResult a = synth_generate(config);
  const SynthResult b = synth_generate(config);
  CHECK(a.interactions == b.interactions);
  for (size_t k = 1; k < a.interactions.size(); ++k) {
    CHECK(a.interactions[k].timestamp == a.interactions[k - 1].timestamp + 1);
  }
  config.seed = 2;
  const SynthResult c = synth_generate(config);
  CHECK(a.interactions != c.interactions);
}

TEST_CASE("written files round-trip through ingest") {
  SynthConfig config;
  config.n_items = 12;
  config.n_users = 20;
  config.n_clusters = 3;
  const SynthResult result = synth_generate(config);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string inter_path = (dir / "rt_interactions.tsv").string();
  const std::string titles_path = (dir / "rt_titles.tsv").string();
  write_interactions(inter_path, result.interactions);
  write_titles(titles_path, result.catalog);

  const IngestResult loaded = ingest(inter_path, titles_path);
  CHECK(loaded.interactions == result.interactions);
  CHECK(loaded.catalog.item_ids == result.catalog.item_ids);
  CHECK(loaded.catalog.titles == result.catalog.titles);
  CHECK(loaded.stats.malformed == 0);
  std::filesystem::remove(inter_path);
  std::filesystem::remove(titles_path);
}
