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

#include "iamrec/runner.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <sstream>

namespace iamrec {

PreparedData prepare_data(const RunConfig& config) {
  if (config.interactions.empty() || config.titles.empty()) {
    throw DataError("config must set both 'interactions' and 'titles' paths");
  }
  PreparedData data;
  IngestResult ingested = ingest(config.interactions, config.titles);
  data.catalog = std::move(ingested.catalog);
  data.stats = ingested.stats;

  const std::vector<Interaction> filtered =
      five_core_filter(std::move(ingested.interactions));
  if (filtered.empty()) {
    throw DataError("no interactions survive five-core filtering");
  }
  data.interactions_after_filter = static_cast<int>(filtered.size());

  const std::vector<UserSequence> sequences = build_sequences(filtered, data.catalog);
  data.users_after_filter = static_cast<int>(sequences.size());
  data.splits = chronological_split(sequences);

  std::vector<std::string> corpus = data.catalog.titles;
  corpus.push_back(config.prompt);
  data.vocab = build_vocab(corpus, config.min_count);
  return data;
}

RunOutcome run_one(const RunConfig& config, const PreparedData& data, Variant variant,
                   uint64_t seed) {
  RunOutcome outcome;
  outcome.variant = variant;
  outcome.seed = seed;
  try {
    const ModelConfig model_config =
        config.model_config(variant, seed, data.vocab.size(), data.catalog.size());
    TrainOptions options;
    options.epochs = config.epochs;
    options.batch_size = config.batch_size;
    options.lr = config.lr;
    options.threads = config.threads;
    options.prompt = config.prompt;

    outcome.train_result = train(model_config, options, data.splits, data.catalog,
                                 data.vocab);
    outcome.test_report =
        evaluate(EvalContext{outcome.train_result.params, model_config, data.catalog,
                             data.vocab, config.prompt},
                 data.splits.test);
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.error = e.what();
  }
  return outcome;
}

std::vector<RunOutcome> run_sweep(const RunConfig& config, const PreparedData& data,
                                  const std::vector<Variant>& variants, int workers) {
  struct Job {
    Variant variant;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Variant variant : variants) {
    for (uint64_t seed : config.seeds) {
      jobs.push_back(Job{variant, seed});
    }
  }
  std::vector<RunOutcome> outcomes(jobs.size());
  if (workers <= 1) {
    for (size_t i = 0; i < jobs.size(); ++i) {
      outcomes[i] = run_one(config, data, jobs[i].variant, jobs[i].seed);
    }
    return outcomes;
  }

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      outcomes[i] = run_one(config, data, jobs[i].variant, jobs[i].seed);
    }
  };
  std::vector<std::future<void>> pool;
  const int n_workers = std::min<int>(workers, static_cast<int>(jobs.size()));
  pool.reserve(static_cast<size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) {
    pool.push_back(std::async(std::launch::async, worker));
  }
  for (auto& f : pool) f.get();
  return outcomes;
}

std::vector<VariantSummary> summarize(const std::vector<RunOutcome>& runs) {
  std::vector<VariantSummary> summaries;
  for (const RunOutcome& run : runs) {
    if (!run.ok) continue;
    auto it = std::find_if(summaries.begin(), summaries.end(),
                           [&](const VariantSummary& s) { return s.variant == run.variant; });
    if (it == summaries.end()) {
      summaries.push_back(VariantSummary{run.variant, 0, 0.0, 0.0, 0.0, 0.0});
      it = std::prev(summaries.end());
    }
    it->n_runs += 1;
    it->prec5 += run.test_report.prec5;
    it->ndcg5 += run.test_report.ndcg5;
    it->prec10 += run.test_report.prec10;
    it->ndcg10 += run.test_report.ndcg10;
  }
  for (VariantSummary& s : summaries) {
    if (s.n_runs > 0) {
      s.prec5 /= s.n_runs;
      s.ndcg5 /= s.n_runs;
      s.prec10 /= s.n_runs;
      s.ndcg10 /= s.n_runs;
    }
  }
  return summaries;
}

std::string ablation_table(const std::vector<RunOutcome>& runs) {
  std::ostringstream out;
  out << RankingReport::table_header() << '\n';
  for (const RunOutcome& run : runs) {
    if (run.ok) {
      out << run.test_report.to_table_row() << '\n';
    } else {
      out << to_string(run.variant) << " seed " << run.seed << "  FAILED: " << run.error
          << '\n';
    }
  }
  out << '\n';
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s%-8s%-10s%-10s%-10s%-10s", "mean", "runs",
                "Prec@5", "NDCG@5", "Prec@10", "NDCG@10");
  out << line << '\n';
  for (const VariantSummary& s : summarize(runs)) {
    std::snprintf(line, sizeof(line), "%-12s%-8d%-10.4f%-10.4f%-10.4f%-10.4f",
                  to_string(s.variant).c_str(), s.n_runs, s.prec5, s.ndcg5, s.prec10,
                  s.ndcg10);
    out << line << '\n';
  }
  return out.str();
}

std::string checkpoint_filename(Variant variant, uint64_t seed) {
  return "model_" + to_string(variant) + "_seed" + std::to_string(seed) + ".ckpt";
}

std::string train_log_filename(Variant variant, uint64_t seed) {
  return "train_" + to_string(variant) + "_seed" + std::to_string(seed) + ".tsv";
}

std::string report_filename(Variant variant, uint64_t seed) {
  return "report_" + to_string(variant) + "_seed" + std::to_string(seed) + ".json";
}

}  // namespace iamrec
