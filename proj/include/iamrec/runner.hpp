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

#include "iamrec/data.hpp"
#include "iamrec/eval.hpp"
#include "iamrec/run_config.hpp"
#include "iamrec/training.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iamrec {

/// Everything the training pipeline derives from the raw files: catalog,
/// vocabulary (titles plus prompt words), and the chronological splits.
struct PreparedData {
  Catalog catalog;
  Vocabulary vocab;
  DatasetSplits splits;
  IngestStats stats;
  int interactions_after_filter = 0;
  int users_after_filter = 0;
};

/// ingest -> five-core filter -> per-user sequences -> 8:1:1 split -> vocab.
PreparedData prepare_data(const RunConfig& config);

struct RunOutcome {
  Variant variant = Variant::kIam;
  uint64_t seed = 0;
  bool ok = false;
  std::string error;
  TrainResult train_result;
  RankingReport test_report;
};

/// Trains one (variant, seed) run and evaluates it on the test split.
RunOutcome run_one(const RunConfig& config, const PreparedData& data, Variant variant,
                   uint64_t seed);

/// Runs variants x seeds; failures are recorded per run and do not stop the
/// sweep. `workers` > 1 schedules whole runs in parallel (each run itself is
/// deterministic and single-threaded unless config.threads says otherwise).
std::vector<RunOutcome> run_sweep(const RunConfig& config, const PreparedData& data,
                                  const std::vector<Variant>& variants, int workers);

struct VariantSummary {
  Variant variant = Variant::kIam;
  int n_runs = 0;
  double prec5 = 0.0, ndcg5 = 0.0, prec10 = 0.0, ndcg10 = 0.0;  // means over seeds
};

std::vector<VariantSummary> summarize(const std::vector<RunOutcome>& runs);

/// Per-run rows followed by per-variant means, columns ordered Prec@5,
/// NDCG@5, Prec@10, NDCG@10.
std::string ablation_table(const std::vector<RunOutcome>& runs);

/// Artifact names under out_dir for one run.
std::string checkpoint_filename(Variant variant, uint64_t seed);
std::string train_log_filename(Variant variant, uint64_t seed);
std::string report_filename(Variant variant, uint64_t seed);

}  // namespace iamrec
