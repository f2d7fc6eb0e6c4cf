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

#include "iamrec/common.hpp"
#include "iamrec/data.hpp"
#include "iamrec/model.hpp"
#include "iamrec/segmentation.hpp"

#include <functional>
#include <string>
#include <vector>

namespace iamrec {

struct RankingReport {
  std::string variant;
  uint64_t seed = 0;
  int n_examples = 0;
  double prec5 = 0.0;
  double ndcg5 = 0.0;
  double prec10 = 0.0;
  double ndcg10 = 0.0;

  std::string to_json() const;
  std::string to_table_row() const;
  static std::string table_header();
};

/// Item indices by descending score; equal scores rank the smaller index
/// first so reports are reproducible.
std::vector<int> full_rank(const Vector& scores);

/// 1 when the ground truth sits in the top k of the ranking, else 0.
double precision_at_k(const std::vector<int>& ranked, int gt, int k);

/// 1/log2(rank+1) for the single relevant item when ranked within the top k
/// (ideal DCG is 1), else 0.
double ndcg_at_k(const std::vector<int>& ranked, int gt, int k);

using ScoreFn = std::function<Vector(const Example&)>;

/// Core metric aggregation over a split with an arbitrary scorer; the model
/// path and the test oracles share it.
RankingReport evaluate_with(const ScoreFn& scorer, const std::vector<Example>& split);

struct EvalContext {
  const ModelParameters& params;
  const ModelConfig& config;
  const Catalog& catalog;
  const Vocabulary& vocab;
  std::string prompt;
};

/// Full-ranking evaluation: tokenize each history, run the model, score the
/// whole catalog, and average Prec@{5,10} and NDCG@{5,10}.
RankingReport evaluate(const EvalContext& ctx, const std::vector<Example>& split);

}  // namespace iamrec
