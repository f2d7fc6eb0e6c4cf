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

#include "iamrec/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace iamrec {

std::string RankingReport::to_json() const {
  nlohmann::json j;
  j["variant"] = variant;
  j["seed"] = seed;
  j["n_examples"] = n_examples;
  j["prec5"] = prec5;
  j["ndcg5"] = ndcg5;
  j["prec10"] = prec10;
  j["ndcg10"] = ndcg10;
  return j.dump();
}

std::string RankingReport::table_header() {
  std::ostringstream out;
  out << std::left;
  out.width(12);
  out << "variant";
  out << "seed    n       Prec@5    NDCG@5    Prec@10   NDCG@10";
  return out.str();
}

std::string RankingReport::to_table_row() const {
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer), "%-12s%-8llu%-8d%-10.4f%-10.4f%-10.4f%-10.4f",
                variant.c_str(), static_cast<unsigned long long>(seed), n_examples,
                prec5, ndcg5, prec10, ndcg10);
  return std::string(buffer);
}

std::vector<int> full_rank(const Vector& scores) {
  std::vector<int> order(static_cast<size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&scores](int a, int b) { return scores(a) > scores(b); });
  return order;
}

double precision_at_k(const std::vector<int>& ranked, int gt, int k) {
  if (k > static_cast<int>(ranked.size())) {
    throw ConfigError("precision_at_k: k exceeds the item count");
  }
  for (int r = 0; r < k; ++r) {
    if (ranked[static_cast<size_t>(r)] == gt) return 1.0;
  }
  return 0.0;
}

double ndcg_at_k(const std::vector<int>& ranked, int gt, int k) {
  if (k > static_cast<int>(ranked.size())) {
    throw ConfigError("ndcg_at_k: k exceeds the item count");
  }
  for (int r = 0; r < k; ++r) {
    if (ranked[static_cast<size_t>(r)] == gt) {
      return 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  return 0.0;
}

RankingReport evaluate_with(const ScoreFn& scorer, const std::vector<Example>& split) {
  if (split.empty()) throw DataError("evaluate: empty split");
  RankingReport report;
  report.n_examples = static_cast<int>(split.size());
  for (const Example& example : split) {
    const Vector scores = scorer(example);
    const std::vector<int> ranked = full_rank(scores);
    report.prec5 += precision_at_k(ranked, example.label, 5);
    report.ndcg5 += ndcg_at_k(ranked, example.label, 5);
    report.prec10 += precision_at_k(ranked, example.label, 10);
    report.ndcg10 += ndcg_at_k(ranked, example.label, 10);
  }
  const double n = static_cast<double>(report.n_examples);
  report.prec5 /= n;
  report.ndcg5 /= n;
  report.prec10 /= n;
  report.ndcg10 /= n;
  return report;
}

RankingReport evaluate(const EvalContext& ctx, const std::vector<Example>& split) {
  RankingReport report = evaluate_with(
      [&ctx](const Example& example) {
        std::vector<std::string> titles;
        titles.reserve(example.history.size());
        for (int item : example.history) {
          titles.push_back(ctx.catalog.titles[static_cast<size_t>(item)]);
        }
        const SegmentedSequence seq =
            tokenize_instruction(ctx.prompt, titles, ctx.vocab, ctx.config.max_len);
        const ForwardTrace trace = model_forward(seq, ctx.params, ctx.config);
        return score_items(trace.hidden, ctx.params);
      },
      split);
  report.variant = to_string(ctx.config.variant);
  report.seed = ctx.config.seed;
  return report;
}

}  // namespace iamrec
