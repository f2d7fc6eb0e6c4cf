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

#include "iamrec/checkpoint.hpp"
#include "iamrec/data.hpp"
#include "iamrec/eval.hpp"
#include "iamrec/gradcheck.hpp"
#include "iamrec/masks.hpp"
#include "iamrec/run_config.hpp"
#include "iamrec/runner.hpp"
#include "iamrec/training.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace iamrec;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path.string());
  out << text;
}

int cmd_gen_data(const SynthConfig& synth, const std::string& out_dir) {
  const SynthResult result = synth_generate(synth);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_interactions((dir / "interactions.tsv").string(), result.interactions);
  write_titles((dir / "titles.tsv").string(), result.catalog);

  std::set<std::string> users;
  for (const Interaction& row : result.interactions) users.insert(row.user);
  std::cout << "items         " << result.catalog.size() << "\n"
            << "users         " << users.size() << "\n"
            << "interactions  " << result.interactions.size() << "\n"
            << "avg length    "
            << static_cast<double>(result.interactions.size()) /
                   static_cast<double>(users.size())
            << "\n"
            << "wrote " << (dir / "interactions.tsv").string() << " and "
            << (dir / "titles.tsv").string() << "\n";
  return 0;
}

int cmd_train(const std::string& config_path) {
  const RunConfig config = RunConfig::parse_file(config_path);
  const PreparedData data = prepare_data(config);
  fs::create_directories(config.out_dir);
  const fs::path dir(config.out_dir);

  data.vocab.save((dir / "vocab.tsv").string());
  std::cout << "users " << data.users_after_filter << ", interactions "
            << data.interactions_after_filter << ", items " << data.catalog.size()
            << ", vocab " << data.vocab.size() << "\n";

  for (uint64_t seed : config.seeds) {
    const ModelConfig model_config =
        config.model_config(config.variant, seed, data.vocab.size(), data.catalog.size());
    TrainOptions options;
    options.epochs = config.epochs;
    options.batch_size = config.batch_size;
    options.lr = config.lr;
    options.threads = config.threads;
    options.prompt = config.prompt;
    const TrainResult result =
        train(model_config, options, data.splits, data.catalog, data.vocab);

    const fs::path ckpt = dir / checkpoint_filename(config.variant, seed);
    save_checkpoint(ckpt.string(), result.params, model_config, data.vocab,
                    config.prompt);
    write_text(dir / train_log_filename(config.variant, seed),
               train_log_tsv(result.log));
    std::cout << "seed " << seed << ": best epoch " << result.best_epoch
              << " (val Prec@10 " << result.best_val_prec10 << "), checkpoint "
              << ckpt.string() << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& interactions,
             const std::string& titles, const std::string& split_name) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);

  RunConfig data_config;
  data_config.interactions = interactions;
  data_config.titles = titles;
  data_config.prompt = ckpt.prompt;
  const PreparedData data = prepare_data(data_config);
  if (data.catalog.size() != ckpt.config.n_items) {
    throw DataError("checkpoint was trained with " +
                    std::to_string(ckpt.config.n_items) + " items but the catalog has " +
                    std::to_string(data.catalog.size()));
  }

  const std::vector<Example>* split = nullptr;
  if (split_name == "train") split = &data.splits.train;
  else if (split_name == "validation") split = &data.splits.validation;
  else if (split_name == "test") split = &data.splits.test;
  else throw ConfigError("unknown split '" + split_name + "'");

  const RankingReport report = evaluate(
      EvalContext{ckpt.params, ckpt.config, data.catalog, ckpt.vocab, ckpt.prompt},
      *split);
  std::cout << RankingReport::table_header() << "\n"
            << report.to_table_row() << "\n"
            << report.to_json() << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, int workers) {
  const RunConfig config = RunConfig::parse_file(config_path);
  const PreparedData data = prepare_data(config);
  fs::create_directories(config.out_dir);
  const fs::path dir(config.out_dir);
  data.vocab.save((dir / "vocab.tsv").string());

  const std::vector<Variant> variants(kAllVariants.begin(), kAllVariants.end());
  const std::vector<RunOutcome> runs = run_sweep(config, data, variants, workers);

  std::ostringstream jsonl;
  for (const RunOutcome& run : runs) {
    if (!run.ok) {
      jsonl << "{\"variant\":\"" << to_string(run.variant) << "\",\"seed\":" << run.seed
            << ",\"error\":\"run failed\"}\n";
      continue;
    }
    const ModelConfig model_config = config.model_config(
        run.variant, run.seed, data.vocab.size(), data.catalog.size());
    save_checkpoint((dir / checkpoint_filename(run.variant, run.seed)).string(),
                    run.train_result.params, model_config, data.vocab, config.prompt);
    write_text(dir / train_log_filename(run.variant, run.seed),
               train_log_tsv(run.train_result.log));
    write_text(dir / report_filename(run.variant, run.seed),
               run.test_report.to_json() + "\n");
    jsonl << run.test_report.to_json() << "\n";
  }

  const std::string table = ablation_table(runs);
  write_text(dir / "ablation.txt", table);
  write_text(dir / "runs.jsonl", jsonl.str());
  std::cout << table;

  for (const RunOutcome& run : runs) {
    if (!run.ok) {
      std::cerr << "run " << to_string(run.variant) << "/seed " << run.seed
                << " failed: " << run.error << "\n";
    }
  }
  return 0;
}

std::vector<SegmentLabel> parse_label_spec(const std::string& spec) {
  std::vector<SegmentLabel> labels;
  std::vector<std::string> item_names;
  std::stringstream stream(spec);
  std::string part;
  while (std::getline(stream, part, ',')) {
    part.erase(0, part.find_first_not_of(" \t"));
    part.erase(part.find_last_not_of(" \t") + 1);
    if (part.empty()) throw ConfigError("empty entry in label spec '" + spec + "'");
    if (part == "D" || part == "d") {
      labels.push_back(SegmentLabel::description());
      continue;
    }
    auto it = std::find(item_names.begin(), item_names.end(), part);
    if (it == item_names.end()) {
      item_names.push_back(part);
      it = std::prev(item_names.end());
    }
    labels.push_back(SegmentLabel::item_token(
        static_cast<int>(std::distance(item_names.begin(), it))));
  }
  if (labels.empty()) throw ConfigError("label spec is empty");
  return labels;
}

int cmd_dump_mask(const std::string& kind, const std::string& labels_spec, int len) {
  if (kind == "causal") {
    if (len < 1 && labels_spec.empty()) {
      throw ConfigError("--kind causal needs --len or --labels");
    }
    const int n = len >= 1 ? len : static_cast<int>(parse_label_spec(labels_spec).size());
    std::cout << causal_mask(n).to_text();
    return 0;
  }
  if (labels_spec.empty()) {
    throw ConfigError("--kind " + kind + " needs --labels");
  }
  const std::vector<SegmentLabel> labels = parse_label_spec(labels_spec);
  if (kind == "intra") {
    std::cout << intra_item_mask(labels).to_text();
  } else if (kind == "inter") {
    std::cout << inter_item_mask(labels).to_text();
  } else {
    throw ConfigError("unknown mask kind '" + kind + "' (expected causal, intra, inter)");
  }
  return 0;
}

int cmd_grad_check(bool corrupt) {
  GradCheckOptions options;
  options.corrupt = corrupt;
  bool all_passed = true;
  for (Variant variant : kAllVariants) {
    const GradCheckResult result = grad_check_variant(variant, options);
    std::printf("%-12s max_rel_err %.3e over %d coordinates: %s\n",
                to_string(variant).c_str(), result.max_rel_err, result.n_coords,
                result.passed ? "ok" : "FAILED");
    all_passed = all_passed && result.passed;
  }
  if (!all_passed) {
    throw NumericalError("gradient check failed");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"item-aware attention recommender"};
  app.require_subcommand(1);
  std::function<int()> action;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  {
    auto synth = std::make_shared<SynthConfig>();
    auto out_dir = std::make_shared<std::string>("data");
    gen->add_option("--n-items", synth->n_items, "catalog size");
    gen->add_option("--n-users", synth->n_users, "number of users");
    gen->add_option("--n-clusters", synth->n_clusters, "number of item clusters");
    gen->add_option("--stay-prob", synth->stay_prob,
                    "probability of staying in the current cluster");
    gen->add_option("--min-len", synth->min_len, "minimum interactions per user");
    gen->add_option("--max-len", synth->max_len, "maximum interactions per user");
    gen->add_option("--seed", synth->seed, "generator seed");
    gen->add_option("--out-dir", *out_dir, "output directory");
    gen->callback([synth, out_dir, &action]() {
      action = [synth, out_dir]() { return cmd_gen_data(*synth, *out_dir); };
    });
  }

  auto* train_cmd = app.add_subcommand("train", "train one variant per configured seed");
  {
    auto config_path = std::make_shared<std::string>();
    train_cmd->add_option("--config", *config_path, "run config file")->required();
    train_cmd->callback([config_path, &action]() {
      action = [config_path]() { return cmd_train(*config_path); };
    });
  }

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  {
    auto ckpt = std::make_shared<std::string>();
    auto interactions = std::make_shared<std::string>();
    auto titles = std::make_shared<std::string>();
    auto split = std::make_shared<std::string>("test");
    eval_cmd->add_option("--checkpoint", *ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--interactions", *interactions, "interactions file")->required();
    eval_cmd->add_option("--titles", *titles, "titles file")->required();
    eval_cmd->add_option("--split", *split, "train, validation, or test");
    eval_cmd->callback([ckpt, interactions, titles, split, &action]() {
      action = [ckpt, interactions, titles, split]() {
        return cmd_eval(*ckpt, *interactions, *titles, *split);
      };
    });
  }

  auto* ablate_cmd =
      app.add_subcommand("ablate", "train and evaluate every variant per seed");
  {
    auto config_path = std::make_shared<std::string>();
    auto workers = std::make_shared<int>(1);
    ablate_cmd->add_option("--config", *config_path, "run config file")->required();
    ablate_cmd->add_option("--workers", *workers, "parallel training runs");
    ablate_cmd->callback([config_path, workers, &action]() {
      action = [config_path, workers]() { return cmd_ablate(*config_path, *workers); };
    });
  }

  auto* dump_cmd = app.add_subcommand("dump-mask", "print a mask as '#'/'.' rows");
  {
    auto kind = std::make_shared<std::string>();
    auto labels = std::make_shared<std::string>();
    auto len = std::make_shared<int>(0);
    dump_cmd->add_option("--kind", *kind, "causal, intra, or inter")->required();
    dump_cmd->add_option("--labels", *labels,
                         "comma-separated labels, e.g. D,D,A,A,B (D = description)");
    dump_cmd->add_option("--len", *len, "sequence length for --kind causal");
    dump_cmd->callback([kind, labels, len, &action]() {
      action = [kind, labels, len]() { return cmd_dump_mask(*kind, *labels, *len); };
    });
  }

  auto* grad_cmd = app.add_subcommand(
      "grad-check", "compare gradients with finite differences for all variants");
  {
    auto corrupt = std::make_shared<bool>(false);
    grad_cmd->add_flag("--corrupt", *corrupt,
                       "negative control: perturb one analytic gradient");
    grad_cmd->callback([corrupt, &action]() {
      action = [corrupt]() { return cmd_grad_check(*corrupt); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return action ? action() : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
