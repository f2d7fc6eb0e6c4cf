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
#include "iamrec/model.hpp"
#include "iamrec/run_config.hpp"
#include "iamrec/runner.hpp"
#include "iamrec/segmentation.hpp"
#include "iamrec/training.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace iamrec;

namespace {

std::vector<SegmentLabel> labels_from_ints(const std::vector<int>& raw) {
  std::vector<SegmentLabel> labels;
  labels.reserve(raw.size());
  for (int value : raw) {
    labels.push_back(value < 0 ? SegmentLabel::description()
                               : SegmentLabel::item_token(value));
  }
  return labels;
}

std::vector<int> labels_to_ints(const std::vector<SegmentLabel>& labels) {
  std::vector<int> raw;
  raw.reserve(labels.size());
  for (const SegmentLabel& label : labels) raw.push_back(label.item);
  return raw;
}

py::array_t<bool> mask_to_numpy(const AttentionMask& mask) {
  const int n = mask.size();
  py::array_t<bool> out({n, n});
  auto view = out.mutable_unchecked<2>();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      view(i, j) = mask.allowed(i, j);
    }
  }
  return out;
}

// Self-contained model handle: configuration, vocabulary, prompt, weights.
struct Model {
  ModelConfig config;
  ModelParameters params;
  Vocabulary vocab;
  std::string prompt;

  SegmentedSequence sequence_for(const std::vector<std::string>& titles) const {
    return tokenize_instruction(prompt, titles, vocab, config.max_len);
  }
};

RunConfig run_config_from_dict(const py::dict& options) {
  std::string text;
  for (const auto& item : options) {
    text += py::cast<std::string>(py::str(item.first)) + " = " +
            py::cast<std::string>(py::str(item.second)) + "\n";
  }
  return RunConfig::parse_string(text);
}

py::dict report_to_dict(const RankingReport& report) {
  py::dict out;
  out["variant"] = report.variant;
  out["seed"] = report.seed;
  out["n_examples"] = report.n_examples;
  out["prec5"] = report.prec5;
  out["ndcg5"] = report.ndcg5;
  out["prec10"] = report.prec10;
  out["ndcg10"] = report.ndcg10;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "item-aware attention recommender core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_static("build", &build_vocab, py::arg("corpus"), py::arg("min_count") = 1)
      .def_static("load", &Vocabulary::load, py::arg("path"))
      .def("save", &Vocabulary::save, py::arg("path"))
      .def("id_of", &Vocabulary::id_of)
      .def("token", &Vocabulary::token)
      .def_property_readonly("tokens", &Vocabulary::tokens)
      .def("__len__", &Vocabulary::size)
      .def_readonly_static("PAD", &Vocabulary::kPadId)
      .def_readonly_static("UNK", &Vocabulary::kUnkId)
      .def_readonly_static("SUFFIX", &Vocabulary::kSuffixId);

  py::class_<SegmentedSequence>(m, "SegmentedSequence")
      .def_property_readonly(
          "token_ids", [](const SegmentedSequence& seq) { return seq.token_ids; })
      .def_property_readonly(
          "labels", [](const SegmentedSequence& seq) { return labels_to_ints(seq.labels); })
      .def("__len__", &SegmentedSequence::length);

  m.def("clean_tokens", &clean_tokens, py::arg("text"),
        "Lowercased, punctuation-stripped whitespace tokens.");
  m.def("build_vocab", &build_vocab, py::arg("corpus"), py::arg("min_count") = 1);
  m.def("tokenize_instruction", &tokenize_instruction, py::arg("prefix"),
        py::arg("titles"), py::arg("vocab"), py::arg("max_len") = 256);
  m.def("item_spans", [](const SegmentedSequence& seq) {
    std::vector<std::tuple<int, int, int>> spans;
    for (const ItemSpan& span : item_spans(seq)) {
      spans.emplace_back(span.item, span.begin, span.end);
    }
    return spans;
  });

  m.def("causal_mask", [](int len) { return mask_to_numpy(causal_mask(len)); },
        py::arg("len"));
  m.def("intra_item_mask",
        [](const std::vector<int>& labels) {
          return mask_to_numpy(intra_item_mask(labels_from_ints(labels)));
        },
        py::arg("labels"), "labels: -1 for description tokens, item position otherwise");
  m.def("inter_item_mask",
        [](const std::vector<int>& labels) {
          return mask_to_numpy(inter_item_mask(labels_from_ints(labels)));
        },
        py::arg("labels"));
  m.def("mask_schedule",
        [](const std::string& variant, const std::vector<int>& labels, int n_blocks) {
          std::vector<py::array_t<bool>> out;
          for (const AttentionMask& mask : mask_schedule(
                   variant_from_string(variant), labels_from_ints(labels), n_blocks)) {
            out.push_back(mask_to_numpy(mask));
          }
          return out;
        },
        py::arg("variant"), py::arg("labels"), py::arg("n_blocks"));
  m.def("variants", []() {
    std::vector<std::string> names;
    for (Variant v : kAllVariants) names.push_back(to_string(v));
    return names;
  });

  py::class_<Model>(m, "Model")
      .def(py::init([](py::kwargs kwargs) {
             auto model = std::make_unique<Model>();
             ModelConfig& config = model->config;
             std::vector<std::string> corpus;
             model->prompt = kDefaultPrompt;
             for (const auto& item : kwargs) {
               const std::string key = py::cast<std::string>(item.first);
               if (key == "d") config.d = py::cast<int>(item.second);
               else if (key == "n_heads") config.n_heads = py::cast<int>(item.second);
               else if (key == "n_blocks") config.n_blocks = py::cast<int>(item.second);
               else if (key == "ffn_mult") config.ffn_mult = py::cast<int>(item.second);
               else if (key == "max_len") config.max_len = py::cast<int>(item.second);
               else if (key == "n_items") config.n_items = py::cast<int>(item.second);
               else if (key == "seed") config.seed = py::cast<uint64_t>(item.second);
               else if (key == "variant")
                 config.variant = variant_from_string(py::cast<std::string>(item.second));
               else if (key == "titles")
                 corpus = py::cast<std::vector<std::string>>(item.second);
               else if (key == "prompt")
                 model->prompt = py::cast<std::string>(item.second);
               else
                 throw ConfigError("unknown Model argument '" + key + "'");
             }
             corpus.push_back(model->prompt);
             model->vocab = build_vocab(corpus, 1);
             config.vocab_size = model->vocab.size();
             if (config.n_items == 0) {
               throw ConfigError("Model requires n_items");
             }
             model->params = init_params(config);
             return model;
           }),
           "Model(n_items=..., titles=[...], d=64, n_heads=4, n_blocks=2, ...)")
      .def_static("load",
                  [](const std::string& path) {
                    auto model = std::make_unique<Model>();
                    Checkpoint ckpt = load_checkpoint(path);
                    model->config = ckpt.config;
                    model->params = std::move(ckpt.params);
                    model->vocab = std::move(ckpt.vocab);
                    model->prompt = ckpt.prompt;
                    return model;
                  })
      .def("save",
           [](const Model& model, const std::string& path) {
             save_checkpoint(path, model.params, model.config, model.vocab, model.prompt);
           })
      .def("tokenize",
           [](const Model& model, const std::vector<std::string>& titles) {
             return model.sequence_for(titles);
           })
      .def("forward",
           [](const Model& model, const std::vector<std::string>& titles) {
             const ForwardTrace trace =
                 model_forward(model.sequence_for(titles), model.params, model.config);
             return Matrix(trace.hidden);
           },
           "Hidden states (length x d) for a history of item titles.")
      .def("score",
           [](const Model& model, const std::vector<std::string>& titles) {
             const ForwardTrace trace =
                 model_forward(model.sequence_for(titles), model.params, model.config);
             return Vector(score_items(trace.hidden, model.params));
           },
           "Per-item scores in [0, 1] for a history of item titles.")
      .def("lora_apply",
           [](Model& model, int rank, double alpha, double dropout, uint64_t seed) {
             const LoraConfig lora{rank, alpha, dropout};
             model.params = lora_apply(model.params, lora, seed);
             model.config.lora = lora;
           },
           py::arg("rank") = 8, py::arg("alpha") = 16.0, py::arg("dropout") = 0.05,
           py::arg("seed") = 1)
      .def_property_readonly("variant",
                             [](const Model& model) { return to_string(model.config.variant); })
      .def_property_readonly("n_items",
                             [](const Model& model) { return model.config.n_items; });

  m.def("bce_loss",
        [](const Vector& scores, int gt) { return bce_loss(scores, gt).loss; },
        py::arg("scores"), py::arg("gt"));
  m.def("full_rank", &full_rank, py::arg("scores"));
  m.def("precision_at_k", &precision_at_k, py::arg("ranked"), py::arg("gt"), py::arg("k"));
  m.def("ndcg_at_k", &ndcg_at_k, py::arg("ranked"), py::arg("gt"), py::arg("k"));

  m.def("synth_generate",
        [](const std::string& out_dir, int n_items, int n_users, int n_clusters,
           double stay_prob, int min_len, int max_len, uint64_t seed) {
          SynthConfig config{n_items, n_users, n_clusters, stay_prob, min_len,
                             max_len, seed};
          const SynthResult result = synth_generate(config);
          write_interactions(out_dir + "/interactions.tsv", result.interactions);
          write_titles(out_dir + "/titles.tsv", result.catalog);
          py::dict stats;
          stats["n_items"] = result.catalog.size();
          stats["n_interactions"] = result.interactions.size();
          stats["interactions"] = out_dir + "/interactions.tsv";
          stats["titles"] = out_dir + "/titles.tsv";
          return stats;
        },
        py::arg("out_dir"), py::arg("n_items") = 200, py::arg("n_users") = 2000,
        py::arg("n_clusters") = 10, py::arg("stay_prob") = 0.9, py::arg("min_len") = 5,
        py::arg("max_len") = 8, py::arg("seed") = 1);

  m.def("run_training",
        [](const py::dict& options) {
          const RunConfig config = run_config_from_dict(options);
          const PreparedData data = prepare_data(config);
          py::list reports;
          for (uint64_t seed : config.seeds) {
            const RunOutcome outcome = run_one(config, data, config.variant, seed);
            if (!outcome.ok) throw NumericalError(outcome.error);
            py::dict entry = report_to_dict(outcome.test_report);
            entry["best_epoch"] = outcome.train_result.best_epoch;
            entry["best_val_prec10"] = outcome.train_result.best_val_prec10;
            entry["final_train_loss"] = outcome.train_result.log.back().train_loss;
            reports.append(entry);
          }
          return reports;
        },
        py::arg("options"),
        "Train per configured seed; options mirror the CLI config keys.");

  m.def("grad_check",
        [](const std::string& variant, int n_coords) {
          GradCheckOptions options;
          options.n_coords = n_coords;
          return grad_check_variant(variant_from_string(variant), options).max_rel_err;
        },
        py::arg("variant") = "iam", py::arg("n_coords") = 100,
        "Max guarded relative error of reverse-mode gradients vs central differences.");
}
