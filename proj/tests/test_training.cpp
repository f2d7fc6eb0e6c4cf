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

#include "iamrec/gradcheck.hpp"
#include "iamrec/training.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstring>

using namespace iamrec;

namespace {

bool bits_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<size_t>(a.size())) == 0;
}

ModelConfig tiny_config(Variant variant = Variant::kIam) {
  ModelConfig config;
  config.d = 16;
  config.n_heads = 4;
  config.n_blocks = 1;
  config.ffn_mult = 2;
  config.vocab_size = 20;
  config.max_len = 16;
  config.n_items = 8;
  config.seed = 1;
  config.variant = variant;
  return config;
}

SegmentedSequence tiny_sequence(const ModelConfig& config, Rng& rng) {
  SegmentedSequence seq;
  auto push = [&](SegmentLabel label) {
    seq.token_ids.push_back(rng.uniform_int(config.vocab_size));
    seq.labels.push_back(label);
  };
  push(SegmentLabel::description());
  push(SegmentLabel::description());
  for (int t = 0; t < 2; ++t) push(SegmentLabel::item_token(0));
  for (int t = 0; t < 2; ++t) push(SegmentLabel::item_token(1));
  push(SegmentLabel::description());
  return seq;
}

}  // namespace

TEST_CASE("bce_loss on uniform scores is n log 2") {
  Vector y = Vector::Constant(4, 0.5);
  const LossValue loss = bce_loss(y, 2);
  CHECK(loss.loss == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(loss.loss == doctest::Approx(2.77259).epsilon(1e-5));
}

TEST_CASE("bce_loss approaches zero on a confident correct prediction") {
  Vector y = Vector::Constant(5, 1e-9);
  y(3) = 1.0 - 1e-9;
  const LossValue loss = bce_loss(y, 3);
  CHECK(loss.loss < 1e-7);
  CHECK(loss.loss >= 0.0);
}

TEST_CASE("bce_loss matches a scalar summation oracle on random scores") {
  Rng rng(1234);
  Vector y(50);
  for (int i = 0; i < 50; ++i) y(i) = rng.uniform(0.001, 0.999);
  const int gt = 17;
  const LossValue loss = bce_loss(y, gt);

  double expected = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double clamped = std::min(std::max(y(i), 1e-12), 1.0 - 1e-12);
    expected -= (i == gt) ? std::log(clamped) : std::log(1.0 - clamped);
  }
  CHECK(loss.loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bce_loss rejects out-of-range ground truth") {
  Vector y = Vector::Constant(4, 0.5);
  CHECK_THROWS_AS(bce_loss(y, 4), DataError);
  CHECK_THROWS_AS(bce_loss(y, -1), DataError);
}

TEST_CASE("zero upstream gradient yields zero parameter gradients") {
  const ModelConfig config = tiny_config();
  const ModelParameters params = init_params(config);
  Rng rng(3);
  const SegmentedSequence seq = tiny_sequence(config, rng);
  const ForwardTrace trace = model_forward(seq, params, config);

  LossValue loss;
  loss.gt = 0;
  loss.scores = Vector::Constant(config.n_items, 2.0);  // outside clamp: grad 0
  const Gradients grads = backward(trace, loss, params, config);
  for (const NamedTensor& entry : tensor_list(const_cast<Gradients&>(grads))) {
    CHECK(entry.tensor->cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("adapter gradient columns follow the sigmoid-BCE derivative") {
  const ModelConfig config = tiny_config();
  const ModelParameters params = init_params(config);
  Rng rng(4);
  const SegmentedSequence seq = tiny_sequence(config, rng);
  const ForwardTrace trace = model_forward(seq, params, config);
  const Vector scores = score_items(trace.hidden, params);
  const LossValue loss = bce_loss(scores, 3);
  const Gradients grads = backward(trace, loss, params, config);

  const int last = seq.length() - 1;
  for (int c = 0; c < config.d; ++c) {
    const double expected_gt = (scores(3) - 1.0) * trace.hidden(last, c);
    CHECK(grads.adapter(c, 3) == doctest::Approx(expected_gt).epsilon(1e-12));
    const double expected_neg = scores(0) * trace.hidden(last, c);
    CHECK(grads.adapter(c, 0) == doctest::Approx(expected_neg).epsilon(1e-12));
  }
}

TEST_CASE("gradients match central finite differences on all variants") {
  for (Variant variant : kAllVariants) {
    GradCheckOptions options;
    options.n_coords = 60;
    const GradCheckResult result = grad_check_variant(variant, options);
    INFO("variant ", to_string(variant), " err ", result.max_rel_err);
    CHECK(result.passed);
  }
}

TEST_CASE("the corrupt hook makes the gradient check fail") {
  GradCheckOptions options;
  options.n_coords = 60;
  options.corrupt = true;
  const GradCheckResult result = grad_check_variant(Variant::kIam, options);
  CHECK_FALSE(result.passed);
}

TEST_CASE("adam first step moves by about lr for a plain gradient") {
  ModelConfig config = tiny_config();
  ModelParameters params = init_params(config);
  Gradients grads = zeros_like(params);
  grads.adapter.setConstant(0.5);
  const Matrix before = params.adapter;

  AdamState state(params, AdamConfig{0.001, 0.9, 0.999, 1e-8});
  adam_step(params, grads, state);
  const double g = 0.5;
  const double expected = -0.001 * g / (std::abs(g) + 1e-8);
  const Matrix delta = params.adapter - before;
  CHECK(delta.maxCoeff() == doctest::Approx(expected).epsilon(1e-9));
  CHECK(delta.minCoeff() == doctest::Approx(expected).epsilon(1e-9));
  CHECK(state.step_count() == 1);
}

TEST_CASE("adam leaves parameters bitwise unchanged under zero gradients") {
  ModelConfig config = tiny_config();
  ModelParameters params = init_params(config);
  const ModelParameters before = params;
  Gradients grads = zeros_like(params);
  AdamState state(params, AdamConfig{});
  for (int step = 0; step < 3; ++step) adam_step(params, grads, state);
  CHECK(bits_equal(params.tok_emb, before.tok_emb));
  CHECK(bits_equal(params.adapter, before.adapter));
  CHECK(bits_equal(params.layers[0].w1, before.layers[0].w1));
}

TEST_CASE("adam trajectory on a 1-D quadratic matches the scalar reference") {
  // loss = 0.5 * a (theta - target)^2 embedded in a 1x1 tensor
  ModelConfig config = tiny_config();
  config.d = 1;
  config.n_heads = 1;
  ModelParameters params = init_params(config);
  const double a = 3.0, target = -0.7, lr = 0.05;
  params.adapter(0, 0) = 2.0;

  const std::vector<double> expected =
      oracles::adam_quadratic_reference(2.0, a, target, lr, 10);

  AdamState state(params, AdamConfig{lr, 0.9, 0.999, 1e-8});
  Gradients grads = zeros_like(params);
  for (int step = 0; step < 10; ++step) {
    grads.adapter(0, 0) = a * (params.adapter(0, 0) - target);
    adam_step(params, grads, state);
    CHECK(params.adapter(0, 0) ==
          doctest::Approx(expected[static_cast<size_t>(step)]).epsilon(1e-10));
  }
}

namespace {

// Minimal in-memory dataset: n items, one-item histories.
struct ToyData {
  Catalog catalog;
  Vocabulary vocab;
  DatasetSplits splits;
};

ToyData toy_data(int n_items, int n_train) {
  ToyData data;
  for (int i = 0; i < n_items; ++i) {
    data.catalog.item_ids.push_back("it" + std::to_string(i));
    data.catalog.titles.push_back("word" + std::to_string(i));
    data.catalog.index.emplace(data.catalog.item_ids.back(), i);
  }
  std::vector<std::string> corpus = data.catalog.titles;
  corpus.push_back("guess next");
  data.vocab = build_vocab(corpus, 1);
  for (int e = 0; e < n_train; ++e) {
    Example example;
    example.user = "user" + std::to_string(e);
    example.history = {e % n_items, (e + 1) % n_items};
    example.label = (e + 2) % n_items;
    data.splits.train.push_back(example);
    data.splits.validation.push_back(example);
  }
  return data;
}

}  // namespace

TEST_CASE("train with lr zero keeps parameters and loss constant") {
  const ToyData data = toy_data(12, 4);
  ModelConfig config = tiny_config();
  config.vocab_size = data.vocab.size();
  config.n_items = data.catalog.size();

  TrainOptions options;
  options.epochs = 3;
  options.batch_size = 2;
  options.lr = 0.0;
  options.prompt = "guess next";

  const TrainResult result = train(config, options, data.splits, data.catalog, data.vocab);
  const ModelParameters fresh = init_params(config);
  CHECK(bits_equal(result.params.tok_emb, fresh.tok_emb));
  CHECK(bits_equal(result.params.adapter, fresh.adapter));
  REQUIRE(result.log.size() == 3);
  CHECK(result.log[0].train_loss == doctest::Approx(result.log[2].train_loss).epsilon(1e-15));
}

TEST_CASE("a single example is memorized within 200 epochs") {
  ToyData data = toy_data(12, 1);
  data.splits.validation = data.splits.train;
  ModelConfig config = tiny_config();
  config.vocab_size = data.vocab.size();
  config.n_items = data.catalog.size();

  TrainOptions options;
  options.epochs = 200;
  options.batch_size = 1;
  options.lr = 0.01;
  options.prompt = "guess next";

  const TrainResult result = train(config, options, data.splits, data.catalog, data.vocab);
  CHECK(result.log.back().train_loss < 0.05);
}

TEST_CASE("training is reproducible for a fixed seed") {
  const ToyData data = toy_data(12, 8);
  ModelConfig config = tiny_config();
  config.vocab_size = data.vocab.size();
  config.n_items = data.catalog.size();

  TrainOptions options;
  options.epochs = 4;
  options.batch_size = 4;
  options.lr = 0.005;
  options.prompt = "guess next";

  const TrainResult a = train(config, options, data.splits, data.catalog, data.vocab);
  const TrainResult b = train(config, options, data.splits, data.catalog, data.vocab);
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].val_prec10 == b.log[i].val_prec10);
  }
  CHECK(bits_equal(a.params.adapter, b.params.adapter));
}

TEST_CASE("chunked reduction is thread-count invariant") {
  const ToyData data = toy_data(12, 24);
  ModelConfig config = tiny_config();
  config.vocab_size = data.vocab.size();
  config.n_items = data.catalog.size();

  TrainOptions serial;
  serial.epochs = 2;
  serial.batch_size = 24;
  serial.lr = 0.01;
  serial.prompt = "guess next";
  serial.threads = 1;
  TrainOptions parallel = serial;
  parallel.threads = 2;

  const TrainResult a = train(config, serial, data.splits, data.catalog, data.vocab);
  const TrainResult b = train(config, parallel, data.splits, data.catalog, data.vocab);
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
  }
  CHECK(bits_equal(a.params.adapter, b.params.adapter));
  CHECK(bits_equal(a.params.tok_emb, b.params.tok_emb));
}

TEST_CASE("divergence aborts with the epoch and batch index") {
  const ToyData data = toy_data(12, 4);
  ModelConfig config = tiny_config();
  config.vocab_size = data.vocab.size();
  config.n_items = data.catalog.size();

  TrainOptions options;
  options.epochs = 5;
  options.batch_size = 2;
  options.lr = 1e308;  // drives the embeddings to overflow after one update
  options.prompt = "guess next";

  try {
    train(config, options, data.splits, data.catalog, data.vocab);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch") != std::string::npos);
    CHECK(what.find("batch") != std::string::npos);
  }
}

TEST_CASE("lora training updates only adapters and the scoring matrix") {
  const ToyData data = toy_data(12, 8);
  ModelConfig config = tiny_config();
  config.vocab_size = data.vocab.size();
  config.n_items = data.catalog.size();
  config.lora = LoraConfig{4, 16.0, 0.05};

  TrainOptions options;
  options.epochs = 3;
  options.batch_size = 4;
  options.lr = 0.01;
  options.prompt = "guess next";

  const TrainResult result = train(config, options, data.splits, data.catalog, data.vocab);
  ModelParameters reference = init_params(config);
  reference = lora_apply(reference, *config.lora,
                         config.seed ^ 0x9e3779b97f4a7c15ull);

  ModelParameters trained = result.params;
  for (const NamedTensor& entry : tensor_list(trained)) {
    // find the matching initial tensor by name
    for (const NamedTensor& init : tensor_list(reference)) {
      if (init.name != entry.name) continue;
      if (entry.trainable) {
        if (entry.name.find("lora_b") != std::string::npos ||
            entry.name == "adapter") {
          CHECK_FALSE(bits_equal(*entry.tensor, *init.tensor));
        }
      } else {
        CHECK(bits_equal(*entry.tensor, *init.tensor));
      }
    }
  }
}

TEST_CASE("train log is tab-separated with five fields per epoch") {
  std::vector<EpochLog> log = {{1, 2.5, 0.1, 0.05, 0.73}, {2, 2.0, 0.2, 0.08, 0.70}};
  const std::string tsv = train_log_tsv(log);
  CHECK(tsv.find("1\t2.5\t0.1\t0.05\t0.730\n") != std::string::npos);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 2);
  CHECK(std::count(tsv.begin(), tsv.end(), '\t') == 8);
}
