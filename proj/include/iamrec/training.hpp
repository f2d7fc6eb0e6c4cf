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
#include "iamrec/model.hpp"

#include <string>
#include <vector>

namespace iamrec {

struct LossValue {
  double loss = 0.0;
  Vector scores;
  int gt = -1;
};

/// Per-item binary cross-entropy with the ground-truth item as the single
/// positive: -[log y_gt + sum_{i != gt} log(1 - y_i)], scores clamped to
/// [1e-12, 1 - 1e-12] before the logs.
LossValue bce_loss(const Vector& scores, int gt);

/// Gradient of the loss with respect to the pre-sigmoid logits; entries whose
/// score sits in the clamp region get exact zero.
Vector bce_logit_gradient(const Vector& scores, int gt);

using Gradients = ModelParameters;

Gradients zeros_like(const ModelParameters& params);

/// Adds the exact reverse-mode gradients of forward + scoring + loss into
/// `accum`. Frozen tensors are accumulated too; callers zero them via
/// apply_freeze_mask (backward() does this itself).
void accumulate_gradients(const ForwardTrace& trace, const LossValue& loss,
                          const ModelParameters& params, const ModelConfig& config,
                          Gradients& accum);

/// Zeroes gradients of non-trainable tensors (frozen base weights under LoRA).
void apply_freeze_mask(Gradients& grads, const ModelParameters& params);

Gradients backward(const ForwardTrace& trace, const LossValue& loss,
                   const ModelParameters& params, const ModelConfig& config);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState(ModelParameters& params, AdamConfig config);

  int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

  friend void adam_step(ModelParameters& params, const Gradients& grads,
                        AdamState& state);

 private:
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamConfig config_;
  int64_t step_ = 0;
};

/// Bias-corrected Adam update over every tensor; zero gradients leave the
/// corresponding parameters bitwise untouched.
void adam_step(ModelParameters& params, const Gradients& grads, AdamState& state);

struct TrainOptions {
  int epochs = 30;
  int batch_size = 64;
  double lr = 0.001;
  int threads = 1;
  std::string prompt;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_prec10 = 0.0;
  double val_ndcg10 = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ModelParameters params;  // best-validation snapshot
  ModelConfig config;
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_prec10 = 0.0;
};

/// Mini-batch training over (history -> ground truth) examples with per-epoch
/// validation Prec@10 and best-validation checkpointing. Gradients are
/// reduced over fixed-size chunks in a fixed order, so results do not depend
/// on the thread count. A fixed seed reproduces the loss curve exactly.
TrainResult train(const ModelConfig& config, const TrainOptions& options,
                  const DatasetSplits& splits, const Catalog& catalog,
                  const Vocabulary& vocab);

/// One tab-separated line per epoch: epoch, train_loss, val_Prec@10,
/// val_NDCG@10, wall_seconds.
std::string train_log_tsv(const std::vector<EpochLog>& log);

}  // namespace iamrec
