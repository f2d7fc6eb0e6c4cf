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
#include "iamrec/masks.hpp"
#include "iamrec/segmentation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iamrec {

struct LoraConfig {
  int rank = 8;
  double alpha = 16.0;
  double dropout = 0.05;
};

struct ModelConfig {
  int d = 64;
  int n_heads = 4;
  int n_blocks = 2;  // number of (intra, inter) sublayer pairs
  int ffn_mult = 4;
  int vocab_size = 0;
  int max_len = 256;
  int n_items = 0;
  uint64_t seed = 1;
  Variant variant = Variant::kIam;
  std::optional<LoraConfig> lora;

  int n_sublayers() const { return 2 * n_blocks; }
  int head_dim() const { return d / n_heads; }
  int ffn_dim() const { return d * ffn_mult; }
  void validate() const;
};

/// Weights of one attention + feed-forward sublayer pair. Projections act on
/// row activations by right multiplication. LoRA tensors keep the
/// conventional orientation (a: rank x d, b: d x rank) and stay empty until
/// adapters are attached.
struct SublayerParams {
  Matrix attn_gain;  // 1 x d
  Matrix wq, wk, wv, wo;  // d x d
  Matrix lora_a_q, lora_b_q;
  Matrix lora_a_k, lora_b_k;
  Matrix lora_a_v, lora_b_v;
  Matrix ffn_gain;  // 1 x d
  Matrix w1;  // d x ffn_dim
  Matrix w2;  // ffn_dim x d
};

struct ModelParameters {
  Matrix tok_emb;  // vocab_size x d
  Matrix pos_emb;  // max_len x d
  std::vector<SublayerParams> layers;
  Matrix final_gain;  // 1 x d
  Matrix adapter;     // d x n_items

  bool has_lora() const {
    return !layers.empty() && layers.front().lora_a_q.size() > 0;
  }
};

/// Stable name -> tensor directory. The order is the canonical one used by
/// checkpoints, the optimizer, and gradient sampling. `trainable` is false
/// for frozen base weights when LoRA adapters are present.
struct NamedTensor {
  std::string name;
  Matrix* tensor = nullptr;
  bool trainable = true;
};
std::vector<NamedTensor> tensor_list(ModelParameters& params);

/// Everything the backward pass and the structural property tests need from
/// one attention sublayer.
struct AttnTrace {
  Matrix x_in;     // sublayer input, l x d
  Vector inv_rms;  // per-row 1/rms of x_in
  Matrix normed;   // pre-norm output fed to the projections
  Matrix q, k, v;  // l x d
  std::vector<Matrix> probs;  // per head, l x l; masked entries are exact zeros
  Matrix heads_out;   // concatenated head outputs before the output projection
  Matrix branch_out;  // output projection result, pre-residual
  Matrix lora_mid_q, lora_mid_k, lora_mid_v;  // l x rank intermediates
  // Per-projection dropout scale matrices, entries 0 or 1/(1-p); empty when
  // dropout is inactive.
  Matrix lora_drop_q, lora_drop_k, lora_drop_v;
};

struct FfnTrace {
  Matrix x_in;
  Vector inv_rms;
  Matrix normed;
  Matrix pre_act;  // l x ffn_dim
  Matrix sig;      // sigmoid(pre_act)
  Matrix act;      // silu(pre_act) = pre_act * sig
};

struct ForwardTrace {
  std::vector<int> token_ids;
  std::vector<SegmentLabel> labels;
  std::vector<AttentionMask> schedule;
  std::vector<AttnTrace> attn;
  std::vector<FfnTrace> ffn;
  std::vector<Matrix> sublayer_out;  // activations after each attn+ffn pair
  Matrix x_final;        // input of the final normalization
  Vector final_inv_rms;
  Matrix hidden;         // normalized output, l x d
};

/// Deterministic initialization: every weight matrix is uniform on
/// [-1/sqrt(d), 1/sqrt(d)], normalization gains start at one.
ModelParameters init_params(const ModelConfig& config);

/// Returns a copy with LoRA adapters attached to every Q/K/V projection:
/// a is uniform-random, b starts at zero so outputs are unchanged. Base
/// weights are reported frozen by tensor_list afterwards.
ModelParameters lora_apply(const ModelParameters& params, const LoraConfig& lora,
                           uint64_t seed);

/// Row-wise RMS normalization with a learned gain.
Matrix rmsnorm_rows(const Matrix& x, const Matrix& gain, Vector* inv_rms = nullptr);

double silu(double x);
double silu_grad(double x);

/// Pre-residual attention branch: pre-norm, masked multi-head attention over
/// allowed columns only, head concatenation, output projection. Fully masked
/// rows yield exact zero rows. `dropout_rng` enables LoRA branch dropout.
Matrix attention_branch(const Matrix& x, const AttentionMask& mask,
                        const SublayerParams& layer, const ModelConfig& config,
                        int layer_index, AttnTrace* trace = nullptr,
                        Rng* dropout_rng = nullptr);

/// Residual attention sublayer: x + attention_branch(x).
Matrix attention_sublayer(const Matrix& x, const AttentionMask& mask,
                          const SublayerParams& layer, const ModelConfig& config,
                          int layer_index = 0);

/// Embeds the sequence, runs the mask schedule of the configured variant
/// (attention + feed-forward pair per mask), and applies the final
/// normalization. The trace retains per-sublayer tensors for backward and
/// for the structural property tests.
ForwardTrace model_forward(const SegmentedSequence& seq, const ModelParameters& params,
                           const ModelConfig& config, bool training = false,
                           Rng* dropout_rng = nullptr);

/// sigmoid(adapter^T h_last) where h_last is the hidden state of the final
/// suffix-marker position.
Vector score_items(const Matrix& hidden, const ModelParameters& params);

}  // namespace iamrec
