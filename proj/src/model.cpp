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

#include "iamrec/model.hpp"

#include <cmath>

namespace iamrec {

namespace {

constexpr double kRmsEps = 1e-6;

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_finite(const Matrix& x, const char* what, int layer_index) {
  if (!x.allFinite()) {
    throw NumericalError(std::string("non-finite activations in ") + what +
                         " sublayer " + std::to_string(layer_index));
  }
}

// Allowed key columns per query row; the attention loops visit only these so
// masked positions never touch the arithmetic.
std::vector<std::vector<int>> allowed_columns(const AttentionMask& mask) {
  const int n = mask.size();
  std::vector<std::vector<int>> allowed(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (mask.allowed(i, j)) allowed[static_cast<size_t>(i)].push_back(j);
    }
  }
  return allowed;
}

Matrix dropout_scale(int rows, int cols, double p, Rng& rng) {
  Matrix scale(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      scale(i, j) = rng.uniform() < p ? 0.0 : keep;
    }
  }
  return scale;
}

}  // namespace

void ModelConfig::validate() const {
  if (d < 1 || n_heads < 1 || n_blocks < 1 || ffn_mult < 1 || vocab_size < 1 ||
      max_len < 1 || n_items < 1) {
    throw ConfigError("model config: all sizes must be >= 1");
  }
  if (d % n_heads != 0) {
    throw ConfigError("model config: d must be divisible by n_heads");
  }
  if (lora) {
    if (lora->rank < 1) throw ConfigError("lora rank must be >= 1");
    if (lora->rank > d) throw ConfigError("lora rank must not exceed d");
    if (lora->dropout < 0.0 || lora->dropout >= 1.0) {
      throw ConfigError("lora dropout must be in [0, 1)");
    }
  }
}

std::vector<NamedTensor> tensor_list(ModelParameters& params) {
  const bool lora = params.has_lora();
  const bool base = !lora;
  std::vector<NamedTensor> out;
  out.push_back({"tok_emb", &params.tok_emb, base});
  out.push_back({"pos_emb", &params.pos_emb, base});
  for (size_t i = 0; i < params.layers.size(); ++i) {
    SublayerParams& layer = params.layers[i];
    const std::string prefix = "layers." + std::to_string(i) + ".";
    out.push_back({prefix + "attn_gain", &layer.attn_gain, base});
    out.push_back({prefix + "wq", &layer.wq, base});
    out.push_back({prefix + "wk", &layer.wk, base});
    out.push_back({prefix + "wv", &layer.wv, base});
    out.push_back({prefix + "wo", &layer.wo, base});
    if (lora) {
      out.push_back({prefix + "lora_a_q", &layer.lora_a_q, true});
      out.push_back({prefix + "lora_b_q", &layer.lora_b_q, true});
      out.push_back({prefix + "lora_a_k", &layer.lora_a_k, true});
      out.push_back({prefix + "lora_b_k", &layer.lora_b_k, true});
      out.push_back({prefix + "lora_a_v", &layer.lora_a_v, true});
      out.push_back({prefix + "lora_b_v", &layer.lora_b_v, true});
    }
    out.push_back({prefix + "ffn_gain", &layer.ffn_gain, base});
    out.push_back({prefix + "w1", &layer.w1, base});
    out.push_back({prefix + "w2", &layer.w2, base});
  }
  out.push_back({"final_gain", &params.final_gain, base});
  out.push_back({"adapter", &params.adapter, true});
  return out;
}

ModelParameters init_params(const ModelConfig& config) {
  config.validate();
  ModelParameters params;
  params.tok_emb = Matrix::Zero(config.vocab_size, config.d);
  params.pos_emb = Matrix::Zero(config.max_len, config.d);
  params.layers.resize(static_cast<size_t>(config.n_sublayers()));
  for (SublayerParams& layer : params.layers) {
    layer.attn_gain = Matrix::Ones(1, config.d);
    layer.wq = Matrix::Zero(config.d, config.d);
    layer.wk = Matrix::Zero(config.d, config.d);
    layer.wv = Matrix::Zero(config.d, config.d);
    layer.wo = Matrix::Zero(config.d, config.d);
    layer.ffn_gain = Matrix::Ones(1, config.d);
    layer.w1 = Matrix::Zero(config.d, config.ffn_dim());
    layer.w2 = Matrix::Zero(config.ffn_dim(), config.d);
  }
  params.final_gain = Matrix::Ones(1, config.d);
  params.adapter = Matrix::Zero(config.d, config.n_items);

  const double bound = 1.0 / std::sqrt(static_cast<double>(config.d));
  Rng rng(config.seed);
  for (NamedTensor& entry : tensor_list(params)) {
    if (entry.name.find("gain") != std::string::npos) continue;
    Matrix& w = *entry.tensor;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
  }
  return params;
}

ModelParameters lora_apply(const ModelParameters& params, const LoraConfig& lora,
                           uint64_t seed) {
  if (params.layers.empty()) throw ConfigError("lora_apply: uninitialized parameters");
  const int d = static_cast<int>(params.layers.front().wq.rows());
  if (lora.rank < 1) throw ConfigError("lora rank must be >= 1");
  if (lora.rank > d) throw ConfigError("lora rank must not exceed d");

  ModelParameters adapted = params;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Rng rng(seed);
  auto random_a = [&]() {
    Matrix a(lora.rank, d);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        a(i, j) = rng.uniform(-bound, bound);
      }
    }
    return a;
  };
  for (SublayerParams& layer : adapted.layers) {
    layer.lora_a_q = random_a();
    layer.lora_b_q = Matrix::Zero(d, lora.rank);
    layer.lora_a_k = random_a();
    layer.lora_b_k = Matrix::Zero(d, lora.rank);
    layer.lora_a_v = random_a();
    layer.lora_b_v = Matrix::Zero(d, lora.rank);
  }
  return adapted;
}

Matrix rmsnorm_rows(const Matrix& x, const Matrix& gain, Vector* inv_rms) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  Matrix out(rows, cols);
  if (inv_rms) inv_rms->resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double ms = x.row(i).squaredNorm() / static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(ms + kRmsEps);
    if (inv_rms) (*inv_rms)(i) = inv;
    out.row(i) = (x.row(i) * inv).cwiseProduct(gain.row(0));
  }
  return out;
}

double silu(double x) { return x * sigmoid(x); }

double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

Matrix attention_branch(const Matrix& x, const AttentionMask& mask,
                        const SublayerParams& layer, const ModelConfig& config,
                        int layer_index, AttnTrace* trace, Rng* dropout_rng) {
  const int l = static_cast<int>(x.rows());
  if (mask.size() != l) {
    throw ConfigError("attention mask size " + std::to_string(mask.size()) +
                      " does not match sequence length " + std::to_string(l));
  }
  const int d = config.d;
  const int hd = config.head_dim();
  const int nh = config.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Vector inv_rms;
  Matrix normed = rmsnorm_rows(x, layer.attn_gain, &inv_rms);

  Matrix q(l, d), k(l, d), v(l, d);
  q.noalias() = normed * layer.wq;
  k.noalias() = normed * layer.wk;
  v.noalias() = normed * layer.wv;

  Matrix lora_mid_q, lora_mid_k, lora_mid_v;
  Matrix drop_q, drop_k, drop_v;
  if (layer.lora_a_q.size() > 0) {
    if (!config.lora) {
      throw ConfigError("parameters carry LoRA adapters but the config does not");
    }
    const double s = config.lora->alpha / static_cast<double>(config.lora->rank);
    const double p = config.lora->dropout;
    const bool drop = dropout_rng != nullptr && p > 0.0;
    auto apply = [&](const Matrix& a, const Matrix& b, Matrix& proj, Matrix& mid,
                     Matrix& drop_scale) {
      const Matrix* input = &normed;
      Matrix dropped;
      if (drop) {
        drop_scale = dropout_scale(l, d, p, *dropout_rng);
        dropped = normed.cwiseProduct(drop_scale);
        input = &dropped;
      }
      mid.noalias() = (*input) * a.transpose();       // l x rank
      proj.noalias() += s * (mid * b.transpose());    // l x d
    };
    apply(layer.lora_a_q, layer.lora_b_q, q, lora_mid_q, drop_q);
    apply(layer.lora_a_k, layer.lora_b_k, k, lora_mid_k, drop_k);
    apply(layer.lora_a_v, layer.lora_b_v, v, lora_mid_v, drop_v);
  }

  const std::vector<std::vector<int>> allowed = allowed_columns(mask);
  std::vector<Matrix> probs(static_cast<size_t>(nh));
  Matrix heads_out = Matrix::Zero(l, d);
  Eigen::ArrayXd scores(l);
  for (int h = 0; h < nh; ++h) {
    probs[static_cast<size_t>(h)] = Matrix::Zero(l, l);
    Matrix& p = probs[static_cast<size_t>(h)];
    const int off = h * hd;
    for (int i = 0; i < l; ++i) {
      const std::vector<int>& cols = allowed[static_cast<size_t>(i)];
      if (cols.empty()) continue;  // fully masked row: zero attention output
      const int n_cols = static_cast<int>(cols.size());
      double max_score = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < n_cols; ++c) {
        const double s =
            q.row(i).segment(off, hd).dot(k.row(cols[static_cast<size_t>(c)]).segment(off, hd)) *
            scale;
        scores(c) = s;
        if (s > max_score) max_score = s;
      }
      auto active = scores.head(n_cols);
      active = (active - max_score).exp();
      const double denom = active.sum();
      auto out_row = heads_out.row(i).segment(off, hd);
      for (int c = 0; c < n_cols; ++c) {
        const double w = scores(c) / denom;
        p(i, cols[static_cast<size_t>(c)]) = w;
        out_row += w * v.row(cols[static_cast<size_t>(c)]).segment(off, hd);
      }
    }
  }

  Matrix branch(l, d);
  branch.noalias() = heads_out * layer.wo;
  check_finite(branch, "attention", layer_index);

  if (trace) {
    trace->x_in = x;
    trace->inv_rms = std::move(inv_rms);
    trace->normed = std::move(normed);
    trace->q = std::move(q);
    trace->k = std::move(k);
    trace->v = std::move(v);
    trace->probs = std::move(probs);
    trace->heads_out = std::move(heads_out);
    trace->branch_out = branch;
    trace->lora_mid_q = std::move(lora_mid_q);
    trace->lora_mid_k = std::move(lora_mid_k);
    trace->lora_mid_v = std::move(lora_mid_v);
    trace->lora_drop_q = std::move(drop_q);
    trace->lora_drop_k = std::move(drop_k);
    trace->lora_drop_v = std::move(drop_v);
  }
  return branch;
}

Matrix attention_sublayer(const Matrix& x, const AttentionMask& mask,
                          const SublayerParams& layer, const ModelConfig& config,
                          int layer_index) {
  return x + attention_branch(x, mask, layer, config, layer_index);
}

ForwardTrace model_forward(const SegmentedSequence& seq, const ModelParameters& params,
                           const ModelConfig& config, bool training, Rng* dropout_rng) {
  const int l = seq.length();
  if (l < 1) throw DataError("model_forward: empty sequence");
  if (l > config.max_len) {
    throw DataError("sequence length " + std::to_string(l) + " exceeds max_len " +
                    std::to_string(config.max_len));
  }
  if (config.lora.has_value() != params.has_lora()) {
    throw ConfigError("LoRA configuration does not match the parameters");
  }
  for (int id : seq.token_ids) {
    if (id < 0 || id >= config.vocab_size) {
      throw DataError("token id " + std::to_string(id) + " outside the vocabulary");
    }
  }

  ForwardTrace trace;
  trace.token_ids = seq.token_ids;
  trace.labels = seq.labels;
  trace.schedule = mask_schedule(config.variant, seq.labels, config.n_blocks);

  Matrix x(l, config.d);
  for (int i = 0; i < l; ++i) {
    x.row(i) = params.tok_emb.row(seq.token_ids[static_cast<size_t>(i)]) +
               params.pos_emb.row(i);
  }

  Rng* drop = (training && config.lora && config.lora->dropout > 0.0) ? dropout_rng
                                                                      : nullptr;
  const int n_sub = config.n_sublayers();
  trace.attn.resize(static_cast<size_t>(n_sub));
  trace.ffn.resize(static_cast<size_t>(n_sub));
  trace.sublayer_out.reserve(static_cast<size_t>(n_sub));
  for (int s = 0; s < n_sub; ++s) {
    AttnTrace& at = trace.attn[static_cast<size_t>(s)];
    const Matrix branch = attention_branch(x, trace.schedule[static_cast<size_t>(s)],
                                           params.layers[static_cast<size_t>(s)],
                                           config, s, &at, drop);
    x += branch;
    check_finite(x, "attention", s);

    FfnTrace& ft = trace.ffn[static_cast<size_t>(s)];
    ft.x_in = x;
    ft.normed = rmsnorm_rows(x, params.layers[static_cast<size_t>(s)].ffn_gain,
                             &ft.inv_rms);
    ft.pre_act.noalias() = ft.normed * params.layers[static_cast<size_t>(s)].w1;
    // Vectorized sigmoid; the backward pass reuses it for the silu derivative.
    ft.sig = (1.0 + (-ft.pre_act.array()).exp()).inverse().matrix();
    ft.act = ft.pre_act.cwiseProduct(ft.sig);
    x.noalias() += ft.act * params.layers[static_cast<size_t>(s)].w2;
    check_finite(x, "feed-forward", s);
    trace.sublayer_out.push_back(x);
  }

  trace.x_final = x;
  trace.hidden = rmsnorm_rows(x, params.final_gain, &trace.final_inv_rms);
  return trace;
}

Vector score_items(const Matrix& hidden, const ModelParameters& params) {
  const Eigen::Index last = hidden.rows() - 1;
  Vector logits = (hidden.row(last) * params.adapter).transpose();
  return (1.0 + (-logits.array()).exp()).inverse().matrix();
}

}  // namespace iamrec
