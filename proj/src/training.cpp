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

#include "iamrec/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>

namespace iamrec {

namespace {

constexpr double kScoreClamp = 1e-12;
constexpr uint64_t kLoraSeedSalt = 0x9e3779b97f4a7c15ull;
constexpr uint64_t kShuffleSeedSalt = 0xbf58476d1ce4e5b9ull;
constexpr uint64_t kDropoutSeedSalt = 0x94d049bb133111ebull;
// Gradients are summed within fixed chunks of this many examples, then the
// chunk sums are reduced in order; the result is identical for any thread
// count.
constexpr int kChunkSize = 8;

// Backward companion of rmsnorm_rows. Returns dx and accumulates the gain
// gradient.
Matrix rmsnorm_backward(const Matrix& x, const Vector& inv_rms, const Matrix& gain,
                        const Matrix& dy, Matrix& dgain) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  Matrix dx(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double inv = inv_rms(i);
    dgain.row(0) += dy.row(i).cwiseProduct(x.row(i)) * inv;
    const auto w = dy.row(i).cwiseProduct(gain.row(0));
    const double w_dot_x = w.dot(x.row(i));
    dx.row(i) = inv * w -
                (inv * inv * inv / static_cast<double>(cols)) * w_dot_x * x.row(i);
  }
  return dx;
}

}  // namespace

LossValue bce_loss(const Vector& scores, int gt) {
  if (gt < 0 || gt >= scores.size()) {
    throw DataError("bce_loss: ground-truth index " + std::to_string(gt) +
                    " out of range for " + std::to_string(scores.size()) + " items");
  }
  LossValue value;
  value.scores = scores;
  value.gt = gt;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double y = std::clamp(scores(i), kScoreClamp, 1.0 - kScoreClamp);
    loss -= (i == gt) ? std::log(y) : std::log1p(-y);
  }
  value.loss = loss;
  return value;
}

Vector bce_logit_gradient(const Vector& scores, int gt) {
  Vector dz(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double y = scores(i);
    if (y < kScoreClamp || y > 1.0 - kScoreClamp) {
      dz(i) = 0.0;  // clamped term is constant in the score
      continue;
    }
    dz(i) = (i == gt) ? y - 1.0 : y;
  }
  return dz;
}

Gradients zeros_like(const ModelParameters& params) {
  Gradients grads = params;
  for (NamedTensor& entry : tensor_list(grads)) {
    entry.tensor->setZero();
  }
  return grads;
}

void apply_freeze_mask(Gradients& grads, const ModelParameters& params) {
  if (!params.has_lora()) return;
  for (NamedTensor& entry : tensor_list(grads)) {
    if (!entry.trainable) entry.tensor->setZero();
  }
}

void accumulate_gradients(const ForwardTrace& trace, const LossValue& loss,
                          const ModelParameters& params, const ModelConfig& config,
                          Gradients& accum) {
  const int l = static_cast<int>(trace.hidden.rows());
  const int d = config.d;
  const int nh = config.n_heads;
  const int hd = config.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  if (static_cast<int>(trace.attn.size()) != config.n_sublayers()) {
    throw ConfigError("backward: trace does not match the configuration");
  }
  if (loss.scores.size() != params.adapter.cols()) {
    throw ConfigError("backward: score vector does not match the adapter");
  }

  // Readout: scores = sigmoid(h_last * adapter).
  const Vector dz = bce_logit_gradient(loss.scores, loss.gt);
  accum.adapter.noalias() += trace.hidden.row(l - 1).transpose() * dz.transpose();
  Matrix dhidden = Matrix::Zero(l, d);
  dhidden.row(l - 1) = (params.adapter * dz).transpose();

  Matrix dx =
      rmsnorm_backward(trace.x_final, trace.final_inv_rms, params.final_gain,
                       dhidden, accum.final_gain);

  for (int s = config.n_sublayers() - 1; s >= 0; --s) {
    const SublayerParams& layer = params.layers[static_cast<size_t>(s)];
    SublayerParams& gl = accum.layers[static_cast<size_t>(s)];
    const AttnTrace& at = trace.attn[static_cast<size_t>(s)];
    const FfnTrace& ft = trace.ffn[static_cast<size_t>(s)];

    // Feed-forward sublayer: x_out = x_in + silu(normed * w1) * w2.
    gl.w2.noalias() += ft.act.transpose() * dx;
    Matrix dact(l, config.ffn_dim());
    dact.noalias() = dx * layer.w2.transpose();
    // silu'(x) = s + x*s*(1-s) with s reused from the forward pass
    const Matrix dsilu =
        (ft.sig.array() +
         ft.pre_act.array() * ft.sig.array() * (1.0 - ft.sig.array()))
            .matrix();
    Matrix dpre = dact.cwiseProduct(dsilu);
    gl.w1.noalias() += ft.normed.transpose() * dpre;
    Matrix dnormed(l, d);
    dnormed.noalias() = dpre * layer.w1.transpose();
    dx += rmsnorm_backward(ft.x_in, ft.inv_rms, layer.ffn_gain, dnormed, gl.ffn_gain);

    // Attention sublayer: x_mid = x_in + heads_out * wo.
    gl.wo.noalias() += at.heads_out.transpose() * dx;
    Matrix dheads(l, d);
    dheads.noalias() = dx * layer.wo.transpose();

    Matrix dq = Matrix::Zero(l, d);
    Matrix dk = Matrix::Zero(l, d);
    Matrix dv = Matrix::Zero(l, d);
    const AttentionMask& mask = trace.schedule[static_cast<size_t>(s)];
    std::vector<std::vector<int>> allowed(static_cast<size_t>(l));
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < l; ++j) {
        if (mask.allowed(i, j)) allowed[static_cast<size_t>(i)].push_back(j);
      }
    }
    std::vector<double> dp;
    for (int h = 0; h < nh; ++h) {
      const Matrix& p = at.probs[static_cast<size_t>(h)];
      const int off = h * hd;
      for (int i = 0; i < l; ++i) {
        const std::vector<int>& cols = allowed[static_cast<size_t>(i)];
        if (cols.empty()) continue;
        const auto dout = dheads.row(i).segment(off, hd);
        dp.assign(cols.size(), 0.0);
        double dot = 0.0;
        for (size_t c = 0; c < cols.size(); ++c) {
          const int j = cols[c];
          dp[c] = dout.dot(at.v.row(j).segment(off, hd));
          dv.row(j).segment(off, hd) += p(i, j) * dout;
          dot += p(i, j) * dp[c];
        }
        for (size_t c = 0; c < cols.size(); ++c) {
          const int j = cols[c];
          const double dscore = p(i, j) * (dp[c] - dot) * scale;
          dq.row(i).segment(off, hd) += dscore * at.k.row(j).segment(off, hd);
          dk.row(j).segment(off, hd) += dscore * at.q.row(i).segment(off, hd);
        }
      }
    }

    Matrix dnormed_attn = Matrix::Zero(l, d);
    gl.wq.noalias() += at.normed.transpose() * dq;
    gl.wk.noalias() += at.normed.transpose() * dk;
    gl.wv.noalias() += at.normed.transpose() * dv;
    dnormed_attn.noalias() += dq * layer.wq.transpose();
    dnormed_attn.noalias() += dk * layer.wk.transpose();
    dnormed_attn.noalias() += dv * layer.wv.transpose();

    if (params.has_lora()) {
      const double lora_scale = config.lora->alpha / static_cast<double>(config.lora->rank);
      auto lora_backward = [&](const Matrix& a, const Matrix& b, Matrix& ga, Matrix& gb,
                               const Matrix& mid, const Matrix& drop,
                               const Matrix& dproj) {
        // proj += lora_scale * (input * a^T) * b^T, input = normed (dropped).
        gb.noalias() += lora_scale * dproj.transpose() * mid;
        Matrix dmid(l, a.rows());
        dmid.noalias() = lora_scale * dproj * b;
        Matrix dinput(l, d);
        dinput.noalias() = dmid * a;
        if (drop.size() > 0) {
          ga.noalias() += dmid.transpose() * at.normed.cwiseProduct(drop);
          dnormed_attn += dinput.cwiseProduct(drop);
        } else {
          ga.noalias() += dmid.transpose() * at.normed;
          dnormed_attn += dinput;
        }
      };
      lora_backward(layer.lora_a_q, layer.lora_b_q, gl.lora_a_q, gl.lora_b_q,
                    at.lora_mid_q, at.lora_drop_q, dq);
      lora_backward(layer.lora_a_k, layer.lora_b_k, gl.lora_a_k, gl.lora_b_k,
                    at.lora_mid_k, at.lora_drop_k, dk);
      lora_backward(layer.lora_a_v, layer.lora_b_v, gl.lora_a_v, gl.lora_b_v,
                    at.lora_mid_v, at.lora_drop_v, dv);
    }

    dx += rmsnorm_backward(at.x_in, at.inv_rms, layer.attn_gain, dnormed_attn,
                           gl.attn_gain);
  }

  for (int i = 0; i < l; ++i) {
    accum.tok_emb.row(trace.token_ids[static_cast<size_t>(i)]) += dx.row(i);
    accum.pos_emb.row(i) += dx.row(i);
  }
}

Gradients backward(const ForwardTrace& trace, const LossValue& loss,
                   const ModelParameters& params, const ModelConfig& config) {
  Gradients grads = zeros_like(params);
  accumulate_gradients(trace, loss, params, config, grads);
  apply_freeze_mask(grads, params);
  return grads;
}

AdamState::AdamState(ModelParameters& params, AdamConfig config) : config_(config) {
  for (NamedTensor& entry : tensor_list(params)) {
    m_.push_back(Matrix::Zero(entry.tensor->rows(), entry.tensor->cols()));
    v_.push_back(Matrix::Zero(entry.tensor->rows(), entry.tensor->cols()));
  }
}

void adam_step(ModelParameters& params, const Gradients& grads, AdamState& state) {
  const std::vector<NamedTensor> targets = tensor_list(params);
  // tensor_list needs mutable access; gradients are not modified here.
  const std::vector<NamedTensor> sources = tensor_list(const_cast<Gradients&>(grads));
  if (targets.size() != sources.size() || targets.size() != state.m_.size()) {
    throw ConfigError("adam_step: parameter and gradient shapes do not match");
  }
  ++state.step_;
  const AdamConfig& cfg = state.config_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_));
  for (size_t t = 0; t < targets.size(); ++t) {
    const Matrix& g = *sources[t].tensor;
    if (g.rows() != targets[t].tensor->rows() || g.cols() != targets[t].tensor->cols()) {
      throw ConfigError("adam_step: shape mismatch for tensor " + targets[t].name);
    }
    Matrix& m = state.m_[t];
    Matrix& v = state.v_[t];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    targets[t].tensor->array() -=
        cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
  }
}

namespace {

struct PreparedExample {
  SegmentedSequence seq;
  int label = -1;
};

std::vector<PreparedExample> prepare_examples(const std::vector<Example>& examples,
                                              const Catalog& catalog,
                                              const Vocabulary& vocab,
                                              const std::string& prompt, int max_len) {
  std::vector<PreparedExample> prepared;
  prepared.reserve(examples.size());
  for (const Example& example : examples) {
    std::vector<std::string> titles;
    titles.reserve(example.history.size());
    for (int item : example.history) {
      titles.push_back(catalog.titles[static_cast<size_t>(item)]);
    }
    prepared.push_back(PreparedExample{
        tokenize_instruction(prompt, titles, vocab, max_len), example.label});
  }
  return prepared;
}

struct ChunkResult {
  Gradients grads;
  double loss_sum = 0.0;
};

}  // namespace

TrainResult train(const ModelConfig& config, const TrainOptions& options,
                  const DatasetSplits& splits, const Catalog& catalog,
                  const Vocabulary& vocab) {
  config.validate();
  if (splits.train.empty()) throw DataError("train: empty training split");
  if (options.epochs < 1 || options.batch_size < 1) {
    throw ConfigError("train: epochs and batch_size must be >= 1");
  }

  ModelParameters params = init_params(config);
  if (config.lora) {
    params = lora_apply(params, *config.lora, config.seed ^ kLoraSeedSalt);
  }

  const std::vector<PreparedExample> train_set = prepare_examples(
      splits.train, catalog, vocab, options.prompt, config.max_len);

  Rng shuffle_rng(config.seed ^ kShuffleSeedSalt);
  AdamState adam(params, AdamConfig{options.lr, 0.9, 0.999, 1e-8});

  TrainResult result;
  result.config = config;
  result.params = params;
  result.best_val_prec10 = -1.0;

  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  const int n_train = static_cast<int>(train_set.size());
  const int threads = std::max(1, options.threads);
  const int max_chunks = (options.batch_size + kChunkSize - 1) / kChunkSize;

  // Reusable accumulation buffers; chunk sums always reduce in chunk order.
  std::vector<ChunkResult> pool;
  pool.reserve(static_cast<size_t>(max_chunks));
  for (int c = 0; c < max_chunks; ++c) pool.push_back({zeros_like(params), 0.0});
  std::vector<std::vector<NamedTensor>> pool_tensors;
  for (ChunkResult& slot : pool) pool_tensors.push_back(tensor_list(slot.grads));
  Gradients batch_grads = zeros_like(params);
  std::vector<NamedTensor> acc = tensor_list(batch_grads);

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double epoch_loss_sum = 0.0;
    int batch_index = 0;
    for (int begin = 0; begin < n_train; begin += options.batch_size, ++batch_index) {
      const int end = std::min(begin + options.batch_size, n_train);
      const int batch_n = end - begin;
      const int n_chunks = (batch_n + kChunkSize - 1) / kChunkSize;

      const uint64_t dropout_base =
          (config.seed ^ kDropoutSeedSalt) + static_cast<uint64_t>(epoch) * 0x10000000ull;
      auto run_chunk = [&](int chunk) {
        ChunkResult& out = pool[static_cast<size_t>(chunk)];
        for (NamedTensor& entry : pool_tensors[static_cast<size_t>(chunk)]) {
          entry.tensor->setZero();
        }
        out.loss_sum = 0.0;
        const int c_begin = begin + chunk * kChunkSize;
        const int c_end = std::min(c_begin + kChunkSize, end);
        for (int e = c_begin; e < c_end; ++e) {
          const PreparedExample& ex =
              train_set[static_cast<size_t>(order[static_cast<size_t>(e)])];
          Rng dropout_rng(dropout_base + static_cast<uint64_t>(e));
          try {
            const ForwardTrace trace =
                model_forward(ex.seq, params, config, /*training=*/true, &dropout_rng);
            const LossValue loss = bce_loss(score_items(trace.hidden, params), ex.label);
            out.loss_sum += loss.loss;
            accumulate_gradients(trace, loss, params, config, out.grads);
          } catch (const NumericalError& err) {
            throw NumericalError(std::string(err.what()) + " (epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index) + ")");
          }
        }
      };

      if (threads > 1 && n_chunks > 1) {
        std::vector<std::future<void>> futures;
        futures.reserve(static_cast<size_t>(n_chunks));
        for (int c = 0; c < n_chunks; ++c) {
          futures.push_back(std::async(std::launch::async, run_chunk, c));
        }
        for (auto& f : futures) f.get();
      } else {
        for (int c = 0; c < n_chunks; ++c) run_chunk(c);
      }

      double batch_loss_sum = 0.0;
      for (NamedTensor& entry : acc) entry.tensor->setZero();
      for (int c = 0; c < n_chunks; ++c) {
        const std::vector<NamedTensor>& part = pool_tensors[static_cast<size_t>(c)];
        for (size_t t = 0; t < acc.size(); ++t) {
          *acc[t].tensor += *part[t].tensor;
        }
        batch_loss_sum += pool[static_cast<size_t>(c)].loss_sum;
      }
      if (!std::isfinite(batch_loss_sum)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                             " batch " + std::to_string(batch_index));
      }
      const double inv_batch = 1.0 / static_cast<double>(batch_n);
      for (NamedTensor& entry : acc) {
        *entry.tensor *= inv_batch;
      }
      apply_freeze_mask(batch_grads, params);
      adam_step(params, batch_grads, adam);
      epoch_loss_sum += batch_loss_sum;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss_sum / static_cast<double>(n_train);
    if (!splits.validation.empty()) {
      const RankingReport report =
          evaluate(EvalContext{params, config, catalog, vocab, options.prompt},
                   splits.validation);
      log.val_prec10 = report.prec10;
      log.val_ndcg10 = report.ndcg10;
    }
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
            .count();
    result.log.push_back(log);

    const bool improved = splits.validation.empty()
                              ? true  // no validation signal: keep the last epoch
                              : log.val_prec10 > result.best_val_prec10;
    if (improved) {
      result.best_val_prec10 = log.val_prec10;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

std::string train_log_tsv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  for (const EpochLog& row : log) {
    char line[160];
    std::snprintf(line, sizeof(line), "%d\t%.12g\t%.12g\t%.12g\t%.3f\n", row.epoch,
                  row.train_loss, row.val_prec10, row.val_ndcg10, row.wall_seconds);
    out << line;
  }
  return out.str();
}

}  // namespace iamrec
