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

#include "iamrec/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace iamrec {

namespace {

// 4 description tokens, items of 3/2/2 tokens, suffix marker: 12 positions.
SegmentedSequence gradcheck_sequence(const ModelConfig& config, Rng& rng) {
  SegmentedSequence seq;
  auto push = [&](SegmentLabel label) {
    seq.token_ids.push_back(rng.uniform_int(config.vocab_size));
    seq.labels.push_back(label);
  };
  for (int i = 0; i < 4; ++i) push(SegmentLabel::description());
  const int item_sizes[3] = {3, 2, 2};
  for (int item = 0; item < 3; ++item) {
    for (int t = 0; t < item_sizes[item]; ++t) push(SegmentLabel::item_token(item));
  }
  push(SegmentLabel::description());
  return seq;
}

}  // namespace

GradCheckResult grad_check_variant(Variant variant, const GradCheckOptions& options) {
  ModelConfig config;
  config.d = 16;
  config.n_heads = 4;
  config.n_blocks = 2;
  config.ffn_mult = 4;
  config.vocab_size = 30;
  config.max_len = 16;
  config.n_items = 20;
  config.seed = options.seed;
  config.variant = variant;

  Rng rng(options.seed ^ 0xabcdef1234567890ull);
  const SegmentedSequence seq = gradcheck_sequence(config, rng);
  const int gt = rng.uniform_int(config.n_items);

  ModelParameters params = init_params(config);
  auto loss_at = [&]() {
    const ForwardTrace trace = model_forward(seq, params, config);
    return bce_loss(score_items(trace.hidden, params), gt).loss;
  };

  const ForwardTrace trace = model_forward(seq, params, config);
  const LossValue loss = bce_loss(score_items(trace.hidden, params), gt);
  Gradients grads = backward(trace, loss, params, config);

  std::vector<NamedTensor> param_tensors = tensor_list(params);
  std::vector<NamedTensor> grad_tensors = tensor_list(grads);

  GradCheckResult result;
  result.variant = variant;
  result.n_coords = options.n_coords;
  bool corrupted = !options.corrupt;
  for (int c = 0; c < options.n_coords; ++c) {
    const size_t t = static_cast<size_t>(rng.uniform_int(static_cast<int>(param_tensors.size())));
    Matrix& tensor = *param_tensors[t].tensor;
    const Eigen::Index i = rng.uniform_int(static_cast<int>(tensor.rows()));
    const Eigen::Index j = rng.uniform_int(static_cast<int>(tensor.cols()));

    const double saved = tensor(i, j);
    tensor(i, j) = saved + options.epsilon;
    const double loss_plus = loss_at();
    tensor(i, j) = saved - options.epsilon;
    const double loss_minus = loss_at();
    tensor(i, j) = saved;

    const double fd = (loss_plus - loss_minus) / (2.0 * options.epsilon);
    double analytic = (*grad_tensors[t].tensor)(i, j);
    if (!corrupted) {
      analytic += 1e-2;
      corrupted = true;
    }
    const double rel =
        std::abs(analytic - fd) / std::max(std::abs(analytic) + std::abs(fd), 1.0);
    result.max_rel_err = std::max(result.max_rel_err, rel);
  }
  result.passed = result.max_rel_err < options.tolerance;
  return result;
}

}  // namespace iamrec
