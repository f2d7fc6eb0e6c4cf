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

#include "iamrec/model.hpp"
#include "iamrec/training.hpp"

#include <cstdint>

namespace iamrec {

struct GradCheckOptions {
  int n_coords = 200;          // sampled parameter coordinates
  double epsilon = 1e-3;       // central-difference step
  double tolerance = 1e-4;     // guarded relative error bound
  uint64_t seed = 7;
  bool corrupt = false;        // test hook: perturb one analytic gradient
};

struct GradCheckResult {
  Variant variant = Variant::kIam;
  double max_rel_err = 0.0;
  int n_coords = 0;
  bool passed = false;
};

/// Compares reverse-mode gradients against central finite differences on a
/// small model (d=16, two blocks, 12 tokens, 20 items) in 64-bit. The
/// relative error is |a - b| / max(|a| + |b|, 1).
GradCheckResult grad_check_variant(Variant variant, const GradCheckOptions& options);

}  // namespace iamrec
