/*
 * Copyright 2026 The janus-phantom Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <vector>

#include "janus/numerics.hpp"
#include "janus/roi.hpp"

namespace janus {

// Per-label ROI attention pooling parameters.
struct PoolParams {
  Parameter scorer;   // [d, 1] linear scorer phi
  Parameter beta_in;  // [1] logit bias for ROI tokens
  Parameter log_tau;  // [1] temperature = exp(log_tau)

  static PoolParams init(std::size_t dim, std::uint64_t seed, const std::string& prefix);
  std::vector<Parameter*> parameters();
};

struct PoolOutput {
  Var embedding;  // [d]
  Var weights;    // [T, N]
  // True when the ROI is empty on every slice and uniform weights over all
  // tokens were used.
  bool fallback = false;
};

// ROI-masked attention pooling over tokens [T, N, d].
//   a = (phi(u) + beta_in * m) / tau, softmax over {i : m = 1} per slice,
//   z = (1/T) sum_t sum_i w_ti u_ti.
// Slices with an empty ROI contribute a zero vector but still count in 1/T.
PoolOutput pool(const Var& tokens, const TokenMask& mask, const Var& scorer, const Var& beta_in,
                const Var& log_tau);
PoolOutput pool(Tape& tape, const Var& tokens, const TokenMask& mask, PoolParams& params);

// Weights used by pool(), as a [T, N] tensor.
Tensor attention_map(const Tensor& tokens, const TokenMask& mask, PoolParams& params);

}  // namespace janus
