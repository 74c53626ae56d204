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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "janus/numerics.hpp"

namespace janus {

struct EncoderConfig {
  std::size_t patch = 8;
  std::size_t dim = 32;
  bool attention = true;
  std::size_t mlp_ratio = 4;

  bool operator==(const EncoderConfig&) const = default;
};

// Patch projection plus an optional pre-norm transformer block. There is no
// class or register token: every output token is a spatial patch.
struct EncoderParams {
  EncoderConfig config;
  Parameter patch_w;  // [3p^2, d]
  Parameter patch_b;  // [d]
  // Attention block (present only when config.attention).
  Parameter ln1_g, ln1_b;
  Parameter wq, bq, wk, wv, bv, wo, bo;  // no key bias: softmax cancels it
  Parameter ln2_g, ln2_b;
  Parameter mlp_w1, mlp_b1, mlp_w2, mlp_b2;

  static EncoderParams init(const EncoderConfig& config, std::uint64_t seed);
  std::vector<Parameter*> parameters();
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) tensor from a name-derived seed.
Tensor init_uniform(const Shape& shape, std::size_t fan_in, std::uint64_t seed, const std::string& name);

// [T, 3, H, W] -> [T, N, 3p^2]; patch vectors are channel-major then row-major.
Tensor patchify(const Tensor& slices, std::size_t patch);

// Returns tokens [T, N, d]. Parameters are recorded on the tape once per call.
Var encode(Tape& tape, const Tensor& slices, EncoderParams& params);

}  // namespace janus
