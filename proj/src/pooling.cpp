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

#include "janus/pooling.hpp"

#include <algorithm>
#include <limits>

#include "janus/encoder.hpp"

namespace janus {

PoolParams PoolParams::init(std::size_t dim, std::uint64_t seed, const std::string& prefix) {
  PoolParams p;
  p.scorer = Parameter(prefix + ".scorer", init_uniform({dim, 1}, dim, seed, prefix + ".scorer"));
  p.beta_in = Parameter(prefix + ".beta_in", Tensor::scalar(0.0));
  p.log_tau = Parameter(prefix + ".log_tau", Tensor::scalar(0.0));
  return p;
}

std::vector<Parameter*> PoolParams::parameters() { return {&scorer, &beta_in, &log_tau}; }

PoolOutput pool(const Var& tokens, const TokenMask& mask, const Var& scorer, const Var& beta_in,
                const Var& log_tau) {
  Tape& tape = tokens.tape();
  const Shape s = tokens.shape();
  if (s.size() != 3 || s[0] != mask.slices || s[1] != mask.tokens()) {
    throw DimensionError("pool: tokens " + shape_str(s) + " do not match token mask [" +
                         std::to_string(mask.slices) + "," + std::to_string(mask.tokens()) + "]");
  }
  const std::size_t t_count = s[0], n = s[1], d = s[2];

  if (mask.empty()) {
    Var flat = reshape(tokens, {t_count * n, d});
    Var w = tape.constant(Tensor({t_count, n}, 1.0 / static_cast<double>(t_count * n)));
    return {mean(flat, 0), w, true};
  }

  Var phi = reshape(matmul(tokens, scorer), {t_count, n});
  const Tensor m = mask.as_tensor();

  // The softmax is invariant to a per-slice shift, so logits are centred on
  // the in-ROI maximum of phi and the ROI indicator is taken relative to its
  // in-ROI value (1). Mathematically identical to the uncentred form; the
  // beta_in term is exactly zero on the support.
  Tensor phi_ref({t_count, n});
  Tensor m_rel({t_count, n});
  for (std::size_t t = 0; t < t_count; ++t) {
    double mx = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (m[t * n + i] == 0.0) continue;
      mx = any ? std::max(mx, phi.value()[t * n + i]) : phi.value()[t * n + i];
      any = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      phi_ref[t * n + i] = mx;
      m_rel[t * n + i] = any ? m[t * n + i] - 1.0 : 0.0;
    }
  }
  Var centred = add(sub(phi, tape.constant(std::move(phi_ref))), mul(tape.constant(std::move(m_rel)), beta_in));
  Var logits = mul(centred, exp(scale(log_tau, -1.0)));
  MaskedSoftmax sm = masked_softmax(logits, m, 1);

  Var per_slice = reshape(matmul(reshape(sm.weights, {t_count, 1, n}), tokens), {t_count, d});
  return {mean(per_slice, 0), sm.weights, false};
}

PoolOutput pool(Tape& tape, const Var& tokens, const TokenMask& mask, PoolParams& params) {
  return pool(tokens, mask, tape.param(params.scorer), tape.param(params.beta_in), tape.param(params.log_tau));
}

Tensor attention_map(const Tensor& tokens, const TokenMask& mask, PoolParams& params) {
  Tape tape;
  Var u = tape.constant(tokens);
  return pool(tape, u, mask, params).weights.value();
}

}  // namespace janus
