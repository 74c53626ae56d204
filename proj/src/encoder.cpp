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

#include "janus/encoder.hpp"

#include <cmath>

#include "janus/rng.hpp"

namespace janus {

Tensor init_uniform(const Shape& shape, std::size_t fan_in, std::uint64_t seed, const std::string& name) {
  Rng rng(derive_seed(seed, name));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(shape);
  for (double& v : t.values()) v = uniform(rng, -bound, bound);
  return t;
}

EncoderParams EncoderParams::init(const EncoderConfig& config, std::uint64_t seed) {
  if (config.dim == 0 || config.patch == 0) throw ArgumentError("encoder: dim and patch must be positive");
  EncoderParams p;
  p.config = config;
  const std::size_t d = config.dim;
  const std::size_t in = 3 * config.patch * config.patch;
  auto uni = [&](const std::string& name, const Shape& shape, std::size_t fan_in) {
    return Parameter("encoder." + name, init_uniform(shape, fan_in, seed, "encoder." + name));
  };
  p.patch_w = uni("patch_w", {in, d}, in);
  p.patch_b = uni("patch_b", {d}, in);
  if (config.attention) {
    const std::size_t h = d * config.mlp_ratio;
    p.ln1_g = Parameter("encoder.ln1_g", Tensor({d}, 1.0));
    p.ln1_b = Parameter("encoder.ln1_b", Tensor({d}, 0.0));
    p.wq = uni("wq", {d, d}, d);
    p.bq = uni("bq", {d}, d);
    p.wk = uni("wk", {d, d}, d);
    p.wv = uni("wv", {d, d}, d);
    p.bv = uni("bv", {d}, d);
    p.wo = uni("wo", {d, d}, d);
    p.bo = uni("bo", {d}, d);
    p.ln2_g = Parameter("encoder.ln2_g", Tensor({d}, 1.0));
    p.ln2_b = Parameter("encoder.ln2_b", Tensor({d}, 0.0));
    p.mlp_w1 = uni("mlp_w1", {d, h}, d);
    p.mlp_b1 = uni("mlp_b1", {h}, d);
    p.mlp_w2 = uni("mlp_w2", {h, d}, h);
    p.mlp_b2 = uni("mlp_b2", {d}, h);
  }
  return p;
}

std::vector<Parameter*> EncoderParams::parameters() {
  std::vector<Parameter*> out{&patch_w, &patch_b};
  if (config.attention) {
    for (Parameter* q : {&ln1_g, &ln1_b, &wq, &bq, &wk, &wv, &bv, &wo, &bo, &ln2_g, &ln2_b, &mlp_w1,
                         &mlp_b1, &mlp_w2, &mlp_b2})
      out.push_back(q);
  }
  return out;
}

Tensor patchify(const Tensor& slices, std::size_t patch) {
  if (slices.rank() != 4 || slices.dim(1) != 3) {
    throw DimensionError("patchify: expected [T,3,H,W], got " + shape_str(slices.shape()));
  }
  const std::size_t t_count = slices.dim(0), h = slices.dim(2), w = slices.dim(3);
  if (patch == 0 || h % patch != 0 || w % patch != 0) {
    throw DimensionError("patchify: spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                         " not divisible by patch " + std::to_string(patch));
  }
  const std::size_t gy = h / patch, gx = w / patch, n = gy * gx, pd = 3 * patch * patch;
  Tensor out({t_count, n, pd});
  for (std::size_t t = 0; t < t_count; ++t)
    for (std::size_t a = 0; a < gy; ++a)
      for (std::size_t b = 0; b < gx; ++b) {
        double* dst = &out[(t * n + a * gx + b) * pd];
        for (std::size_t c = 0; c < 3; ++c)
          for (std::size_t py = 0; py < patch; ++py)
            for (std::size_t px = 0; px < patch; ++px)
              dst[(c * patch + py) * patch + px] = slices[((t * 3 + c) * h + a * patch + py) * w + b * patch + px];
      }
  return out;
}

Var encode(Tape& tape, const Tensor& slices, EncoderParams& params) {
  const auto& cfg = params.config;
  Var patches = tape.constant(patchify(slices, cfg.patch));
  Var x = add(matmul(patches, tape.param(params.patch_w)), tape.param(params.patch_b));
  if (!cfg.attention) return x;

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  auto linear = [&](const Var& in, Parameter& w, Parameter& b) {
    return add(matmul(in, tape.param(w)), tape.param(b));
  };
  Var h = layer_norm(x, tape.param(params.ln1_g), tape.param(params.ln1_b));
  Var q = linear(h, params.wq, params.bq);
  Var k = matmul(h, tape.param(params.wk));
  Var v = linear(h, params.wv, params.bv);
  Var scores = scale(matmul(q, transpose_last2(k)), inv_sqrt_d);  // [T, N, N]
  Var attn = softmax(scores, 2);
  Var ctx = matmul(attn, v);
  x = add(x, linear(ctx, params.wo, params.bo));

  Var h2 = layer_norm(x, tape.param(params.ln2_g), tape.param(params.ln2_b));
  Var mlp = linear(gelu(linear(h2, params.mlp_w1, params.mlp_b1)), params.mlp_w2, params.mlp_b2);
  return add(x, mlp);
}

}  // namespace janus
