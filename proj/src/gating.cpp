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

#include "janus/gating.hpp"

#include <algorithm>
#include <cmath>

#include "janus/rng.hpp"

namespace janus {

std::vector<double> PriorNormalizer::apply(std::span<const double> raw) const {
  if (raw.size() != mean.size()) {
    throw DimensionError("normalizer expects " + std::to_string(mean.size()) + " features, got " +
                         std::to_string(raw.size()));
  }
  std::vector<double> out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) out[k] = (raw[k] - mean[k]) / std[k];
  return out;
}

PriorNormalizer fit_normalizer(std::span<const std::vector<double>> training,
                               std::vector<std::string> feature_names) {
  if (training.empty()) throw ArgumentError("fit_normalizer: empty training set");
  const std::size_t k = training[0].size();
  PriorNormalizer n;
  n.mean.assign(k, 0.0);
  n.std.assign(k, 0.0);
  for (const auto& row : training) {
    if (row.size() != k) throw DimensionError("fit_normalizer: ragged prior vectors");
    for (std::size_t j = 0; j < k; ++j) {
      if (!std::isfinite(row[j])) throw NumericError("fit_normalizer: non-finite prior value");
      n.mean[j] += row[j];
    }
  }
  const double count = static_cast<double>(training.size());
  for (auto& m : n.mean) m /= count;
  for (const auto& row : training)
    for (std::size_t j = 0; j < k; ++j) n.std[j] += (row[j] - n.mean[j]) * (row[j] - n.mean[j]);
  for (auto& s : n.std) s = std::max(std::sqrt(s / count), kStdFloor);
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < k; ++j) feature_names.push_back("f" + std::to_string(j));
  }
  if (feature_names.size() != k) throw DimensionError("fit_normalizer: feature name count mismatch");
  n.features = std::move(feature_names);
  return n;
}

GateParams GateParams::init(std::size_t dim, std::size_t k, std::uint64_t seed, const std::string& prefix) {
  if (k == 0) throw ArgumentError("gate: prior vector must have at least one feature");
  GateParams p;
  Rng rng(derive_seed(seed, prefix + ".weight"));
  const double bound = 0.01 / std::sqrt(static_cast<double>(k));
  Tensor w({dim, k});
  for (double& v : w.values()) v = uniform(rng, -bound, bound);
  p.weight = Parameter(prefix + ".weight", std::move(w));
  p.bias = Parameter(prefix + ".bias", Tensor({dim}, kGateBiasInit));
  return p;
}

std::vector<Parameter*> GateParams::parameters() { return {&weight, &bias}; }

Var gate(const Var& s_norm, const Var& weight, const Var& bias) {
  const Shape ws = weight.shape();
  if (ws.size() != 2 || s_norm.value().size() != ws[1] || bias.value().size() != ws[0]) {
    throw DimensionError("gate: weight " + shape_str(ws) + ", prior " + shape_str(s_norm.shape()) +
                         ", bias " + shape_str(bias.shape()) + " disagree");
  }
  Var s = reshape(s_norm, {ws[1], 1});
  Var logits = add(reshape(matmul(weight, s), {ws[0]}), bias);
  return sigmoid(clamp(logits, -kGateLogitClamp, kGateLogitClamp));
}

Var gate(Tape& tape, std::span<const double> s_norm, GateParams& params) {
  Var s = tape.constant(Tensor::vector({s_norm.begin(), s_norm.end()}));
  return gate(s, tape.param(params.weight), tape.param(params.bias));
}

Var modulate(const Var& z_v, const Var& g) {
  if (z_v.shape() != g.shape()) {
    throw DimensionError("modulate: " + shape_str(z_v.shape()) + " vs " + shape_str(g.shape()));
  }
  return mul(z_v, g);
}

double mean_gate(std::span<const double> g) {
  if (g.empty()) throw ArgumentError("mean_gate: empty gate");
  double s = 0.0;
  for (double v : g) s += v;
  return s / static_cast<double>(g.size());
}

}  // namespace janus
