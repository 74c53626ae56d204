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
#include <span>
#include <string>
#include <vector>

#include "janus/numerics.hpp"

namespace janus {

struct PriorFeature {
  std::string name;
  std::string unit;
};

// Raw macro-radiomic prior values for one label of one sample.
struct PriorVector {
  int label = 0;
  std::vector<double> values;
};

inline constexpr double kStdFloor = 1e-6;

// Per-feature z-score statistics from the training split (population std,
// floored at kStdFloor).
struct PriorNormalizer {
  std::vector<std::string> features;
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t size() const noexcept { return mean.size(); }
  std::vector<double> apply(std::span<const double> raw) const;
  bool operator==(const PriorNormalizer&) const = default;
};

PriorNormalizer fit_normalizer(std::span<const std::vector<double>> training,
                               std::vector<std::string> feature_names = {});

inline constexpr double kGateBiasInit = 2.0;
inline constexpr double kGateLogitClamp = 30.0;

struct GateParams {
  Parameter weight;  // [d, K]
  Parameter bias;    // [d]

  // bias = 2.0 everywhere, weight ~ U(+-0.01/sqrt(K)).
  static GateParams init(std::size_t dim, std::size_t k, std::uint64_t seed, const std::string& prefix);
  std::vector<Parameter*> parameters();
};

// g = sigmoid(clamp(W s + b, +-30)), returned as [d].
Var gate(const Var& s_norm, const Var& weight, const Var& bias);
Var gate(Tape& tape, std::span<const double> s_norm, GateParams& params);

// Element-wise z_v * g.
Var modulate(const Var& z_v, const Var& g);

double mean_gate(std::span<const double> g);

}  // namespace janus
