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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "janus/encoder.hpp"
#include "janus/gating.hpp"
#include "janus/numerics.hpp"
#include "janus/pooling.hpp"
#include "janus/roi.hpp"

namespace janus {

enum class FusionMode { Gated, Concat, None };

std::string to_string(FusionMode m);
FusionMode fusion_from_string(const std::string& s);

struct ModelConfig {
  EncoderConfig encoder;
  FusionMode fusion = FusionMode::Gated;
  std::size_t concat_width = 16;
  std::vector<std::size_t> prior_dims;  // K per label

  std::size_t labels() const noexcept { return prior_dims.size(); }
  bool operator==(const ModelConfig&) const = default;
};

// Per-label parameters. Only the members used by the fusion mode exist.
struct LabelHead {
  PoolParams pool;
  GateParams gate;      // gated
  Parameter proj_w;     // concat: [W, K]
  Parameter proj_b;     // concat: [W]
  Parameter head_w;     // [d, 1] or [d + W, 1]
  Parameter head_b;     // [1]
};

class Model {
 public:
  static Model init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  EncoderParams& encoder() noexcept { return encoder_; }
  std::vector<LabelHead>& heads() noexcept { return heads_; }
  LabelHead& head(std::size_t label) { return heads_.at(label); }

  // Stable order; names are unique.
  std::vector<Parameter*> parameters();
  void zero_grad();

 private:
  ModelConfig config_;
  EncoderParams encoder_;
  std::vector<LabelHead> heads_;
};

// Preprocessed network input for one sample.
struct ModelInput {
  std::string sample_id;
  Tensor slices;                            // [T, 3, H', W']
  std::vector<TokenMask> masks;             // per label
  std::vector<std::vector<double>> priors;  // per label, z-scored
};

struct LabelTargets {
  std::vector<std::optional<bool>> values;

  std::size_t size() const noexcept { return values.size(); }
  bool observed(std::size_t l) const { return values[l].has_value(); }
};

struct Example {
  ModelInput input;
  LabelTargets targets;
};

struct ForwardResult {
  std::vector<Var> probs;  // [1] per label
  std::vector<Var> gates;  // [d] per label in gated mode
};

ForwardResult forward(Tape& tape, Model& model, const ModelInput& input);
// Pure inference.
std::vector<double> predict(Model& model, const ModelInput& input);
// Gate vector per label from the priors alone (gated mode only).
std::vector<std::vector<double>> gate_values(Model& model, std::span<const std::vector<double>> priors);

// ---- Objective ---------------------------------------------------------------
struct CurriculumSchedule {
  double w_max = 0.3;
  double e_ignore = 10.0;
  double e_ramp = 10.0;
  bool operator==(const CurriculumSchedule&) const = default;
};

// 0 up to e_ignore, linear to w_max over e_ramp epochs, w_max afterwards.
double curriculum_weight(double epoch, const CurriculumSchedule& schedule = {});

inline constexpr double kProbClamp = 1e-7;

struct LossResult {
  Var loss;
  bool empty = false;  // no observed label and zero curriculum weight
};

// sum_l [d_l BCE(p_l, y_l) + (1 - d_l) w BCE(p_l, 0)] / sum_l [d_l + (1 - d_l) w]
LossResult curriculum_loss(Tape& tape, std::span<const Var> probs, const LabelTargets& targets, double w_curriculum);
double curriculum_loss(std::span<const double> probs, const LabelTargets& targets, double w_curriculum);

// ---- Training --------------------------------------------------------------------
struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double learning_rate = 0.2;
  double momentum = 0.9;
  double grad_clip = 5.0;  // global L2 norm; 0 disables
  std::uint64_t seed = 0;
  FusionMode fusion = FusionMode::Gated;
  std::size_t stride = 1;
  CurriculumSchedule curriculum;

  bool operator==(const TrainConfig&) const = default;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> val_auroc;
  double w_curriculum = 0.0;
  std::size_t empty_samples = 0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
};

// Supplies the example for (index, epoch); used for on-the-fly augmentation.
using ExampleSource = std::function<Example(std::size_t index, std::size_t epoch)>;

// SGD with momentum and cosine learning-rate decay. Sample order per epoch is
// a seeded permutation; gradients are summed in that fixed order.
TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set, const ModelConfig& config,
                  const TrainConfig& options, const std::function<void(const EpochLog&)>& on_epoch = {},
                  const ExampleSource& source = {});

// Macro AUROC of the model over a labelled set; nullopt when undefined.
std::optional<double> macro_auroc(Model& model, std::span<const Example> set);

}  // namespace janus
