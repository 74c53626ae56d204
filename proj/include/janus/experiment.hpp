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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "janus/encoder.hpp"
#include "janus/gating.hpp"
#include "janus/metrics.hpp"
#include "janus/model.hpp"
#include "janus/phantom.hpp"

namespace janus {

inline constexpr int kConfigSchemaVersion = 1;

struct SplitCounts {
  std::size_t train = 200;
  std::size_t val = 100;
  std::size_t test_internal = 200;
  std::size_t test_external = 200;

  std::size_t of(Split s) const;
  bool operator==(const SplitCounts&) const = default;
};

struct PreprocessConfig {
  Spacing3 target_spacing{3.0, 2.0, 2.0};
  Extent3 target_shape{12, 48, 48};
  std::size_t stride = 2;
  std::array<std::size_t, 2> input_size{48, 48};
  bool operator==(const PreprocessConfig&) const = default;
};

struct ArmConfig {
  std::string id;
  FusionMode fusion = FusionMode::Gated;
  bool operator==(const ArmConfig&) const = default;
};

// Everything an experiment needs. Seeds of the phantom, training and metrics
// stages are derived from the root seed and are not stored separately.
struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::string dataset_dir = "dataset";
  std::string output_dir = "runs";
  std::uint64_t seed = 1;
  PhantomSpec phantom = default_phantom_spec();
  SplitCounts counts;
  PreprocessConfig preprocess;
  EncoderConfig encoder;
  TrainConfig train;
  std::vector<ArmConfig> arms{{"gated", FusionMode::Gated}, {"concat", FusionMode::Concat}, {"none", FusionMode::None}};
  MetricOptions metrics;
  VetoOptions veto;
  std::vector<double> corruption_levels{10.0, 20.0, 50.0};
  bool augment = false;

  const ArmConfig& arm(const std::string& id) const;
  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig default_experiment_config();
// Throws ConfigError on unknown keys, wrong types or an unsupported schema_version.
ExperimentConfig parse_config(const std::string& json_text);
std::string emit_config(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);

// Labelled derivations of the root seed.
std::uint64_t dataset_seed(const ExperimentConfig& c);
std::uint64_t train_seed(const ExperimentConfig& c);
std::uint64_t bootstrap_seed(const ExperimentConfig& c);
std::uint64_t corruption_seed(const ExperimentConfig& c, double level);

// Phantom spec with its seed set from the root seed.
PhantomSpec dataset_spec(const ExperimentConfig& c);

struct Dataset {
  std::vector<std::string> labels;
  std::vector<std::string> families;
  std::vector<std::vector<std::string>> features;  // per label
  std::map<Split, std::vector<PhantomSample>> splits;

  const std::vector<PhantomSample>& split(Split s) const;
};

Dataset generate_dataset(const ExperimentConfig& c);
void write_dataset(const Dataset& d, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir, std::initializer_list<Split> splits);

std::vector<PriorNormalizer> fit_normalizers(const Dataset& d);

// Clip, resample, crop/pad, tri-slice, dilate ROIs and project them to tokens,
// z-score the priors.
Example make_example(const ExperimentConfig& c, const PhantomSample& s, const std::vector<PriorNormalizer>& norms);
std::vector<Example> make_examples(const ExperimentConfig& c, const std::vector<PhantomSample>& samples,
                                   const std::vector<PriorNormalizer>& norms);
// Same examples with priors replaced from (possibly corrupted) samples.
std::vector<Example> with_priors(const std::vector<Example>& examples, const std::vector<PhantomSample>& samples,
                                 const std::vector<PriorNormalizer>& norms);

ModelConfig model_config(const ExperimentConfig& c, const Dataset& d, FusionMode fusion);
std::string model_config_json(const ModelConfig& m);

TrainResult train_arm(const ExperimentConfig& c, const Dataset& d, const std::vector<Example>& train_set,
                      const std::vector<Example>& val_set, FusionMode fusion,
                      const std::function<void(const EpochLog&)>& on_epoch = {});

PredictionSet predict_set(Model& model, const std::vector<Example>& examples, const std::vector<std::string>& labels,
                          const std::string& model_id);

// Macro AUROC over the labels of one family.
std::optional<double> family_auroc(const PredictionSet& set, const std::vector<std::string>& families,
                                   const std::string& family);
std::vector<std::string> distinct_families(const std::vector<std::string>& families);

struct GateRow {
  std::string sample_id;
  std::string label;
  std::optional<bool> y;
  double feature_value = 0.0;
  double mean_gate = 0.0;
};

// Mean gate of the first label whose priors include `feature`.
std::vector<GateRow> gate_analysis(Model& model, const Dataset& d, const std::vector<PhantomSample>& samples,
                                   const std::vector<Example>& examples, const std::string& feature);
std::string gate_analysis_csv(const std::vector<GateRow>& rows);

struct SweepRow {
  std::string arm;
  double level = 0.0;
  std::optional<double> macro_auroc;
};
std::string sweep_csv(const std::vector<SweepRow>& rows);

// ---- Commands -----------------------------------------------------------------
// Each writes below the configured directories and reports progress to `log`.
void cmd_generate(const ExperimentConfig& c, std::ostream& log);
void cmd_train(const ExperimentConfig& c, const std::string& arm, std::ostream& log);
void cmd_evaluate(const ExperimentConfig& c, Split split, std::ostream& log);
void cmd_corruption_sweep(const ExperimentConfig& c, Split split, std::ostream& log);
void cmd_gate_analysis(const ExperimentConfig& c, const std::string& arm, const std::string& feature, std::ostream& log);

}  // namespace janus
