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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "janus/gating.hpp"
#include "janus/metrics.hpp"
#include "janus/model.hpp"
#include "janus/phantom.hpp"
#include "janus/volume.hpp"

namespace janus::io {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path);
// Creates parent directories; throws IoError with the path on failure.
void write_text(const fs::path& path, const std::string& text);

// <stem>.bin holds raw voxels (z-major); <stem>.json holds
// {"dtype", "shape": [D, H, W], "spacing": [sz, sy, sx]}. Volumes are
// little-endian float64, masks one uint8 (0 or 1) per voxel.
void write_volume(const fs::path& stem, const Volume& v);
Volume read_volume(const fs::path& stem);
void write_mask(const fs::path& stem, const BinaryMask& m);
BinaryMask read_mask(const fs::path& stem);

struct PriorRow {
  std::string sample_id;
  std::string label;
  std::string feature;
  double value = 0.0;
};

// sample_id,label,feature,value
std::string priors_csv(const std::vector<PriorRow>& rows);
std::vector<PriorRow> parse_priors_csv(const std::string& text);

struct ManifestEntry {
  std::string id;
  Split split = Split::Train;
  std::vector<std::optional<bool>> labels;
};

struct Manifest {
  std::vector<std::string> labels;
  std::vector<std::string> families;
  std::vector<std::vector<std::string>> features;  // per label
  std::vector<ManifestEntry> samples;
};

std::string manifest_json(const Manifest& m);
Manifest parse_manifest(const std::string& text);

// <stem>.bin holds the concatenated float64 values of every parameter;
// <stem>.json lists {name, shape, offset} in order.
void write_checkpoint(const fs::path& stem, Model& model, const std::string& model_config_json);
// Loads values into an already initialized model with matching names and shapes.
void read_checkpoint(const fs::path& stem, Model& model);

std::string normalizers_json(const std::vector<PriorNormalizer>& norms);
std::vector<PriorNormalizer> parse_normalizers(const std::string& text);

// sample_id,label,y,p_model with y in {0,1,NA}.
std::string predictions_csv(const PredictionSet& set);
PredictionSet parse_predictions_csv(const std::string& text, const std::string& model_id);

std::string metrics_json(const MetricReport& r);
// label,metric,value,ci_lo,ci_hi (label "macro" for the macro rows).
std::string metrics_csv(const MetricReport& r);

std::string train_log_line(const EpochLog& e);
std::vector<EpochLog> parse_train_log(const std::string& text);

// t,i,weight
std::string attention_csv(const Tensor& weights);

std::string format_double(double v);

}  // namespace janus::io
