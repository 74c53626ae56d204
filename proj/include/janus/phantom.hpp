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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "janus/gating.hpp"
#include "janus/rng.hpp"
#include "janus/model.hpp"
#include "janus/roi.hpp"
#include "janus/volume.hpp"

namespace janus {

enum class Split { Train, Val, TestInternal, TestExternal };

std::string to_string(Split s);
Split split_from_string(const std::string& s);
inline constexpr std::array<Split, 4> kAllSplits{Split::Train, Split::Val, Split::TestInternal, Split::TestExternal};

// 0 with probability p_zero, otherwise Uniform[lo, hi].
struct MeasurementDist {
  double lo = 0.0;
  double hi = 0.0;
  double p_zero = 0.0;
  bool operator==(const MeasurementDist&) const = default;
};

struct LesionBlueprint {
  MeasurementDist radius_mm;
  double contrast_hu = 0.0;
  std::array<double, 3> offset_mm{0.0, 0.0, 0.0};
  bool operator==(const LesionBlueprint&) const = default;
};

// Ellipsoidal organ with semi-axes radius * aspect (z, y, x).
struct OrganBlueprint {
  std::string name;
  std::array<double, 3> center_mm{0.0, 0.0, 0.0};
  double center_jitter_mm = 0.0;
  MeasurementDist radius_mm;
  std::array<double, 3> aspect{1.0, 1.0, 1.0};
  double shape_jitter = 0.0;  // each rendered semi-axis scaled by U[1 - j, 1 + j]
  MeasurementDist hu;
  std::optional<LesionBlueprint> lesion;
  bool operator==(const OrganBlueprint&) const = default;
};

enum class Comparison { Greater, Less };

// label = measurement > cutoff (or <).
struct LabelRule {
  std::string measurement;
  Comparison op = Comparison::Greater;
  double cutoff = 0.0;
  bool operator==(const LabelRule&) const = default;
};

struct LabelBlueprint {
  std::string name;
  std::string family;  // geometric / densitometric / focal
  RoiSource roi_source = RoiSource::SingleOrgan;
  std::vector<std::string> roi_organs;
  double dilation_mm = 0.0;
  LabelRule rule;
  std::vector<std::string> priors;  // measurement keys
  bool operator==(const LabelBlueprint&) const = default;
};

// Appearance shift of the external split; touches the volume only.
struct ShiftParams {
  double hu_offset = 0.0;
  double blur_mm = 0.0;
  double noise_hu = 0.0;
  bool operator==(const ShiftParams&) const = default;
  bool is_zero() const { return hu_offset == 0.0 && blur_mm == 0.0 && noise_hu == 0.0; }
};

struct PhantomSpec {
  Extent3 grid{16, 64, 64};
  Spacing3 spacing{3.0, 1.5, 1.5};
  double body_hu = -80.0;
  std::array<double, 2> body_radii_mm{44.0, 44.0};
  double noise_hu = 10.0;
  double scanner_jitter_hu = 0.0;  // sd of a per-scan global HU offset
  std::vector<OrganBlueprint> organs;
  std::vector<LabelBlueprint> labels;
  double missing_prob = 0.3;
  ShiftParams shift;
  std::uint64_t seed = 0;
  bool operator==(const PhantomSpec&) const = default;
};

// Three organs and one label per family: organ size, organ density, focal lesion.
PhantomSpec default_phantom_spec();

// Throws SpecError when a rule is unrealizable or a reference is unknown.
void validate(const PhantomSpec& spec);

// Closed-form P(label = 1) under the generating distribution.
double analytic_prevalence(const PhantomSpec& spec, std::size_t label);

// Measurement keys: <organ>.radius_mm, <organ>.volume_ml, <organ>.mean_hu, <organ>.lesion_radius_mm.
std::string measurement_unit(const std::string& key);

struct PhantomSample {
  std::string id;
  Split split = Split::Train;
  Volume volume;
  std::vector<RoiMask> rois;          // per label, undilated
  std::vector<PriorVector> priors;    // per label, raw units
  std::vector<std::vector<std::string>> prior_keys;
  LabelTargets targets;
  std::map<std::string, double> measurements;
};

// One sample from a latent seed. Labels and priors depend only on the latent
// parameters; apply_shift alters the rendered volume only.
PhantomSample generate_sample(const PhantomSpec& spec, std::uint64_t latent_seed, const std::string& id,
                              Split split, bool apply_shift, bool allow_missing);

std::uint64_t latent_seed(const PhantomSpec& spec, Split split, std::size_t index);

// Deterministic under (spec, split, n). Missing labels only on the train split.
std::vector<PhantomSample> generate(const PhantomSpec& spec, std::size_t n, Split split);

// Re-applies the label rules to stored measurements.
LabelTargets derive_labels(const PhantomSpec& spec, const std::map<std::string, double>& measurements);

// v -> v * (1 + u), u ~ U(-p/100, p/100), independently per feature.
void corrupt_priors(std::vector<PhantomSample>& samples, double p_percent, std::uint64_t seed);
std::vector<double> corrupt_values(std::span<const double> values, double p_percent, Rng& rng);

struct AugmentParams {
  double rotation_deg = 0.0;  // in-plane, about the volume centre
  double scale = 1.0;
  double gamma = 1.0;
  double noise_hu = 0.0;
  bool is_identity() const { return rotation_deg == 0.0 && scale == 1.0 && gamma == 1.0 && noise_hu == 0.0; }
};

// rotation <= 10 deg, scale in [0.9, 1.1], gamma in [0.8, 1.25], noise sd <= 20 HU.
AugmentParams random_augment_params(std::uint64_t seed);

// gamma jitter on the [0,1]-mapped intensity.
double gamma_map(double hu, double gamma);

// Affine on volume (trilinear) and masks (nearest), gamma, noise; radius and
// volume priors rescaled from the transformed ROI voxel count.
PhantomSample augment(const PhantomSample& sample, const AugmentParams& params, std::uint64_t seed);
PhantomSample augment(const PhantomSample& sample, std::uint64_t seed);

// Separable Gaussian blur with sigma in mm; borders clamp.
Volume gaussian_blur(const Volume& v, double sigma_mm);

}  // namespace janus
