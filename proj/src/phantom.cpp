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

#include "janus/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <set>

namespace janus {

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::TestInternal: return "test-internal";
    case Split::TestExternal: return "test-external";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  for (Split sp : kAllSplits)
    if (to_string(sp) == s) return sp;
  throw ConfigError("unknown split '" + s + "' (expected train, val, test-internal or test-external)");
}

PhantomSpec default_phantom_spec() {
  PhantomSpec s;
  s.grid = {12, 48, 48};
  s.spacing = {3.0, 2.0, 2.0};
  s.body_hu = -80.0;
  s.body_radii_mm = {44.0, 44.0};
  s.noise_hu = 10.0;
  s.scanner_jitter_hu = 35.0;
  s.missing_prob = 0.3;
  s.shift = {-30.0, 2.5, 25.0};
  s.seed = 7;

  OrganBlueprint spleen;
  spleen.name = "spleen";
  spleen.center_mm = {18.0, 40.0, 68.0};
  spleen.center_jitter_mm = 2.0;
  spleen.radius_mm = {8.0, 16.0, 0.0};
  spleen.aspect = {1.0, 1.0, 1.0};
  spleen.shape_jitter = 0.4;
  spleen.hu = {35.0, 65.0, 0.0};

  OrganBlueprint liver;
  liver.name = "liver";
  liver.center_mm = {18.0, 40.0, 28.0};
  liver.center_jitter_mm = 2.0;
  liver.radius_mm = {13.0, 16.0, 0.0};
  liver.aspect = {1.0, 1.0, 1.0};
  liver.hu = {10.0, 70.0, 0.0};

  OrganBlueprint kidney;
  kidney.name = "kidney";
  kidney.center_mm = {18.0, 68.0, 48.0};
  kidney.center_jitter_mm = 2.0;
  kidney.radius_mm = {8.0, 11.0, 0.0};
  kidney.aspect = {1.0, 1.0, 1.0};
  kidney.hu = {30.0, 40.0, 0.0};
  kidney.lesion = LesionBlueprint{{4.0, 6.0, 0.5}, 300.0, {0.0, 0.0, 0.0}};

  s.organs = {spleen, liver, kidney};

  LabelBlueprint size;
  size.name = "splenomegaly";
  size.family = "geometric";
  size.roi_source = RoiSource::SingleOrgan;
  size.roi_organs = {"spleen"};
  size.dilation_mm = 4.0;
  size.rule = {"spleen.radius_mm", Comparison::Greater, 12.0};
  size.priors = {"spleen.radius_mm", "spleen.volume_ml"};

  LabelBlueprint density;
  density.name = "steatosis";
  density.family = "densitometric";
  density.roi_source = RoiSource::MultiOrganUnion;
  density.roi_organs = {"liver", "spleen"};
  density.dilation_mm = 2.0;
  density.rule = {"liver.mean_hu", Comparison::Less, 40.0};
  density.priors = {"liver.mean_hu", "liver.volume_ml"};

  LabelBlueprint focal;
  focal.name = "renal_lesion";
  focal.family = "focal";
  focal.roi_source = RoiSource::LocalizationBox;
  focal.roi_organs = {"kidney"};
  focal.dilation_mm = 2.0;
  focal.rule = {"kidney.lesion_radius_mm", Comparison::Greater, 1.0};
  focal.priors = {"kidney.radius_mm", "kidney.mean_hu"};

  s.labels = {size, density, focal};
  return s;
}

namespace {

const OrganBlueprint* find_organ(const PhantomSpec& spec, const std::string& name) {
  for (const auto& o : spec.organs)
    if (o.name == name) return &o;
  return nullptr;
}

std::pair<std::string, std::string> split_key(const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw SpecError("measurement key '" + key + "' is not <organ>.<quantity>");
  return {key.substr(0, dot), key.substr(dot + 1)};
}

bool known_quantity(const std::string& q) {
  return q == "radius_mm" || q == "volume_ml" || q == "mean_hu" || q == "lesion_radius_mm";
}

// Distribution of a directly drawn measurement (rules apply only to these).
const MeasurementDist& rule_distribution(const PhantomSpec& spec, const std::string& key) {
  const auto [organ, quantity] = split_key(key);
  const OrganBlueprint* o = find_organ(spec, organ);
  if (!o) throw SpecError("unknown organ '" + organ + "' in '" + key + "'");
  if (quantity == "radius_mm") return o->radius_mm;
  if (quantity == "mean_hu") return o->hu;
  if (quantity == "lesion_radius_mm") {
    if (!o->lesion) throw SpecError("organ '" + organ + "' has no lesion blueprint");
    return o->lesion->radius_mm;
  }
  throw SpecError("label rules must use a drawn measurement (radius_mm, mean_hu, lesion_radius_mm): '" + key + "'");
}

double draw(const MeasurementDist& d, Rng& rng) {
  const double u = uniform(rng);
  const double v = uniform(rng, d.lo, d.hi);
  return u < d.p_zero ? 0.0 : v;
}

bool apply_rule(const LabelRule& rule, double value) {
  return rule.op == Comparison::Greater ? value > rule.cutoff : value < rule.cutoff;
}

double ellipsoid_ml(const std::array<double, 3>& semi) {
  return 4.0 / 3.0 * std::numbers::pi * semi[0] * semi[1] * semi[2] / 1000.0;
}

void blur_axis(Volume& v, int axis, double sigma_vox) {
  if (sigma_vox <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_vox));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma_vox * sigma_vox));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;
  const auto& e = v.extent;
  const std::array<std::size_t, 3> stride{e[1] * e[2], e[2], 1};
  const std::size_t n = e[axis];
  const Volume src = v;
  for (std::size_t base = 0; base < src.data.size(); ++base) {
    if ((base / stride[axis]) % n != 0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const long j = std::clamp(static_cast<long>(i) + k, 0L, static_cast<long>(n) - 1);
        acc += kernel[k + radius] * src.data[base + static_cast<std::size_t>(j) * stride[axis]];
      }
      v.data[base + i * stride[axis]] = acc;
    }
  }
}

}  // namespace

std::string measurement_unit(const std::string& key) {
  const auto [organ, quantity] = split_key(key);
  if (quantity == "radius_mm" || quantity == "lesion_radius_mm") return "mm";
  if (quantity == "volume_ml") return "mL";
  if (quantity == "mean_hu") return "HU";
  throw SpecError("unknown measurement '" + key + "'");
}

void validate(const PhantomSpec& spec) {
  for (auto e : spec.grid)
    if (e == 0) throw SpecError("phantom grid extents must be positive");
  for (double s : spec.spacing)
    if (!(s > 0.0)) throw SpecError("phantom spacing must be positive");
  if (!(spec.missing_prob >= 0.0 && spec.missing_prob <= 1.0)) throw SpecError("missing_prob must lie in [0,1]");
  if (spec.labels.empty()) throw SpecError("phantom spec defines no labels");
  std::set<std::string> names;
  for (const auto& o : spec.organs) {
    if (!names.insert(o.name).second) throw SpecError("duplicate organ '" + o.name + "'");
    for (const MeasurementDist* d : {&o.radius_mm, &o.hu}) {
      if (d->hi < d->lo || !(d->p_zero >= 0.0 && d->p_zero <= 1.0)) throw SpecError("bad range for organ '" + o.name + "'");
    }
    if (o.radius_mm.lo <= 0.0) throw SpecError("organ radius must be positive for '" + o.name + "'");
    if (!(o.shape_jitter >= 0.0 && o.shape_jitter < 1.0)) throw SpecError("shape_jitter must lie in [0,1) for '" + o.name + "'");
  }
  for (std::size_t l = 0; l < spec.labels.size(); ++l) {
    const auto& lb = spec.labels[l];
    if (lb.roi_organs.empty()) throw SpecError("label '" + lb.name + "' has no ROI organs");
    for (const auto& o : lb.roi_organs)
      if (!find_organ(spec, o)) throw SpecError("label '" + lb.name + "' references unknown organ '" + o + "'");
    if (lb.priors.empty()) throw SpecError("label '" + lb.name + "' has no prior features");
    for (const auto& key : lb.priors) {
      const auto [organ, quantity] = split_key(key);
      if (!find_organ(spec, organ) || !known_quantity(quantity)) throw SpecError("unknown prior feature '" + key + "'");
      if (quantity == "lesion_radius_mm" && !find_organ(spec, organ)->lesion) throw SpecError("no lesion for '" + key + "'");
    }
    if (lb.dilation_mm < 0.0) throw SpecError("negative dilation radius for '" + lb.name + "'");
    const double prev = analytic_prevalence(spec, l);
    if (!(prev > 0.0 && prev < 1.0)) {
      throw SpecError("label '" + lb.name + "': cutoff " + std::to_string(lb.rule.cutoff) +
                      " leaves only one class realizable");
    }
  }
}

double analytic_prevalence(const PhantomSpec& spec, std::size_t label) {
  const LabelRule& rule = spec.labels.at(label).rule;
  const MeasurementDist& d = rule_distribution(spec, rule.measurement);
  double p_above;  // P(U > cutoff) for the continuous part
  if (d.hi == d.lo) {
    p_above = d.lo > rule.cutoff ? 1.0 : 0.0;
  } else {
    p_above = std::clamp((d.hi - rule.cutoff) / (d.hi - d.lo), 0.0, 1.0);
  }
  const double cont = rule.op == Comparison::Greater ? p_above : 1.0 - p_above;
  const double zero = apply_rule(rule, 0.0) ? 1.0 : 0.0;
  return (1.0 - d.p_zero) * cont + d.p_zero * zero;
}

LabelTargets derive_labels(const PhantomSpec& spec, const std::map<std::string, double>& m) {
  LabelTargets t;
  for (const auto& lb : spec.labels) {
    const auto it = m.find(lb.rule.measurement);
    if (it == m.end()) throw DataError("missing measurement '" + lb.rule.measurement + "'");
    t.values.emplace_back(apply_rule(lb.rule, it->second));
  }
  return t;
}

std::uint64_t latent_seed(const PhantomSpec& spec, Split split, std::size_t index) {
  return derive_seed(derive_seed(spec.seed, to_string(split)), static_cast<std::uint64_t>(index));
}

PhantomSample generate_sample(const PhantomSpec& spec, std::uint64_t latent, const std::string& id, Split split,
                              bool apply_shift, bool allow_missing) {
  PhantomSample s;
  s.id = id;
  s.split = split;

  struct Placed {
    std::array<double, 3> center;
    std::array<double, 3> semi;
    double hu;
    double lesion_r = 0.0;
  };
  Rng rng(derive_seed(latent, "latent"));
  std::vector<Placed> placed;
  for (const auto& o : spec.organs) {
    Placed p;
    for (int a = 0; a < 3; ++a) p.center[a] = o.center_mm[a] + uniform(rng, -o.center_jitter_mm, o.center_jitter_mm);
    const double r = draw(o.radius_mm, rng);
    for (int a = 0; a < 3; ++a) p.semi[a] = r * o.aspect[a] * uniform(rng, 1.0 - o.shape_jitter, 1.0 + o.shape_jitter);
    p.hu = draw(o.hu, rng);
    if (o.lesion) p.lesion_r = draw(o.lesion->radius_mm, rng);
    s.measurements[o.name + ".radius_mm"] = r;
    s.measurements[o.name + ".volume_ml"] = ellipsoid_ml(p.semi);
    s.measurements[o.name + ".mean_hu"] = p.hu;
    if (o.lesion) s.measurements[o.name + ".lesion_radius_mm"] = p.lesion_r;
    placed.push_back(p);
  }

  // Render.
  const auto& e = spec.grid;
  const auto& sp = spec.spacing;
  s.volume = Volume(e, sp, kAirHu);
  std::vector<BinaryMask> organ_masks(spec.organs.size(), BinaryMask(e, sp, 0));
  const double cy = e[1] * sp[1] / 2.0, cx = e[2] * sp[2] / 2.0;
  for (std::size_t z = 0; z < e[0]; ++z) {
    const double pz = (z + 0.5) * sp[0];
    for (std::size_t y = 0; y < e[1]; ++y) {
      const double py = (y + 0.5) * sp[1];
      for (std::size_t x = 0; x < e[2]; ++x) {
        const double px = (x + 0.5) * sp[2];
        double& v = s.volume.at(z, y, x);
        const double by = (py - cy) / spec.body_radii_mm[0], bx = (px - cx) / spec.body_radii_mm[1];
        if (by * by + bx * bx <= 1.0) v = spec.body_hu;
        for (std::size_t k = 0; k < placed.size(); ++k) {
          const Placed& p = placed[k];
          const double dz = (pz - p.center[0]) / p.semi[0];
          const double dy = (py - p.center[1]) / p.semi[1];
          const double dx = (px - p.center[2]) / p.semi[2];
          if (dz * dz + dy * dy + dx * dx > 1.0) continue;
          v = p.hu;
          organ_masks[k].at(z, y, x) = 1;
          if (const auto& les = spec.organs[k].lesion; les && p.lesion_r > 0.0) {
            const double lz = pz - p.center[0] - les->offset_mm[0];
            const double ly = py - p.center[1] - les->offset_mm[1];
            const double lx = px - p.center[2] - les->offset_mm[2];
            if (lz * lz + ly * ly + lx * lx <= p.lesion_r * p.lesion_r) v += les->contrast_hu;
          }
        }
      }
    }
  }
  Rng noise(derive_seed(latent, "noise"));
  const double jitter = spec.scanner_jitter_hu > 0.0 ? normal(noise, 0.0, spec.scanner_jitter_hu) : 0.0;
  for (double& v : s.volume.data) {
    if (v <= kAirHu) continue;
    v += jitter;
    if (spec.noise_hu > 0.0) v += normal(noise, 0.0, spec.noise_hu);
  }
  if (apply_shift && !spec.shift.is_zero()) {
    Rng shift_rng(derive_seed(latent, "shift"));
    for (double& v : s.volume.data) v += spec.shift.hu_offset;
    s.volume = gaussian_blur(s.volume, spec.shift.blur_mm);
    if (spec.shift.noise_hu > 0.0)
      for (double& v : s.volume.data) v += normal(shift_rng, 0.0, spec.shift.noise_hu);
  }

  // ROIs, priors, labels.
  for (std::size_t l = 0; l < spec.labels.size(); ++l) {
    const auto& lb = spec.labels[l];
    std::vector<BinaryMask> channels;
    for (const auto& name : lb.roi_organs) {
      for (std::size_t k = 0; k < spec.organs.size(); ++k)
        if (spec.organs[k].name == name) channels.push_back(organ_masks[k]);
    }
    s.rois.push_back(compose_mask(static_cast<int>(l), channels, lb.roi_source, lb.dilation_mm));
    PriorVector pv;
    pv.label = static_cast<int>(l);
    for (const auto& key : lb.priors) pv.values.push_back(s.measurements.at(key));
    s.priors.push_back(std::move(pv));
    s.prior_keys.push_back(lb.priors);
  }
  s.targets = derive_labels(spec, s.measurements);
  if (allow_missing && spec.missing_prob > 0.0) {
    Rng miss(derive_seed(latent, "missing"));
    for (auto& v : s.targets.values)
      if (uniform(miss) < spec.missing_prob) v.reset();
  }
  return s;
}

std::vector<PhantomSample> generate(const PhantomSpec& spec, std::size_t n, Split split) {
  if (n == 0) throw SpecError("split '" + to_string(split) + "' must contain at least one sample");
  validate(spec);
  std::vector<PhantomSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", i);
    const std::string id = to_string(split) + "-" + buf;
    out.push_back(generate_sample(spec, latent_seed(spec, split, i), id, split, split == Split::TestExternal,
                                  split == Split::Train));
  }
  return out;
}

std::vector<double> corrupt_values(std::span<const double> values, double p_percent, Rng& rng) {
  std::vector<double> out(values.begin(), values.end());
  if (p_percent == 0.0) return out;
  const double a = p_percent / 100.0;
  for (double& v : out) v *= 1.0 + uniform(rng, -a, a);
  return out;
}

void corrupt_priors(std::vector<PhantomSample>& samples, double p_percent, std::uint64_t seed) {
  if (p_percent < 0.0) throw ArgumentError("corruption level must be nonnegative");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    for (auto& pv : samples[i].priors) pv.values = corrupt_values(pv.values, p_percent, rng);
  }
}

Volume gaussian_blur(const Volume& v, double sigma_mm) {
  Volume out = v;
  if (sigma_mm <= 0.0) return out;
  for (int axis = 0; axis < 3; ++axis) blur_axis(out, axis, sigma_mm / v.spacing[axis]);
  return out;
}

AugmentParams random_augment_params(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "augment"));
  AugmentParams p;
  p.rotation_deg = uniform(rng, -10.0, 10.0);
  p.scale = uniform(rng, 0.9, 1.1);
  p.gamma = std::exp(uniform(rng, std::log(0.8), std::log(1.25)));
  p.noise_hu = uniform(rng, 0.0, 20.0);
  return p;
}

double gamma_map(double hu, double gamma) {
  const double u = std::clamp((hu - kHuMin) / (kHuMax - kHuMin), 0.0, 1.0);
  return kHuMin + std::pow(u, gamma) * (kHuMax - kHuMin);
}

PhantomSample augment(const PhantomSample& sample, const AugmentParams& params, std::uint64_t seed) {
  if (params.is_identity()) return sample;
  if (!(params.scale > 0.0) || !(params.gamma > 0.0)) throw ArgumentError("augment: scale and gamma must be positive");
  PhantomSample out = sample;
  const Volume& v = sample.volume;
  const auto& e = v.extent;
  const auto& sp = v.spacing;
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const std::array<double, 3> centre{e[0] * sp[0] / 2.0, e[1] * sp[1] / 2.0, e[2] * sp[2] / 2.0};

  auto source_index = [&](std::size_t z, std::size_t y, std::size_t x) {
    // Inverse map: undo scale then rotation about the centre (in-plane).
    const double pz = ((z + 0.5) * sp[0] - centre[0]) / params.scale;
    const double py = ((y + 0.5) * sp[1] - centre[1]) / params.scale;
    const double px = ((x + 0.5) * sp[2] - centre[2]) / params.scale;
    const double ry = c * py + s * px;
    const double rx = -s * py + c * px;
    return std::array<double, 3>{(pz + centre[0]) / sp[0] - 0.5, (ry + centre[1]) / sp[1] - 0.5,
                                 (rx + centre[2]) / sp[2] - 0.5};
  };
  auto inside = [&](const std::array<double, 3>& q) {
    for (int a = 0; a < 3; ++a)
      if (q[a] < -0.5 || q[a] > static_cast<double>(e[a]) - 0.5) return false;
    return true;
  };

  for (std::size_t z = 0; z < e[0]; ++z)
    for (std::size_t y = 0; y < e[1]; ++y)
      for (std::size_t x = 0; x < e[2]; ++x) {
        const auto q = source_index(z, y, x);
        if (!inside(q)) {
          out.volume.at(z, y, x) = kAirHu;
          for (auto& roi : out.rois) roi.mask.at(z, y, x) = 0;
          continue;
        }
        std::array<std::size_t, 3> lo{}, hi{};
        std::array<double, 3> f{};
        std::array<std::size_t, 3> nn{};
        for (int a = 0; a < 3; ++a) {
          const double qa = std::clamp(q[a], 0.0, static_cast<double>(e[a] - 1));
          lo[a] = static_cast<std::size_t>(std::floor(qa));
          hi[a] = std::min(lo[a] + 1, e[a] - 1);
          f[a] = qa - static_cast<double>(lo[a]);
          nn[a] = std::min(static_cast<std::size_t>(std::floor(q[a] + 0.5)), e[a] - 1);
        }
        double acc = 0.0;
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const double wgt = (dz ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dx ? f[2] : 1 - f[2]);
              if (wgt == 0.0) continue;
              acc += wgt * v.at(dz ? hi[0] : lo[0], dy ? hi[1] : lo[1], dx ? hi[2] : lo[2]);
            }
        out.volume.at(z, y, x) = acc;
        for (std::size_t l = 0; l < out.rois.size(); ++l) out.rois[l].mask.at(z, y, x) = sample.rois[l].mask.at(nn[0], nn[1], nn[2]);
      }

  Rng rng(derive_seed(seed, "augment-noise"));
  for (double& hv : out.volume.data) {
    if (params.gamma != 1.0) hv = gamma_map(hv, params.gamma);
    if (params.noise_hu > 0.0) hv += normal(rng, 0.0, params.noise_hu);
  }

  // Geometric priors follow the transformed ROI.
  for (std::size_t l = 0; l < out.rois.size() && l < out.priors.size(); ++l) {
    const auto before = std::count(sample.rois[l].mask.data.begin(), sample.rois[l].mask.data.end(), 1);
    const auto after = std::count(out.rois[l].mask.data.begin(), out.rois[l].mask.data.end(), 1);
    if (before == 0) continue;
    const double ratio = static_cast<double>(after) / static_cast<double>(before);
    const auto& keys = out.prior_keys[l];
    for (std::size_t f = 0; f < keys.size() && f < out.priors[l].values.size(); ++f) {
      const std::string& key = keys[f];
      if (key.ends_with(".volume_ml")) out.priors[l].values[f] *= ratio;
      else if (key.ends_with(".radius_mm") && !key.ends_with("lesion_radius_mm")) out.priors[l].values[f] *= std::cbrt(ratio);
    }
  }
  return out;
}

PhantomSample augment(const PhantomSample& sample, std::uint64_t seed) {
  return augment(sample, random_augment_params(seed), seed);
}

}  // namespace janus
