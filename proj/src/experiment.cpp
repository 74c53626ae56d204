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

#include "janus/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "janus/error.hpp"
#include "janus/io.hpp"
#include "janus/rng.hpp"

namespace janus {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Strict view of a JSON object: every key must be consumed before finish().
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + where(item.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json dist_json(const MeasurementDist& d) { return {{"lo", d.lo}, {"hi", d.hi}, {"p_zero", d.p_zero}}; }

MeasurementDist parse_dist(const json& j, const std::string& path) {
  Reader r(j, path);
  MeasurementDist d;
  r.get("lo", d.lo);
  r.get("hi", d.hi);
  r.get("p_zero", d.p_zero);
  r.finish();
  return d;
}

const char* comparison_name(Comparison c) { return c == Comparison::Greater ? ">" : "<"; }

Comparison parse_comparison(const std::string& s, const std::string& path) {
  if (s == ">") return Comparison::Greater;
  if (s == "<") return Comparison::Less;
  throw ConfigError(path + ": comparison must be '>' or '<', got '" + s + "'");
}

json organ_json(const OrganBlueprint& o) {
  json j;
  j["name"] = o.name;
  j["center_mm"] = o.center_mm;
  j["center_jitter_mm"] = o.center_jitter_mm;
  j["radius_mm"] = dist_json(o.radius_mm);
  j["aspect"] = o.aspect;
  j["shape_jitter"] = o.shape_jitter;
  j["hu"] = dist_json(o.hu);
  if (o.lesion) {
    j["lesion"] = {{"radius_mm", dist_json(o.lesion->radius_mm)},
                   {"contrast_hu", o.lesion->contrast_hu},
                   {"offset_mm", o.lesion->offset_mm}};
  } else {
    j["lesion"] = nullptr;
  }
  return j;
}

OrganBlueprint parse_organ(const json& j, const std::string& path) {
  Reader r(j, path);
  OrganBlueprint o;
  r.get("name", o.name);
  r.get("center_mm", o.center_mm);
  r.get("center_jitter_mm", o.center_jitter_mm);
  if (const json* d = r.child("radius_mm")) o.radius_mm = parse_dist(*d, r.where("radius_mm"));
  r.get("aspect", o.aspect);
  r.get("shape_jitter", o.shape_jitter);
  if (const json* d = r.child("hu")) o.hu = parse_dist(*d, r.where("hu"));
  if (const json* l = r.child("lesion"); l && !l->is_null()) {
    Reader lr(*l, r.where("lesion"));
    LesionBlueprint les;
    if (const json* d = lr.child("radius_mm")) les.radius_mm = parse_dist(*d, lr.where("radius_mm"));
    lr.get("contrast_hu", les.contrast_hu);
    lr.get("offset_mm", les.offset_mm);
    lr.finish();
    o.lesion = les;
  }
  r.finish();
  return o;
}

json label_json(const LabelBlueprint& l) {
  json j;
  j["name"] = l.name;
  j["family"] = l.family;
  j["roi_source"] = to_string(l.roi_source);
  j["roi_organs"] = l.roi_organs;
  j["dilation_mm"] = l.dilation_mm;
  j["rule"] = {{"measurement", l.rule.measurement}, {"op", comparison_name(l.rule.op)}, {"cutoff", l.rule.cutoff}};
  j["priors"] = l.priors;
  return j;
}

LabelBlueprint parse_label(const json& j, const std::string& path) {
  Reader r(j, path);
  LabelBlueprint l;
  r.get("name", l.name);
  r.get("family", l.family);
  std::string source = to_string(l.roi_source);
  r.get("roi_source", source);
  l.roi_source = roi_source_from_string(source);
  r.get("roi_organs", l.roi_organs);
  r.get("dilation_mm", l.dilation_mm);
  if (const json* rule = r.child("rule")) {
    Reader rr(*rule, r.where("rule"));
    rr.get("measurement", l.rule.measurement);
    std::string op = comparison_name(l.rule.op);
    rr.get("op", op);
    l.rule.op = parse_comparison(op, rr.where("op"));
    rr.get("cutoff", l.rule.cutoff);
    rr.finish();
  }
  r.get("priors", l.priors);
  r.finish();
  return l;
}

json phantom_json(const PhantomSpec& s) {
  json j;
  j["grid"] = s.grid;
  j["spacing"] = s.spacing;
  j["body_hu"] = s.body_hu;
  j["body_radii_mm"] = s.body_radii_mm;
  j["noise_hu"] = s.noise_hu;
  j["scanner_jitter_hu"] = s.scanner_jitter_hu;
  j["missing_prob"] = s.missing_prob;
  j["shift"] = {{"hu_offset", s.shift.hu_offset}, {"blur_mm", s.shift.blur_mm}, {"noise_hu", s.shift.noise_hu}};
  json organs = json::array();
  for (const auto& o : s.organs) organs.push_back(organ_json(o));
  j["organs"] = organs;
  json labels = json::array();
  for (const auto& l : s.labels) labels.push_back(label_json(l));
  j["labels"] = labels;
  return j;
}

PhantomSpec parse_phantom(const json& j, const std::string& path) {
  Reader r(j, path);
  PhantomSpec s = default_phantom_spec();
  r.get("grid", s.grid);
  r.get("spacing", s.spacing);
  r.get("body_hu", s.body_hu);
  r.get("body_radii_mm", s.body_radii_mm);
  r.get("noise_hu", s.noise_hu);
  r.get("scanner_jitter_hu", s.scanner_jitter_hu);
  r.get("missing_prob", s.missing_prob);
  if (const json* sh = r.child("shift")) {
    Reader sr(*sh, r.where("shift"));
    sr.get("hu_offset", s.shift.hu_offset);
    sr.get("blur_mm", s.shift.blur_mm);
    sr.get("noise_hu", s.shift.noise_hu);
    sr.finish();
  }
  if (const json* organs = r.child("organs")) {
    if (!organs->is_array()) throw ConfigError(r.where("organs") + ": expected an array");
    s.organs.clear();
    for (std::size_t i = 0; i < organs->size(); ++i)
      s.organs.push_back(parse_organ((*organs)[i], r.where("organs[" + std::to_string(i) + "]")));
  }
  if (const json* labels = r.child("labels")) {
    if (!labels->is_array()) throw ConfigError(r.where("labels") + ": expected an array");
    s.labels.clear();
    for (std::size_t i = 0; i < labels->size(); ++i)
      s.labels.push_back(parse_label((*labels)[i], r.where("labels[" + std::to_string(i) + "]")));
  }
  r.finish();
  return s;
}

json encoder_json(const EncoderConfig& e) {
  return {{"patch", e.patch}, {"dim", e.dim}, {"attention", e.attention}, {"mlp_ratio", e.mlp_ratio}};
}

EncoderConfig parse_encoder(const json& j, const std::string& path) {
  Reader r(j, path);
  EncoderConfig e;
  r.get("patch", e.patch);
  r.get("dim", e.dim);
  r.get("attention", e.attention);
  r.get("mlp_ratio", e.mlp_ratio);
  r.finish();
  return e;
}

std::string sample_mask_stem(const std::string& id, std::size_t label) { return id + ".label" + std::to_string(label); }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw DataError(what + " not found: '" + p.string() + "'");
}

fs::path arm_dir(const ExperimentConfig& c, const std::string& arm) { return fs::path(c.output_dir) / arm; }

struct LoadedArm {
  ArmConfig arm;
  Model model;
  std::vector<PriorNormalizer> norms;
};

LoadedArm load_arm(const ExperimentConfig& c, const Dataset& d, const ArmConfig& arm) {
  const fs::path dir = arm_dir(c, arm.id);
  require_file(dir / "checkpoint.json", "checkpoint for arm '" + arm.id + "'");
  const json meta = json::parse(io::read_text(dir / "checkpoint.json"));
  const std::string stored = meta.at("model").at("fusion").get<std::string>();
  if (stored != to_string(arm.fusion)) {
    throw ConfigError("arm '" + arm.id + "' is configured as '" + to_string(arm.fusion) + "' but its checkpoint was trained as '" +
                      stored + "'");
  }
  LoadedArm out{arm, Model::init(model_config(c, d, arm.fusion), 0), {}};
  io::read_checkpoint(dir / "checkpoint", out.model);
  out.norms = io::parse_normalizers(io::read_text(dir / "normalizers.json"));
  if (out.norms.size() != d.labels.size()) throw DataError("normalizers of arm '" + arm.id + "' do not match the dataset labels");
  return out;
}

const ArmConfig* find_fusion(const ExperimentConfig& c, FusionMode m) {
  for (const auto& a : c.arms)
    if (a.fusion == m) return &a;
  return nullptr;
}

std::string cell(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string("NA"); }

}  // namespace

std::size_t SplitCounts::of(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::Val: return val;
    case Split::TestInternal: return test_internal;
    case Split::TestExternal: return test_external;
  }
  return 0;
}

const ArmConfig& ExperimentConfig::arm(const std::string& id) const {
  for (const auto& a : arms)
    if (a.id == id) return a;
  throw ConfigError("unknown arm '" + id + "'");
}

ExperimentConfig default_experiment_config() { return ExperimentConfig{}; }

std::string emit_config(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["paths"] = {{"dataset_dir", c.dataset_dir}, {"output_dir", c.output_dir}};
  j["seed"] = c.seed;
  j["phantom"] = phantom_json(c.phantom);
  j["counts"] = {{"train", c.counts.train},
                 {"val", c.counts.val},
                 {"test_internal", c.counts.test_internal},
                 {"test_external", c.counts.test_external}};
  j["preprocess"] = {{"target_spacing", c.preprocess.target_spacing},
                     {"target_shape", c.preprocess.target_shape},
                     {"stride", c.preprocess.stride},
                     {"input_size", c.preprocess.input_size}};
  j["encoder"] = encoder_json(c.encoder);
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"momentum", c.train.momentum},
                {"grad_clip", c.train.grad_clip},
                {"curriculum",
                 {{"w_max", c.train.curriculum.w_max},
                  {"e_ignore", c.train.curriculum.e_ignore},
                  {"e_ramp", c.train.curriculum.e_ramp}}},
                {"augment", c.augment}};
  json arms = json::array();
  for (const auto& a : c.arms) arms.push_back({{"id", a.id}, {"fusion", to_string(a.fusion)}});
  j["arms"] = arms;
  j["metrics"] = {{"bins", c.metrics.bins},
                  {"resamples", c.metrics.resamples},
                  {"level", c.metrics.level},
                  {"veto_confidence", c.veto.confidence},
                  {"veto_threshold", c.veto.threshold},
                  {"veto_min_count", c.veto.min_count}};
  j["corruption_levels"] = c.corruption_levels;
  return j.dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Reader r(j, "config");
  ExperimentConfig c;
  int version = -1;
  if (!j.contains("schema_version")) throw ConfigError("config must declare \"schema_version\": " + std::to_string(kConfigSchemaVersion));
  r.get("schema_version", version);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("config schema_version must be " + std::to_string(kConfigSchemaVersion) + " (got " +
                      std::to_string(version) + ")");
  }
  c.schema_version = version;
  if (const json* p = r.child("paths")) {
    Reader pr(*p, "config.paths");
    pr.get("dataset_dir", c.dataset_dir);
    pr.get("output_dir", c.output_dir);
    pr.finish();
  }
  r.get("seed", c.seed);
  if (const json* p = r.child("phantom")) c.phantom = parse_phantom(*p, "config.phantom");
  if (const json* p = r.child("counts")) {
    Reader cr(*p, "config.counts");
    cr.get("train", c.counts.train);
    cr.get("val", c.counts.val);
    cr.get("test_internal", c.counts.test_internal);
    cr.get("test_external", c.counts.test_external);
    cr.finish();
  }
  if (const json* p = r.child("preprocess")) {
    Reader pr(*p, "config.preprocess");
    pr.get("target_spacing", c.preprocess.target_spacing);
    pr.get("target_shape", c.preprocess.target_shape);
    pr.get("stride", c.preprocess.stride);
    pr.get("input_size", c.preprocess.input_size);
    pr.finish();
  }
  if (const json* p = r.child("encoder")) c.encoder = parse_encoder(*p, "config.encoder");
  if (const json* p = r.child("train")) {
    Reader tr(*p, "config.train");
    tr.get("epochs", c.train.epochs);
    tr.get("batch_size", c.train.batch_size);
    tr.get("learning_rate", c.train.learning_rate);
    tr.get("momentum", c.train.momentum);
    tr.get("grad_clip", c.train.grad_clip);
    if (const json* cu = tr.child("curriculum")) {
      Reader cr(*cu, "config.train.curriculum");
      cr.get("w_max", c.train.curriculum.w_max);
      cr.get("e_ignore", c.train.curriculum.e_ignore);
      cr.get("e_ramp", c.train.curriculum.e_ramp);
      cr.finish();
    }
    tr.get("augment", c.augment);
    tr.finish();
  }
  if (const json* p = r.child("arms")) {
    if (!p->is_array()) throw ConfigError("config.arms: expected an array");
    c.arms.clear();
    for (std::size_t i = 0; i < p->size(); ++i) {
      Reader ar((*p)[i], "config.arms[" + std::to_string(i) + "]");
      ArmConfig a;
      std::string fusion;
      ar.get("id", a.id);
      ar.get("fusion", fusion);
      ar.finish();
      a.fusion = fusion_from_string(fusion.empty() ? a.id : fusion);
      c.arms.push_back(a);
    }
  }
  if (const json* p = r.child("metrics")) {
    Reader mr(*p, "config.metrics");
    mr.get("bins", c.metrics.bins);
    mr.get("resamples", c.metrics.resamples);
    mr.get("level", c.metrics.level);
    mr.get("veto_confidence", c.veto.confidence);
    mr.get("veto_threshold", c.veto.threshold);
    mr.get("veto_min_count", c.veto.min_count);
    mr.finish();
  }
  r.get("corruption_levels", c.corruption_levels);
  r.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_config(text);
}

void validate(const ExperimentConfig& c) {
  std::set<std::string> ids;
  if (c.arms.empty()) throw ConfigError("config defines no arms");
  for (const auto& a : c.arms) {
    if (a.id.empty()) throw ConfigError("arm ids must be non-empty");
    if (!ids.insert(a.id).second) throw ConfigError("duplicate arm id '" + a.id + "'");
  }
  for (Split s : kAllSplits)
    if (c.counts.of(s) == 0) throw SpecError("split '" + to_string(s) + "' must contain at least one sample");
  if (c.preprocess.stride == 0) throw ConfigError("preprocess.stride must be positive");
  for (auto n : c.preprocess.input_size)
    if (n == 0 || n % c.encoder.patch != 0) throw ConfigError("preprocess.input_size must be a positive multiple of the patch size");
  for (auto n : c.preprocess.target_shape)
    if (n == 0) throw ConfigError("preprocess.target_shape extents must be positive");
  for (double s : c.preprocess.target_spacing)
    if (!(s > 0.0)) throw ConfigError("preprocess.target_spacing must be positive");
  if (c.encoder.patch == 0 || c.encoder.dim == 0 || c.encoder.mlp_ratio == 0) throw ConfigError("encoder sizes must be positive");
  if (c.train.epochs == 0 || c.train.batch_size == 0 || !(c.train.learning_rate > 0.0))
    throw ConfigError("train.epochs, batch_size and learning_rate must be positive");
  if (c.metrics.bins == 0 || c.metrics.resamples == 0 || !(c.metrics.level > 0.0 && c.metrics.level < 1.0))
    throw ConfigError("metrics options out of range");
  for (double p : c.corruption_levels)
    if (!(p >= 0.0)) throw ConfigError("corruption levels must be nonnegative");
  validate(dataset_spec(c));
}

std::uint64_t dataset_seed(const ExperimentConfig& c) { return derive_seed(c.seed, "dataset"); }
std::uint64_t train_seed(const ExperimentConfig& c) { return derive_seed(c.seed, "train"); }
std::uint64_t bootstrap_seed(const ExperimentConfig& c) { return derive_seed(c.seed, "bootstrap"); }
std::uint64_t corruption_seed(const ExperimentConfig& c, double level) {
  return derive_seed(derive_seed(c.seed, "corruption"), io::format_double(level));
}

PhantomSpec dataset_spec(const ExperimentConfig& c) {
  PhantomSpec s = c.phantom;
  s.seed = dataset_seed(c);
  return s;
}

const std::vector<PhantomSample>& Dataset::split(Split s) const {
  const auto it = splits.find(s);
  if (it == splits.end()) throw DataError("dataset split '" + to_string(s) + "' is not loaded");
  return it->second;
}

Dataset generate_dataset(const ExperimentConfig& c) {
  const PhantomSpec spec = dataset_spec(c);
  Dataset d;
  for (const auto& l : spec.labels) {
    d.labels.push_back(l.name);
    d.families.push_back(l.family);
    d.features.push_back(l.priors);
  }
  for (Split s : kAllSplits) d.splits[s] = generate(spec, c.counts.of(s), s);
  return d;
}

void write_dataset(const Dataset& d, const fs::path& dir) {
  io::Manifest m{d.labels, d.families, d.features, {}};
  std::vector<io::PriorRow> priors;
  for (Split s : kAllSplits) {
    const auto it = d.splits.find(s);
    if (it == d.splits.end()) continue;
    for (const auto& sample : it->second) {
      m.samples.push_back({sample.id, s, sample.targets.values});
      io::write_volume(dir / "volumes" / sample.id, sample.volume);
      for (std::size_t l = 0; l < sample.rois.size(); ++l)
        io::write_mask(dir / "masks" / sample_mask_stem(sample.id, l), sample.rois[l].mask);
      for (std::size_t l = 0; l < sample.priors.size(); ++l)
        for (std::size_t f = 0; f < sample.priors[l].values.size(); ++f)
          priors.push_back({sample.id, d.labels[l], d.features[l][f], sample.priors[l].values[f]});
    }
  }
  io::write_text(dir / "manifest.json", io::manifest_json(m));
  io::write_text(dir / "priors.csv", io::priors_csv(priors));
}

Dataset load_dataset(const fs::path& dir, std::initializer_list<Split> splits) {
  require_file(dir / "manifest.json", "dataset manifest");
  const io::Manifest m = io::parse_manifest(io::read_text(dir / "manifest.json"));
  Dataset d{m.labels, m.families, m.features, {}};
  if (d.features.size() != d.labels.size() || d.families.size() != d.labels.size())
    throw DataError("manifest label, family and feature lists differ in length");
  std::map<std::string, std::size_t> label_index;
  for (std::size_t l = 0; l < d.labels.size(); ++l) label_index[d.labels[l]] = l;

  std::map<std::string, std::vector<std::vector<double>>> priors;
  for (const auto& row : io::parse_priors_csv(io::read_text(dir / "priors.csv"))) {
    const auto li = label_index.find(row.label);
    if (li == label_index.end()) throw DataError("priors.csv references unknown label '" + row.label + "'");
    auto& per_label = priors[row.sample_id];
    per_label.resize(d.labels.size());
    per_label[li->second].push_back(row.value);
  }

  const std::set<Split> wanted(splits.begin(), splits.end());
  for (const auto& e : m.samples) {
    if (!wanted.count(e.split)) continue;
    PhantomSample s;
    s.id = e.id;
    s.split = e.split;
    s.volume = io::read_volume(dir / "volumes" / e.id);
    s.targets.values = e.labels;
    const auto pit = priors.find(e.id);
    if (pit == priors.end()) throw DataError("no priors for sample '" + e.id + "'");
    for (std::size_t l = 0; l < d.labels.size(); ++l) {
      RoiMask roi;
      roi.label = static_cast<int>(l);
      roi.mask = io::read_mask(dir / "masks" / sample_mask_stem(e.id, l));
      if (roi.mask.extent != s.volume.extent) throw DataError("mask grid differs from volume for '" + e.id + "'");
      s.rois.push_back(std::move(roi));
      if (pit->second[l].size() != d.features[l].size())
        throw DataError("sample '" + e.id + "' has the wrong number of priors for '" + d.labels[l] + "'");
      s.priors.push_back({static_cast<int>(l), pit->second[l]});
      s.prior_keys.push_back(d.features[l]);
      for (std::size_t f = 0; f < d.features[l].size(); ++f) s.measurements[d.features[l][f]] = pit->second[l][f];
    }
    d.splits[e.split].push_back(std::move(s));
  }
  for (Split s : splits)
    if (d.splits[s].empty()) throw DataError("dataset has no samples in split '" + to_string(s) + "'");
  return d;
}

std::vector<PriorNormalizer> fit_normalizers(const Dataset& d) {
  const auto& train = d.split(Split::Train);
  std::vector<PriorNormalizer> out;
  for (std::size_t l = 0; l < d.labels.size(); ++l) {
    std::vector<std::vector<double>> rows;
    rows.reserve(train.size());
    for (const auto& s : train) rows.push_back(s.priors.at(l).values);
    out.push_back(fit_normalizer(rows, d.features[l]));
  }
  return out;
}

Example make_example(const ExperimentConfig& c, const PhantomSample& s, const std::vector<PriorNormalizer>& norms) {
  const PreprocessConfig& p = c.preprocess;
  Volume v = clip_hu(s.volume);
  const bool resample_needed = v.spacing != p.target_spacing;
  if (resample_needed) v = resample(v, p.target_spacing);
  v = center_crop_or_pad(v, p.target_shape);
  const TriSliceBatch batch = tri_slice(v, p.stride, p.input_size);

  Example ex;
  ex.input.sample_id = s.id;
  ex.input.slices = batch.slices;
  ex.targets = s.targets;
  const auto& labels = c.phantom.labels;
  for (std::size_t l = 0; l < s.rois.size(); ++l) {
    RoiMask roi = s.rois[l];
    if (l < labels.size()) roi.dilation_radius_mm = labels[l].dilation_mm;
    roi = dilate_mm(roi, roi.mask.spacing);
    if (resample_needed) roi.mask = resample_nearest(roi.mask, p.target_spacing);
    roi.mask = center_crop_or_pad(roi.mask, p.target_shape);
    ex.input.masks.push_back(to_token_mask(roi, batch.centers, p.input_size, c.encoder.patch));
  }
  if (norms.size() != s.priors.size()) throw DataError("sample '" + s.id + "': normalizer count differs from label count");
  for (std::size_t l = 0; l < s.priors.size(); ++l) ex.input.priors.push_back(norms[l].apply(s.priors[l].values));
  return ex;
}

std::vector<Example> make_examples(const ExperimentConfig& c, const std::vector<PhantomSample>& samples,
                                   const std::vector<PriorNormalizer>& norms) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(make_example(c, s, norms));
  return out;
}

std::vector<Example> with_priors(const std::vector<Example>& examples, const std::vector<PhantomSample>& samples,
                                 const std::vector<PriorNormalizer>& norms) {
  if (examples.size() != samples.size()) throw ArgumentError("with_priors: example and sample counts differ");
  std::vector<Example> out = examples;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].input.sample_id != samples[i].id) throw ArgumentError("with_priors: sample order differs");
    for (std::size_t l = 0; l < samples[i].priors.size(); ++l)
      out[i].input.priors[l] = norms[l].apply(samples[i].priors[l].values);
  }
  return out;
}

ModelConfig model_config(const ExperimentConfig& c, const Dataset& d, FusionMode fusion) {
  ModelConfig m;
  m.encoder = c.encoder;
  m.fusion = fusion;
  for (const auto& f : d.features) m.prior_dims.push_back(f.size());
  return m;
}

std::string model_config_json(const ModelConfig& m) {
  json j;
  j["fusion"] = to_string(m.fusion);
  j["encoder"] = encoder_json(m.encoder);
  j["concat_width"] = m.concat_width;
  j["prior_dims"] = m.prior_dims;
  return j.dump();
}

TrainResult train_arm(const ExperimentConfig& c, const Dataset& d, const std::vector<Example>& train_set,
                      const std::vector<Example>& val_set, FusionMode fusion,
                      const std::function<void(const EpochLog&)>& on_epoch) {
  TrainConfig t = c.train;
  t.fusion = fusion;
  t.seed = train_seed(c);
  t.stride = c.preprocess.stride;
  ExampleSource source;
  std::vector<PriorNormalizer> norms;
  if (c.augment) {
    norms = fit_normalizers(d);
    const auto& samples = d.split(Split::Train);
    const std::uint64_t aug_seed = derive_seed(c.seed, "augment");
    source = [&, aug_seed](std::size_t index, std::size_t epoch) {
      const std::uint64_t s = derive_seed(derive_seed(aug_seed, epoch), static_cast<std::uint64_t>(index));
      return make_example(c, augment(samples[index], s), norms);
    };
  }
  return train(train_set, val_set, model_config(c, d, fusion), t, on_epoch, source);
}

PredictionSet predict_set(Model& model, const std::vector<Example>& examples, const std::vector<std::string>& labels,
                          const std::string& model_id) {
  PredictionSet ps;
  ps.model_id = model_id;
  ps.labels = labels;
  for (const auto& ex : examples) {
    ps.sample_ids.push_back(ex.input.sample_id);
    const auto p = predict(model, ex.input);
    if (p.size() != labels.size()) throw DataError("model label count differs from the dataset");
    for (std::size_t l = 0; l < p.size(); ++l) {
      ps.probs.push_back(p[l]);
      ps.targets.push_back(ex.targets.values.at(l));
    }
  }
  return ps;
}

std::vector<std::string> distinct_families(const std::vector<std::string>& families) {
  std::vector<std::string> out;
  for (const auto& f : families)
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  return out;
}

std::optional<double> family_auroc(const PredictionSet& set, const std::vector<std::string>& families,
                                   const std::string& family) {
  const auto rows = all_rows(set.samples());
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < set.label_count(); ++l) {
    if (families.at(l) != family) continue;
    if (const auto v = label_metric(set, l, Metric::Auroc, rows)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<GateRow> gate_analysis(Model& model, const Dataset& d, const std::vector<PhantomSample>& samples,
                                   const std::vector<Example>& examples, const std::string& feature) {
  if (model.config().fusion != FusionMode::Gated) throw ConfigError("gate analysis needs a gated model");
  std::optional<std::pair<std::size_t, std::size_t>> where;
  for (std::size_t l = 0; l < d.features.size() && !where; ++l)
    for (std::size_t f = 0; f < d.features[l].size(); ++f)
      if (d.features[l][f] == feature) {
        where = {l, f};
        break;
      }
  if (!where) throw ConfigError("unknown prior feature '" + feature + "'");
  const auto [l, f] = *where;
  if (samples.size() != examples.size()) throw ArgumentError("gate_analysis: sample and example counts differ");
  std::vector<GateRow> rows;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto g = gate_values(model, examples[i].input.priors);
    rows.push_back({samples[i].id, d.labels[l], samples[i].targets.values.at(l), samples[i].priors.at(l).values.at(f),
                    mean_gate(g.at(l))});
  }
  return rows;
}

std::string gate_analysis_csv(const std::vector<GateRow>& rows) {
  std::string out = "sample_id,label,y,feature_value,mean_gate\n";
  for (const auto& r : rows)
    out += r.sample_id + "," + r.label + "," + (r.y ? (*r.y ? "1" : "0") : "NA") + "," + io::format_double(r.feature_value) +
           "," + io::format_double(r.mean_gate) + "\n";
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "arm,level,macro_auroc\n";
  for (const auto& r : rows) out += r.arm + "," + io::format_double(r.level) + "," + cell(r.macro_auroc) + "\n";
  return out;
}

// ---- Commands -------------------------------------------------------------------

void cmd_generate(const ExperimentConfig& c, std::ostream& log) {
  validate(c);
  const Dataset d = generate_dataset(c);
  write_dataset(d, c.dataset_dir);
  io::write_text(fs::path(c.dataset_dir) / "config.json", emit_config(c));
  for (Split s : kAllSplits) log << to_string(s) << ": " << d.split(s).size() << "\n";
}

void cmd_train(const ExperimentConfig& c, const std::string& arm_id, std::ostream& log) {
  const ArmConfig& arm = c.arm(arm_id);
  const Dataset d = load_dataset(c.dataset_dir, {Split::Train, Split::Val});
  const auto norms = fit_normalizers(d);
  const auto train_set = make_examples(c, d.split(Split::Train), norms);
  const auto val_set = make_examples(c, d.split(Split::Val), norms);
  const fs::path dir = arm_dir(c, arm.id);
  std::string log_text;
  auto result = train_arm(c, d, train_set, val_set, arm.fusion, [&](const EpochLog& e) {
    log_text += io::train_log_line(e);
    log << "epoch " << e.epoch << " loss " << io::format_double(e.loss) << " val_auroc " << cell(e.val_auroc) << "\n";
  });
  io::write_text(dir / "train_log.jsonl", log_text);
  io::write_checkpoint(dir / "checkpoint", result.model, model_config_json(result.model.config()));
  io::write_text(dir / "normalizers.json", io::normalizers_json(norms));
  log << "wrote " << (dir / "checkpoint.bin").string() << "\n";
}

void cmd_evaluate(const ExperimentConfig& c, Split split, std::ostream& log) {
  const Dataset d = load_dataset(c.dataset_dir, {split});
  const fs::path dir = fs::path(c.output_dir) / "eval" / to_string(split);
  MetricOptions mo = c.metrics;
  mo.seed = bootstrap_seed(c);
  std::map<std::string, PredictionSet> sets;
  for (const auto& arm : c.arms) {
    LoadedArm la = load_arm(c, d, arm);
    const auto examples = make_examples(c, d.split(split), la.norms);
    PredictionSet ps = predict_set(la.model, examples, d.labels, arm.id);
    const MetricReport report = evaluate_predictions(ps, mo);
    io::write_text(dir / arm.id / "predictions.csv", io::predictions_csv(ps));
    io::write_text(dir / arm.id / "metrics.json", io::metrics_json(report));
    io::write_text(dir / arm.id / "metrics.csv", io::metrics_csv(report));
    log << arm.id << ": macro AUROC " << cell(report.macro_auroc.value) << "\n";
    sets.emplace(arm.id, std::move(ps));
  }

  std::string strat = "family";
  for (const auto& arm : c.arms) strat += "," + arm.id;
  strat += "\n";
  for (const auto& fam : distinct_families(d.families)) {
    strat += fam;
    for (const auto& arm : c.arms) strat += "," + cell(family_auroc(sets.at(arm.id), d.families, fam));
    strat += "\n";
  }
  io::write_text(dir / "stratified.csv", strat);

  const ArmConfig* base = find_fusion(c, FusionMode::None);
  const ArmConfig* treated = find_fusion(c, FusionMode::Gated);
  if (!base || !treated) {
    log << "veto analysis skipped: needs a 'none' and a 'gated' arm\n";
    return;
  }
  const VetoReport pv = pvr(sets.at(base->id), sets.at(treated->id), c.veto);
  const VetoReport vr = tsr_and_selectivity(sets.at(base->id), sets.at(treated->id), c.veto);
  std::string csv = "label,baseline_false_positives,suppressed,pvr,positives,positives_suppressed,tsr,selectivity\n";
  for (std::size_t l = 0; l < vr.labels.size(); ++l) {
    const LabelVeto& v = vr.labels[l];
    csv += v.label + "," + std::to_string(v.baseline_false_positives) + "," + std::to_string(v.suppressed) + "," +
           cell(pv.labels[l].pvr) + "," + std::to_string(v.positives) + "," + std::to_string(v.positives_suppressed) + "," +
           cell(v.tsr) + "," + cell(v.selectivity) + "\n";
  }
  csv += "macro,,," + cell(pv.macro_pvr) + ",,," + cell(vr.macro_tsr) + "," + cell(vr.macro_selectivity) + "\n";
  io::write_text(dir / "veto.csv", csv);
  log << "veto: PVR " << cell(pv.macro_pvr) << " TSR " << cell(vr.macro_tsr) << " selectivity "
      << cell(vr.macro_selectivity) << "\n";
}

void cmd_corruption_sweep(const ExperimentConfig& c, Split split, std::ostream& log) {
  const Dataset d = load_dataset(c.dataset_dir, {split});
  std::vector<double> levels{0.0};
  for (double p : c.corruption_levels)
    if (p != 0.0) levels.push_back(p);
  std::vector<SweepRow> rows;
  for (const auto& arm : c.arms) {
    LoadedArm la = load_arm(c, d, arm);
    const auto clean = make_examples(c, d.split(split), la.norms);
    for (double level : levels) {
      auto samples = d.split(split);
      corrupt_priors(samples, level, corruption_seed(c, level));
      const auto examples = with_priors(clean, samples, la.norms);
      const auto ps = predict_set(la.model, examples, d.labels, arm.id);
      rows.push_back({arm.id, level, macro_metric(ps, Metric::Auroc, c.metrics.bins)});
      log << arm.id << " @ " << io::format_double(level) << "%: " << cell(rows.back().macro_auroc) << "\n";
    }
  }
  io::write_text(fs::path(c.output_dir) / ("corruption_sweep_" + to_string(split) + ".csv"), sweep_csv(rows));
}

void cmd_gate_analysis(const ExperimentConfig& c, const std::string& arm_id, const std::string& feature,
                       std::ostream& log) {
  const ArmConfig& arm = c.arm(arm_id);
  if (arm.fusion != FusionMode::Gated) throw ConfigError("gate analysis needs a gated arm, '" + arm_id + "' is " + to_string(arm.fusion));
  const Dataset d = load_dataset(c.dataset_dir, {Split::TestExternal});
  LoadedArm la = load_arm(c, d, arm);
  const auto& samples = d.split(Split::TestExternal);
  std::vector<Example> examples;
  for (const auto& s : samples) {
    Example ex;
    ex.input.sample_id = s.id;
    for (std::size_t l = 0; l < s.priors.size(); ++l) ex.input.priors.push_back(la.norms[l].apply(s.priors[l].values));
    ex.targets = s.targets;
    examples.push_back(std::move(ex));
  }
  const auto rows = gate_analysis(la.model, d, samples, examples, feature);
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(r.feature_value);
    y.push_back(r.mean_gate);
  }
  io::write_text(fs::path(c.output_dir) / ("gate_analysis_" + feature + ".csv"), gate_analysis_csv(rows));
  log << "gate analysis: " << rows.size() << " samples, Spearman rho " << io::format_double(spearman(x, y)) << "\n";
}

}  // namespace janus
