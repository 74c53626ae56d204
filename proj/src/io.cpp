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

#include "janus/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "janus/error.hpp"

namespace janus::io {

using json = nlohmann::ordered_json;

namespace {

static_assert(std::endian::native == std::endian::little, "binary files assume a little-endian host");

void ensure_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
}

void write_binary(const fs::path& path, const std::vector<double>& values) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<double> read_binary(const fs::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != count * sizeof(double)) {
    throw DataError("'" + path.string() + "' holds " + std::to_string(bytes) + " bytes, expected " +
                    std::to_string(count * sizeof(double)));
  }
  in.seekg(0);
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw IoError("read failed for '" + path.string() + "'");
  return values;
}

fs::path with_suffix(const fs::path& stem, const char* suffix) { return fs::path(stem.string() + suffix); }

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(what + ": malformed JSON: " + e.what());
  }
}

std::pair<Extent3, Spacing3> read_header(const fs::path& stem, const std::string& dtype) {
  const json h = parse_json(read_text(with_suffix(stem, ".json")), stem.string());
  try {
    if (h.value("dtype", dtype) != dtype) throw DataError("'" + stem.string() + ".json': expected dtype " + dtype);
    Extent3 e{};
    Spacing3 s{};
    for (int a = 0; a < 3; ++a) {
      e[a] = h.at("shape").at(a).get<std::size_t>();
      s[a] = h.at("spacing").at(a).get<double>();
    }
    return {e, s};
  } catch (const json::exception& ex) {
    throw DataError("'" + stem.string() + ".json': " + ex.what());
  }
}

void write_header(const fs::path& stem, const Extent3& e, const Spacing3& s, const char* dtype = "float64") {
  json h;
  h["dtype"] = dtype;
  h["shape"] = {e[0], e[1], e[2]};
  h["spacing"] = {s[0], s[1], s[2]};
  write_text(with_suffix(stem, ".json"), h.dump(2) + "\n");
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError(what + ": not a number: '" + s + "'");
  return v;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::vector<std::string>& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_fields(line) != header) {
    std::string expected;
    for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
    throw DataError("CSV header mismatch, expected '" + expected + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != header.size()) throw DataError("CSV row has " + std::to_string(f.size()) + " fields: '" + line + "'");
    rows.push_back(std::move(f));
  }
  return rows;
}

json optional_number(const std::optional<double>& v) { return v && std::isfinite(*v) ? json(*v) : json(nullptr); }

json metric_value_json(const MetricValue& m) {
  json j;
  j["value"] = optional_number(m.value);
  j["ci_lo"] = m.ci ? json(m.ci->lo) : json(nullptr);
  j["ci_hi"] = m.ci ? json(m.ci->hi) : json(nullptr);
  return j;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_volume(const fs::path& stem, const Volume& v) {
  write_binary(with_suffix(stem, ".bin"), v.data);
  write_header(stem, v.extent, v.spacing, "float64");
}

Volume read_volume(const fs::path& stem) {
  const auto [e, s] = read_header(stem, "float64");
  Volume v(e, s);
  v.data = read_binary(with_suffix(stem, ".bin"), v.data.size());
  return v;
}

void write_mask(const fs::path& stem, const BinaryMask& m) {
  const fs::path bin = with_suffix(stem, ".bin");
  ensure_parent(bin);
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + bin.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(m.data.data()), static_cast<std::streamsize>(m.data.size()));
  if (!out) throw IoError("write failed for '" + bin.string() + "'");
  write_header(stem, m.extent, m.spacing, "uint8");
}

BinaryMask read_mask(const fs::path& stem) {
  const auto [e, s] = read_header(stem, "uint8");
  BinaryMask m(e, s);
  const fs::path bin = with_suffix(stem, ".bin");
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw IoError("cannot open '" + bin.string() + "'");
  in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.data.size()));
  if (!in || in.peek() != std::char_traits<char>::eof()) throw DataError("mask '" + bin.string() + "' has the wrong size");
  for (auto v : m.data)
    if (v > 1) throw DataError("mask '" + stem.string() + "' is not binary");
  return m;
}

std::string priors_csv(const std::vector<PriorRow>& rows) {
  std::string out = "sample_id,label,feature,value\n";
  for (const auto& r : rows) out += r.sample_id + "," + r.label + "," + r.feature + "," + format_double(r.value) + "\n";
  return out;
}

std::vector<PriorRow> parse_priors_csv(const std::string& text) {
  std::vector<PriorRow> out;
  for (auto& f : csv_rows(text, {"sample_id", "label", "feature", "value"}))
    out.push_back({f[0], f[1], f[2], parse_double(f[3], "priors.csv")});
  return out;
}

std::string manifest_json(const Manifest& m) {
  json j;
  j["labels"] = m.labels;
  j["families"] = m.families;
  j["features"] = m.features;
  json samples = json::array();
  for (const auto& s : m.samples) {
    json row;
    row["id"] = s.id;
    row["split"] = to_string(s.split);
    json y = json::array();
    for (const auto& v : s.labels) y.push_back(v ? json(*v ? 1 : 0) : json("NA"));
    row["y"] = y;
    samples.push_back(row);
  }
  j["samples"] = samples;
  return j.dump(2) + "\n";
}

Manifest parse_manifest(const std::string& text) {
  const json j = parse_json(text, "manifest");
  Manifest m;
  try {
    m.labels = j.at("labels").get<std::vector<std::string>>();
    m.families = j.at("families").get<std::vector<std::string>>();
    m.features = j.at("features").get<std::vector<std::vector<std::string>>>();
    for (const auto& row : j.at("samples")) {
      ManifestEntry e;
      e.id = row.at("id").get<std::string>();
      e.split = split_from_string(row.at("split").get<std::string>());
      for (const auto& y : row.at("y")) {
        if (y.is_string() && y.get<std::string>() == "NA") e.labels.emplace_back();
        else e.labels.emplace_back(y.get<int>() == 1);
      }
      if (e.labels.size() != m.labels.size()) throw DataError("manifest row '" + e.id + "' has the wrong label count");
      m.samples.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("manifest: ") + ex.what());
  } catch (const ConfigError& ex) {
    throw DataError(std::string("manifest: ") + ex.what());
  }
  return m;
}

void write_checkpoint(const fs::path& stem, Model& model, const std::string& model_config_json) {
  std::vector<double> flat;
  json params = json::array();
  for (Parameter* p : model.parameters()) {
    json e;
    e["name"] = p->name;
    e["shape"] = p->value.shape();
    e["offset"] = flat.size();
    params.push_back(e);
    const auto v = p->value.values();
    flat.insert(flat.end(), v.begin(), v.end());
  }
  json j;
  j["model"] = parse_json(model_config_json, "model config");
  j["parameters"] = params;
  j["count"] = flat.size();
  write_binary(with_suffix(stem, ".bin"), flat);
  write_text(with_suffix(stem, ".json"), j.dump(2) + "\n");
}

void read_checkpoint(const fs::path& stem, Model& model) {
  const json j = parse_json(read_text(with_suffix(stem, ".json")), stem.string());
  try {
    const auto flat = read_binary(with_suffix(stem, ".bin"), j.at("count").get<std::size_t>());
    const auto params = model.parameters();
    const auto& entries = j.at("parameters");
    if (entries.size() != params.size()) throw DataError("checkpoint '" + stem.string() + "' parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter& p = *params[i];
      const auto& e = entries[i];
      if (e.at("name").get<std::string>() != p.name || e.at("shape").get<Shape>() != p.value.shape())
        throw DataError("checkpoint '" + stem.string() + "' does not match parameter '" + p.name + "'");
      const std::size_t off = e.at("offset").get<std::size_t>();
      if (off + p.value.size() > flat.size()) throw DataError("checkpoint '" + stem.string() + "' is truncated");
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), p.value.size(), p.value.storage().begin());
    }
  } catch (const json::exception& ex) {
    throw DataError("checkpoint '" + stem.string() + "': " + ex.what());
  }
}

std::string normalizers_json(const std::vector<PriorNormalizer>& norms) {
  json arr = json::array();
  for (const auto& n : norms) {
    json e;
    e["features"] = n.features;
    e["mean"] = n.mean;
    e["std"] = n.std;
    arr.push_back(e);
  }
  return arr.dump(2) + "\n";
}

std::vector<PriorNormalizer> parse_normalizers(const std::string& text) {
  const json j = parse_json(text, "normalizers");
  std::vector<PriorNormalizer> out;
  try {
    for (const auto& e : j) {
      PriorNormalizer n;
      n.features = e.at("features").get<std::vector<std::string>>();
      n.mean = e.at("mean").get<std::vector<double>>();
      n.std = e.at("std").get<std::vector<double>>();
      out.push_back(std::move(n));
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("normalizers: ") + ex.what());
  }
  return out;
}

std::string predictions_csv(const PredictionSet& set) {
  std::string out = "sample_id,label,y,p_model\n";
  for (std::size_t i = 0; i < set.samples(); ++i)
    for (std::size_t l = 0; l < set.label_count(); ++l) {
      const auto y = set.target(i, l);
      out += set.sample_ids[i] + "," + set.labels[l] + "," + (y ? (*y ? "1" : "0") : "NA") + "," +
             format_double(set.prob(i, l)) + "\n";
    }
  return out;
}

PredictionSet parse_predictions_csv(const std::string& text, const std::string& model_id) {
  PredictionSet set;
  set.model_id = model_id;
  const auto rows = csv_rows(text, {"sample_id", "label", "y", "p_model"});
  std::map<std::string, std::size_t> label_index;
  for (const auto& r : rows) {
    if (label_index.emplace(r[1], set.labels.size()).second) set.labels.push_back(r[1]);
  }
  const std::size_t L = set.labels.size();
  if (L == 0 || rows.size() % L != 0) throw DataError("predictions CSV is not a full sample x label grid");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (k % L == 0) set.sample_ids.push_back(r[0]);
    if (r[0] != set.sample_ids.back() || label_index.at(r[1]) != k % L)
      throw DataError("predictions CSV rows are not grouped by sample in label order");
    if (r[2] == "NA") set.targets.emplace_back();
    else if (r[2] == "0" || r[2] == "1") set.targets.emplace_back(r[2] == "1");
    else throw DataError("predictions CSV: bad y value '" + r[2] + "'");
    set.probs.push_back(parse_double(r[3], "predictions CSV"));
  }
  return set;
}

std::string metrics_json(const MetricReport& r) {
  json j;
  j["model_id"] = r.model_id;
  j["macro"] = {{"auroc", metric_value_json(r.macro_auroc)},
                {"auprc", metric_value_json(r.macro_auprc)},
                {"ece", metric_value_json(r.macro_ece)}};
  json labels = json::array();
  for (const auto& l : r.labels) {
    json e;
    e["label"] = l.label;
    e["observed"] = l.observed;
    e["positives"] = l.positives;
    e["auroc"] = metric_value_json(l.auroc);
    e["auprc"] = metric_value_json(l.auprc);
    e["ece"] = metric_value_json(l.ece);
    labels.push_back(e);
  }
  j["labels"] = labels;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string metrics_csv(const MetricReport& r) {
  std::string out = "label,metric,value,ci_lo,ci_hi\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  auto row = [&](const std::string& label, const char* metric, const MetricValue& m) {
    out += label + "," + metric + "," + cell(m.value) + "," + cell(m.ci ? std::optional(m.ci->lo) : std::nullopt) + "," +
           cell(m.ci ? std::optional(m.ci->hi) : std::nullopt) + "\n";
  };
  row("macro", "auroc", r.macro_auroc);
  row("macro", "auprc", r.macro_auprc);
  row("macro", "ece", r.macro_ece);
  for (const auto& l : r.labels) {
    row(l.label, "auroc", l.auroc);
    row(l.label, "auprc", l.auprc);
    row(l.label, "ece", l.ece);
  }
  return out;
}

std::string train_log_line(const EpochLog& e) {
  json j;
  j["epoch"] = e.epoch;
  j["loss"] = e.loss;
  j["val_auroc"] = optional_number(e.val_auroc);
  j["w_curriculum"] = e.w_curriculum;
  j["empty_samples"] = e.empty_samples;
  return j.dump() + "\n";
}

std::vector<EpochLog> parse_train_log(const std::string& text) {
  std::vector<EpochLog> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = parse_json(line, "train log");
    try {
      EpochLog e;
      e.epoch = j.at("epoch").get<std::size_t>();
      e.loss = j.at("loss").get<double>();
      if (!j.at("val_auroc").is_null()) e.val_auroc = j.at("val_auroc").get<double>();
      e.w_curriculum = j.at("w_curriculum").get<double>();
      e.empty_samples = j.value("empty_samples", std::size_t{0});
      out.push_back(e);
    } catch (const json::exception& ex) {
      throw DataError(std::string("train log: ") + ex.what());
    }
  }
  return out;
}

std::string attention_csv(const Tensor& weights) {
  if (weights.rank() != 2) throw DimensionError("attention_csv expects [T, N] weights");
  std::string out = "t,i,weight\n";
  for (std::size_t t = 0; t < weights.dim(0); ++t)
    for (std::size_t i = 0; i < weights.dim(1); ++i)
      out += std::to_string(t) + "," + std::to_string(i) + "," + format_double(weights[t * weights.dim(1) + i]) + "\n";
  return out;
}

}  // namespace janus::io
