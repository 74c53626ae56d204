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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace janus {

// Per-sample, per-label predictions of one model. Targets are 0/1 or missing.
struct PredictionSet {
  std::string model_id;
  std::vector<std::string> sample_ids;
  std::vector<std::string> labels;
  std::vector<std::optional<bool>> targets;  // [sample * labels + label]
  std::vector<double> probs;                 // same layout

  std::size_t samples() const noexcept { return sample_ids.size(); }
  std::size_t label_count() const noexcept { return labels.size(); }
  std::optional<bool> target(std::size_t i, std::size_t l) const { return targets[i * labels.size() + l]; }
  double prob(std::size_t i, std::size_t l) const { return probs[i * labels.size() + l]; }
};

// Throws DataError unless both sets share sample ids, labels and targets.
void check_aligned(const PredictionSet& a, const PredictionSet& b);

// ---- Scalar metrics ---------------------------------------------------------
// labels are 0/1. nullopt signals a label excluded from macro averages.

// Mann-Whitney AUROC with ties counted 1/2; nullopt without both classes.
std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels);
// Step-wise average precision over descending distinct thresholds (ties grouped);
// nullopt without positives.
std::optional<double> auprc(std::span<const double> scores, std::span<const int> labels);
// Equal-width bins, left-closed / right-open, last bin closed. Per bin:
// |fraction positive - mean probability|, weighted by occupancy.
double ece(std::span<const double> probs, std::span<const int> labels, std::size_t bins = 10);
std::size_t ece_bin(double p, std::size_t bins);

// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);
std::vector<double> average_ranks(std::span<const double> x);

enum class Metric { Auroc, Auprc, Ece };
std::string to_string(Metric m);

// Metric of one label over the given rows (repeats allowed); missing targets skipped.
std::optional<double> label_metric(const PredictionSet& set, std::size_t label, Metric metric,
                                   std::span<const std::size_t> rows, std::size_t bins = 10);
// Mean over labels whose metric is defined; nullopt when none is.
std::optional<double> macro_metric(const PredictionSet& set, Metric metric, std::span<const std::size_t> rows,
                                   std::size_t bins = 10);
std::optional<double> macro_metric(const PredictionSet& set, Metric metric, std::size_t bins = 10);

std::vector<std::size_t> all_rows(std::size_t n);

// ---- Bootstrap ----------------------------------------------------------------
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

// Row indices of resample b: n draws with replacement from mt19937_64(seed + b).
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::size_t resample, std::uint64_t seed);

// Linear-interpolated quantile of sorted values (q in [0,1]).
double quantile_sorted(std::span<const double> sorted, double q);

using RowMetric = std::function<std::optional<double>(std::span<const std::size_t>)>;

// Percentile CI over resamples of rows; resamples where the metric is
// undefined are skipped. nullopt when every resample is skipped.
std::optional<Interval> bootstrap_ci(const RowMetric& metric, std::size_t n_rows, std::size_t n_resamples = 1000,
                                     double level = 0.95, std::uint64_t seed = 0);

// ---- Report --------------------------------------------------------------------
struct MetricValue {
  std::optional<double> value;
  std::optional<Interval> ci;
};

struct LabelMetrics {
  std::string label;
  std::size_t observed = 0;
  std::size_t positives = 0;
  MetricValue auroc;
  MetricValue auprc;
  MetricValue ece;
};

struct MetricOptions {
  std::size_t bins = 10;
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  bool operator==(const MetricOptions&) const = default;
};

struct MetricReport {
  std::string model_id;
  std::vector<LabelMetrics> labels;
  MetricValue macro_auroc;
  MetricValue macro_auprc;
  MetricValue macro_ece;
  std::vector<std::string> warnings;
};

MetricReport evaluate_predictions(const PredictionSet& set, const MetricOptions& options);

// ---- Physiological veto ------------------------------------------------------------
struct VetoOptions {
  double confidence = 0.8;
  double threshold = 0.5;
  std::size_t min_count = 5;
  bool operator==(const VetoOptions&) const = default;
};

inline constexpr double kInfiniteSelectivity = std::numeric_limits<double>::infinity();

struct LabelVeto {
  std::string label;
  std::size_t baseline_false_positives = 0;  // |F|
  std::size_t suppressed = 0;
  std::optional<double> pvr;
  std::size_t positives = 0;
  std::size_t positives_suppressed = 0;
  std::optional<double> tsr;
  // PVR / TSR; +inf when TSR is 0.
  std::optional<double> selectivity;
  bool qualifies = false;  // |F| >= min_count
};

struct VetoReport {
  std::vector<LabelVeto> labels;
  std::optional<double> macro_pvr;  // equal-weight mean over qualifying labels
  std::optional<double> macro_tsr;  // over the same labels
  std::optional<double> macro_selectivity;
  bool empty() const { return !macro_pvr.has_value(); }
};

// F = {i : y = 0, p_base >= confidence}; PVR = |{i in F : p_treated < threshold}| / |F|.
VetoReport pvr(const PredictionSet& baseline, const PredictionSet& treated, const VetoOptions& options = {});
// Adds TSR = P(p_treated < threshold | y = 1) and selectivity = PVR / TSR.
VetoReport tsr_and_selectivity(const PredictionSet& baseline, const PredictionSet& treated,
                               const VetoOptions& options = {});

}  // namespace janus
