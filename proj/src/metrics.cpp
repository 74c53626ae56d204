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

#include "janus/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "janus/error.hpp"
#include "janus/rng.hpp"

namespace janus {

void check_aligned(const PredictionSet& a, const PredictionSet& b) {
  if (a.sample_ids != b.sample_ids || a.labels != b.labels || a.targets != b.targets ||
      a.probs.size() != b.probs.size()) {
    throw DataError("prediction sets '" + a.model_id + "' and '" + b.model_id + "' are not aligned");
  }
}

namespace {

void check_pair(std::span<const double> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DimensionError("metric: score and label lengths differ");
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels) {
  check_pair(scores, labels);
  const auto ranks = average_ranks(scores);
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      pos_rank_sum += ranks[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::optional<double> auprc(std::span<const double> scores, std::span<const int> labels) {
  check_pair(scores, labels);
  const auto total_pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int v) { return v != 0; }));
  if (total_pos == 0) return std::nullopt;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] ? 1 : 0;
      ++seen;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

std::size_t ece_bin(double p, std::size_t bins) {
  return std::min(static_cast<std::size_t>(std::floor(p * static_cast<double>(bins))), bins - 1);
}

double ece(std::span<const double> probs, std::span<const int> labels, std::size_t bins) {
  check_pair(probs, labels);
  if (bins == 0) throw ArgumentError("ece: bins must be positive");
  if (probs.empty()) return 0.0;
  std::vector<double> conf(bins, 0.0), pos(bins, 0.0), count(bins, 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("ece: probability outside [0,1]");
    const std::size_t b = ece_bin(p, bins);
    conf[b] += p;
    pos[b] += labels[i] ? 1.0 : 0.0;
    count[b] += 1.0;
  }
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0.0) continue;
    total += count[b] * std::abs(pos[b] / count[b] - conf[b] / count[b]);
  }
  return total / static_cast<double>(probs.size());
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("spearman: need two equal-length series (n >= 2)");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::Auroc: return "auroc";
    case Metric::Auprc: return "auprc";
    case Metric::Ece: return "ece";
  }
  return "?";
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

std::optional<double> label_metric(const PredictionSet& set, std::size_t label, Metric metric,
                                   std::span<const std::size_t> rows, std::size_t bins) {
  std::vector<double> p;
  std::vector<int> y;
  p.reserve(rows.size());
  y.reserve(rows.size());
  for (std::size_t i : rows) {
    const auto t = set.target(i, label);
    if (!t) continue;
    p.push_back(set.prob(i, label));
    y.push_back(*t ? 1 : 0);
  }
  switch (metric) {
    case Metric::Auroc: return auroc(p, y);
    case Metric::Auprc: return auprc(p, y);
    case Metric::Ece: {
      // Keeps the same exclusion rule as AUROC so the macro averages agree on labels.
      const bool pos = std::find(y.begin(), y.end(), 1) != y.end();
      const bool neg = std::find(y.begin(), y.end(), 0) != y.end();
      if (!pos || !neg) return std::nullopt;
      return ece(p, y, bins);
    }
  }
  return std::nullopt;
}

std::optional<double> macro_metric(const PredictionSet& set, Metric metric, std::span<const std::size_t> rows,
                                   std::size_t bins) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < set.label_count(); ++l) {
    if (auto v = label_metric(set, l, metric, rows, bins)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<double> macro_metric(const PredictionSet& set, Metric metric, std::size_t bins) {
  return macro_metric(set, metric, all_rows(set.samples()), bins);
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::size_t resample, std::uint64_t seed) {
  Rng rng(seed + resample);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = uniform_index(rng, n);
  return idx;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ArgumentError("quantile of empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

std::optional<Interval> percentile_interval(std::vector<double> values, double level) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const double alpha = (1.0 - level) / 2.0;
  return Interval{quantile_sorted(values, alpha), quantile_sorted(values, 1.0 - alpha)};
}

}  // namespace

std::optional<Interval> bootstrap_ci(const RowMetric& metric, std::size_t n_rows, std::size_t n_resamples,
                                     double level, std::uint64_t seed) {
  if (n_rows == 0) throw ArgumentError("bootstrap_ci: empty prediction set");
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("bootstrap_ci: level must lie in (0,1)");
  std::vector<double> values;
  values.reserve(n_resamples);
  for (std::size_t b = 0; b < n_resamples; ++b) {
    const auto rows = bootstrap_indices(n_rows, b, seed);
    if (auto v = metric(rows)) values.push_back(*v);
  }
  return percentile_interval(std::move(values), level);
}

MetricReport evaluate_predictions(const PredictionSet& set, const MetricOptions& options) {
  if (set.samples() == 0) throw ArgumentError("evaluate: empty prediction set");
  MetricReport report;
  report.model_id = set.model_id;
  const std::size_t n_labels = set.label_count();
  constexpr std::array<Metric, 3> kMetrics{Metric::Auroc, Metric::Auprc, Metric::Ece};

  const auto rows = all_rows(set.samples());
  for (std::size_t l = 0; l < n_labels; ++l) {
    LabelMetrics lm;
    lm.label = set.labels[l];
    for (std::size_t i = 0; i < set.samples(); ++i) {
      if (auto t = set.target(i, l)) {
        ++lm.observed;
        lm.positives += *t ? 1 : 0;
      }
    }
    lm.auroc.value = label_metric(set, l, Metric::Auroc, rows, options.bins);
    lm.auprc.value = label_metric(set, l, Metric::Auprc, rows, options.bins);
    lm.ece.value = label_metric(set, l, Metric::Ece, rows, options.bins);
    if (!lm.auroc.value) {
      report.warnings.push_back("label '" + lm.label + "' has a single class; excluded from macro averages");
    }
    report.labels.push_back(std::move(lm));
  }
  report.macro_auroc.value = macro_metric(set, Metric::Auroc, rows, options.bins);
  report.macro_auprc.value = macro_metric(set, Metric::Auprc, rows, options.bins);
  report.macro_ece.value = macro_metric(set, Metric::Ece, rows, options.bins);

  // One set of resamples shared by every metric: [label or macro][metric].
  std::vector<std::array<std::vector<double>, 3>> draws(n_labels + 1);
  for (std::size_t b = 0; b < options.resamples; ++b) {
    const auto idx = bootstrap_indices(set.samples(), b, options.seed);
    for (std::size_t m = 0; m < kMetrics.size(); ++m) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t l = 0; l < n_labels; ++l) {
        if (auto v = label_metric(set, l, kMetrics[m], idx, options.bins)) {
          draws[l][m].push_back(*v);
          sum += *v;
          ++n;
        }
      }
      if (n > 0) draws[n_labels][m].push_back(sum / static_cast<double>(n));
    }
  }
  for (std::size_t l = 0; l < n_labels; ++l) {
    report.labels[l].auroc.ci = percentile_interval(draws[l][0], options.level);
    report.labels[l].auprc.ci = percentile_interval(draws[l][1], options.level);
    report.labels[l].ece.ci = percentile_interval(draws[l][2], options.level);
  }
  report.macro_auroc.ci = percentile_interval(draws[n_labels][0], options.level);
  report.macro_auprc.ci = percentile_interval(draws[n_labels][1], options.level);
  report.macro_ece.ci = percentile_interval(draws[n_labels][2], options.level);
  return report;
}

VetoReport pvr(const PredictionSet& baseline, const PredictionSet& treated, const VetoOptions& options) {
  check_aligned(baseline, treated);
  VetoReport report;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < baseline.label_count(); ++l) {
    LabelVeto lv;
    lv.label = baseline.labels[l];
    for (std::size_t i = 0; i < baseline.samples(); ++i) {
      const auto t = baseline.target(i, l);
      if (!t || *t || baseline.prob(i, l) < options.confidence) continue;
      ++lv.baseline_false_positives;
      if (treated.prob(i, l) < options.threshold) ++lv.suppressed;
    }
    if (lv.baseline_false_positives > 0) {
      lv.pvr = static_cast<double>(lv.suppressed) / static_cast<double>(lv.baseline_false_positives);
    }
    lv.qualifies = lv.baseline_false_positives >= options.min_count && lv.baseline_false_positives > 0;
    if (lv.qualifies) {
      sum += *lv.pvr;
      ++n;
    }
    report.labels.push_back(std::move(lv));
  }
  if (n > 0) report.macro_pvr = sum / static_cast<double>(n);
  return report;
}

VetoReport tsr_and_selectivity(const PredictionSet& baseline, const PredictionSet& treated,
                               const VetoOptions& options) {
  VetoReport report = pvr(baseline, treated, options);
  double tsr_sum = 0.0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < report.labels.size(); ++l) {
    LabelVeto& lv = report.labels[l];
    for (std::size_t i = 0; i < treated.samples(); ++i) {
      const auto t = treated.target(i, l);
      if (!t || !*t) continue;
      ++lv.positives;
      if (treated.prob(i, l) < options.threshold) ++lv.positives_suppressed;
    }
    if (lv.positives == 0) continue;
    lv.tsr = static_cast<double>(lv.positives_suppressed) / static_cast<double>(lv.positives);
    if (lv.pvr) lv.selectivity = *lv.tsr > 0.0 ? *lv.pvr / *lv.tsr : kInfiniteSelectivity;
    if (lv.qualifies) {
      tsr_sum += *lv.tsr;
      ++n;
    }
  }
  if (n > 0) {
    report.macro_tsr = tsr_sum / static_cast<double>(n);
    if (report.macro_pvr) {
      report.macro_selectivity = *report.macro_tsr > 0.0 ? *report.macro_pvr / *report.macro_tsr : kInfiniteSelectivity;
    }
  }
  return report;
}

}  // namespace janus
