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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "janus/experiment.hpp"
#include "janus/io.hpp"
#include "janus/metrics.hpp"
#include "janus/model.hpp"
#include "janus/pooling.hpp"
#include "janus/rng.hpp"

using namespace janus;
namespace fs = std::filesystem;

namespace {

// ---- Pinned tolerances ---------------------------------------------------------
constexpr double kGradEps = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr double kWeightSumTol = 1e-9;
constexpr double kGateInitTol = 1e-9;
constexpr std::size_t kVetoDraws = 10000;
constexpr double kLossTol = 1e-12;
constexpr double kMetricTol = 1e-12;
constexpr std::size_t kMetricFixtures = 200;
constexpr std::size_t kVetoFixtures = 100;
constexpr double kFamilyGain = 0.05;
constexpr double kFocalBand = 0.05;
constexpr double kMinSelectivity = 1.0;
constexpr double kCorruptionLevel = 50.0;
constexpr double kMinAbsSpearman = 0.3;
constexpr std::size_t kBootstrapResamples = 1000;
constexpr std::size_t kBootstrapFixtures = 100;
const std::vector<std::uint64_t> kSeeds{1, 2, 3};
const std::string kGeometricFeature = "spleen.radius_mm";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Tensor random_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  Tensor t(shape);
  for (double& v : t.values()) v = uniform(rng, lo, hi);
  return t;
}

// ---- 1. Gradient correctness ---------------------------------------------------------
Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  ModelInput in;
  in.sample_id = "toy";
  in.slices = random_tensor({3, 3, 8, 8}, rng, -1, 1);
  const std::vector<std::vector<std::uint8_t>> masks{{1, 1, 0, 1, 0, 1, 1, 0, 0, 0, 1, 1},
                                                     {0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0},
                                                     {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}};
  for (const auto& m : masks) {
    TokenMask tm;
    tm.slices = 3;
    tm.tokens_y = 2;
    tm.tokens_x = 2;
    tm.values = m;
    in.masks.push_back(tm);
    std::vector<double> s(2);
    for (double& v : s) v = uniform(rng, -1.5, 1.5);
    in.priors.push_back(s);
  }
  const LabelTargets targets{{true, false, std::nullopt}};
  std::string detail;
  bool pass = true;
  for (FusionMode mode : {FusionMode::Gated, FusionMode::Concat, FusionMode::None}) {
    ModelConfig cfg;
    cfg.encoder = {4, 8, true, 4};
    cfg.fusion = mode;
    cfg.concat_width = 4;
    cfg.prior_dims = {2, 2, 2};
    Model model = Model::init(cfg, 7);
    auto params = model.parameters();
    const auto r = grad_check(
        [&](Tape& tape) {
          auto f = forward(tape, model, in);
          return curriculum_loss(tape, f.probs, targets, 0.15).loss;
        },
        params, kGradEps);
    pass = pass && r.max_rel_error < kGradTol;
    detail += to_string(mode) + " " + fmt_g(r.max_rel_error) + "; ";
  }
  const double secs = elapsed(t0);
  pass = pass && secs < 60.0;
  return {pass, "max rel err " + detail + fmt(secs, 1) + " s"};
}

// ---- 2. Pooling invariants -------------------------------------------------------------
Outcome pooling_invariants() {
  Rng rng(202);
  double worst_sum = 0.0;
  std::size_t outside = 0, beta_mismatch = 0, fallback_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + trial % 4, gy = 2 + trial % 3, gx = 3, d = 5;
    const Tensor u = random_tensor({T, gy * gx, d}, rng, -3, 3);
    TokenMask m;
    m.slices = T;
    m.tokens_y = gy;
    m.tokens_x = gx;
    const double density = trial % 5 == 0 ? 0.0 : 0.4;
    for (std::size_t i = 0; i < T * gy * gx; ++i) m.values.push_back(uniform(rng) < density ? 1 : 0);
    PoolParams p = PoolParams::init(d, static_cast<std::uint64_t>(trial), "pool");
    p.log_tau.value[0] = uniform(rng, -1, 1);

    p.beta_in.value[0] = 0.0;
    Tape tape;
    const PoolOutput out = pool(tape, tape.constant(u), m, p);
    const Tensor& w0 = out.weights.value();
    p.beta_in.value[0] = 5.0;
    const Tensor w5 = attention_map(u, m, p);
    if (!(w0 == w5)) ++beta_mismatch;

    if (m.empty()) {
      const std::size_t n = T * gy * gx;
      for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += u[r * d + k];
        if (out.embedding.value()[k] != s / static_cast<double>(n)) ++fallback_mismatch;
      }
      continue;
    }
    for (std::size_t t = 0; t < T; ++t) {
      if (m.slice_empty(t)) continue;
      double s = 0.0;
      for (std::size_t i = 0; i < gy * gx; ++i) {
        if (!m.at(t, i) && w0[t * gy * gx + i] != 0.0) ++outside;
        s += w0[t * gy * gx + i];
      }
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
  }
  const bool pass = worst_sum <= kWeightSumTol && outside == 0 && beta_mismatch == 0 && fallback_mismatch == 0;
  return {pass, "max |sum-1| " + fmt_g(worst_sum) + ", outside-ROI weights " + std::to_string(outside) +
                    ", fallback mismatches " + std::to_string(fallback_mismatch) + ", beta_in mismatches " +
                    std::to_string(beta_mismatch)};
}

// ---- 3. Gate initialization --------------------------------------------------------------
Outcome gate_init() {
  const double target = 1.0 / (1.0 + std::exp(-2.0));
  double worst = 0.0;
  Rng rng(303);
  for (std::size_t k : {1, 2, 5}) {
    GateParams g = GateParams::init(32, k, 9, "gate");
    g.weight.value.fill(0.0);
    for (double b : g.bias.value.values())
      if (b != 2.0) worst = 1.0;
    std::vector<double> s(k);
    for (double& v : s) v = uniform(rng, -4, 4);
    Tape tape;
    for (double v : gate(tape, s, g).value().values()) worst = std::max(worst, std::abs(v - target));
  }
  const bool rounds = std::abs(std::round(target * 1e6) / 1e6 - 0.880797) < 1e-12;
  return {worst <= kGateInitTol && rounds,
          "sigmoid(2) = " + fmt(target, 9) + ", max deviation " + fmt_g(worst)};
}

// ---- 4. Bounded veto -----------------------------------------------------------------------
Outcome bounded_veto() {
  Rng rng(404);
  std::size_t violations = 0, coords = 0;
  for (std::size_t draw = 0; draw < kVetoDraws; ++draw) {
    const std::size_t d = 8, k = 3;
    const double wscale = draw % 2 ? 50.0 : 1.0;
    const Tensor z = random_tensor({d}, rng, -20, 20);
    const Tensor w = random_tensor({d, k}, rng, -wscale, wscale);
    const Tensor b = random_tensor({d}, rng, -5, 5);
    const Tensor s = random_tensor({k}, rng, -5, 5);
    Tape tape;
    const Var g = gate(tape.constant(s), tape.constant(w), tape.constant(b));
    const Tensor out = modulate(tape.constant(z), g).value();
    for (std::size_t i = 0; i < d; ++i, ++coords)
      if (std::abs(out[i]) > std::abs(z[i])) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(kVetoDraws) + " draws (" +
                               std::to_string(coords) + " coordinates)"};
}

// ---- 5. Curriculum schedule and reduction ---------------------------------------------------
Outcome curriculum() {
  const bool schedule = curriculum_weight(5) == 0.0 && curriculum_weight(15) == 0.15 && curriculum_weight(25) == 0.3;
  Rng rng(505);
  double worst = 0.0;
  for (int batch = 0; batch < 20; ++batch) {
    std::vector<std::vector<double>> probs;
    std::vector<LabelTargets> targets;
    for (int i = 0; i < 8; ++i) {
      std::vector<double> p(3);
      LabelTargets t;
      for (double& v : p) {
        v = uniform(rng, 0.01, 0.99);
        t.values.emplace_back(uniform(rng) < 0.5);
      }
      probs.push_back(p);
      targets.push_back(t);
    }
    auto batch_mean = [&](double w) {
      double s = 0.0;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        Tape tape;
        std::vector<Var> vp;
        for (double p : probs[i]) vp.push_back(tape.constant(Tensor::scalar(p)));
        s += curriculum_loss(tape, vp, targets[i], w).loss.value()[0];
      }
      return s / static_cast<double>(probs.size());
    };
    const double base = batch_mean(curriculum_weight(0));
    for (int e = 0; e <= 40; ++e) worst = std::max(worst, std::abs(batch_mean(curriculum_weight(e)) - base));
  }
  return {schedule && worst <= kLossTol,
          "w(5,15,25) = " + fmt(curriculum_weight(5), 2) + "/" + fmt(curriculum_weight(15), 2) + "/" +
              fmt(curriculum_weight(25), 2) + ", max epoch drift " + fmt_g(worst)};
}

// ---- 6. Metric oracles ------------------------------------------------------------------------
double auroc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return num / pairs;
}

double auprc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double, std::greater<>> th(s.begin(), s.end());
  double total = 0.0;
  for (int v : y) total += v;
  double ap = 0.0, prev = 0.0;
  for (double t : th) {
    double tp = 0.0, pp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) {
        pp += 1.0;
        tp += y[i];
      }
    ap += (tp / total - prev) * (tp / pp);
    prev = tp / total;
  }
  return ap;
}

PredictionSet random_set(Rng& rng, std::size_t n, std::size_t labels, const std::string& id, double signal) {
  PredictionSet ps;
  ps.model_id = id;
  for (std::size_t l = 0; l < labels; ++l) ps.labels.push_back("l" + std::to_string(l));
  for (std::size_t i = 0; i < n; ++i) ps.sample_ids.push_back("s" + std::to_string(i));
  for (std::size_t k = 0; k < n * labels; ++k) {
    const bool y = uniform(rng) < 0.4;
    ps.targets.emplace_back(uniform(rng) < 0.05 ? std::optional<bool>{} : std::optional<bool>{y});
    const double p = std::clamp(uniform(rng) + (y ? signal : -signal), 0.0, 1.0);
    ps.probs.push_back(p);
  }
  return ps;
}

Outcome metric_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(606);
  double worst_auc = 0.0, worst_ap = 0.0;
  for (std::size_t f = 0; f < kMetricFixtures; ++f) {
    const std::size_t n = 2 + static_cast<std::size_t>(uniform_index(rng, 49));
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = f % 2 ? std::round(uniform(rng) * 8.0) / 8.0 : uniform(rng);
      y[i] = uniform(rng) < 0.5 ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    worst_auc = std::max(worst_auc, std::abs(*auroc(s, y) - auroc_oracle(s, y)));
    worst_ap = std::max(worst_ap, std::abs(*auprc(s, y) - auprc_oracle(s, y)));
  }

  // ECE: exact equality on hand-worked fixtures.
  struct EceCase {
    std::vector<double> p;
    std::vector<int> y;
    std::size_t bins;
    double expected;
  };
  const std::vector<EceCase> ece_cases{
      {{0.0, 1.0}, {0, 1}, 10, 0.0},
      {{0.25, 0.25}, {1, 0}, 10, 0.25},
      {{0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}, 10, 0.0},
      {{0.75, 0.75, 0.75, 0.75}, {1, 1, 1, 0}, 4, 0.0},
      {{1.0, 1.0}, {0, 0}, 10, 1.0},
      {{0.125, 0.875}, {1, 0}, 2, 0.875},
  };
  std::size_t ece_fail = 0;
  for (const auto& c : ece_cases)
    if (ece(c.p, c.y, c.bins) != c.expected) ++ece_fail;

  // PVR / TSR / selectivity by direct enumeration of the definitions.
  const VetoOptions vo;
  std::size_t veto_fail = 0;
  for (std::size_t f = 0; f < kVetoFixtures; ++f) {
    const std::size_t L = 1 + f % 3, n = 20 + uniform_index(rng, 40);
    PredictionSet base = random_set(rng, n, L, "base", 0.3);
    PredictionSet treated = base;
    treated.model_id = "treated";
    for (double& p : treated.probs) p = uniform(rng) < 0.5 ? uniform(rng) : p;
    const VetoReport r = tsr_and_selectivity(base, treated, vo);
    double pvr_sum = 0.0, tsr_sum = 0.0;
    std::size_t q = 0;
    for (std::size_t l = 0; l < L; ++l) {
      std::size_t F = 0, sup = 0, P = 0, psup = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto t = base.target(i, l);
        if (!t) continue;
        if (!*t && base.prob(i, l) >= 0.8) {
          ++F;
          if (treated.prob(i, l) < 0.5) ++sup;
        }
        if (*t) {
          ++P;
          if (treated.prob(i, l) < 0.5) ++psup;
        }
      }
      const auto& lv = r.labels[l];
      if (lv.baseline_false_positives != F || lv.suppressed != sup || lv.positives != P || lv.positives_suppressed != psup)
        ++veto_fail;
      if (F > 0 && (!lv.pvr || *lv.pvr != static_cast<double>(sup) / F)) ++veto_fail;
      if (P > 0) {
        const double tsr = static_cast<double>(psup) / P;
        if (!lv.tsr || *lv.tsr != tsr) ++veto_fail;
        if (F > 0) {
          const double sel = tsr > 0 ? (static_cast<double>(sup) / F) / tsr : kInfiniteSelectivity;
          if (!lv.selectivity || *lv.selectivity != sel) ++veto_fail;
        }
      }
      if (F >= vo.min_count && P > 0) {
        pvr_sum += static_cast<double>(sup) / F;
        tsr_sum += static_cast<double>(psup) / P;
        ++q;
      }
    }
    if (q == 0) {
      if (r.macro_pvr) ++veto_fail;
    } else {
      const double mp = pvr_sum / q, mt = tsr_sum / q;
      const double ms = mt > 0 ? mp / mt : kInfiniteSelectivity;
      if (!r.macro_pvr || std::abs(*r.macro_pvr - mp) > kMetricTol) ++veto_fail;
      if (!r.macro_selectivity || (std::isinf(ms) ? *r.macro_selectivity != ms : std::abs(*r.macro_selectivity - ms) > kMetricTol))
        ++veto_fail;
    }
  }
  const double secs = elapsed(t0);
  const bool pass = worst_auc <= kMetricTol && worst_ap <= kMetricTol && ece_fail == 0 && veto_fail == 0 && secs < 120.0;
  return {pass, "AUROC max err " + fmt_g(worst_auc) + ", AUPRC max err " + fmt_g(worst_ap) + ", ECE fixture failures " +
                    std::to_string(ece_fail) + ", veto mismatches " + std::to_string(veto_fail) + ", " + fmt(secs, 1) + " s"};
}

// ---- 7-10. Phantom benchmark -------------------------------------------------------------------
struct SeedResult {
  std::map<std::string, std::map<std::string, double>> family_external;  // arm -> family -> AUROC
  std::optional<double> selectivity;
  std::map<std::string, double> clean_auroc, corrupt_auroc;
  bool none_flat = true;
  double spearman = 0.0;
  double minutes_per_arm = 0.0;
};

SeedResult run_seed(std::uint64_t seed) {
  ExperimentConfig c = default_experiment_config();
  c.seed = seed;
  const Dataset d = generate_dataset(c);
  const auto norms = fit_normalizers(d);
  const auto train_set = make_examples(c, d.split(Split::Train), norms);
  const auto val_set = make_examples(c, d.split(Split::Val), norms);
  const auto& ext_samples = d.split(Split::TestExternal);
  const auto ext = make_examples(c, ext_samples, norms);

  SeedResult res;
  std::map<std::string, PredictionSet> sets;
  double train_seconds = 0.0;
  for (const auto& arm : c.arms) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult tr = train_arm(c, d, train_set, val_set, arm.fusion);
    train_seconds = std::max(train_seconds, elapsed(t0));
    PredictionSet ps = predict_set(tr.model, ext, d.labels, arm.id);
    for (const auto& fam : distinct_families(d.families))
      res.family_external[to_string(arm.fusion)][fam] = family_auroc(ps, d.families, fam).value_or(NAN);

    std::optional<double> level0;
    for (double level : {0.0, 10.0, 20.0, kCorruptionLevel}) {
      auto corrupted = ext_samples;
      corrupt_priors(corrupted, level, corruption_seed(c, level));
      const auto cps = predict_set(tr.model, with_priors(ext, corrupted, norms), d.labels, arm.id);
      const double auc = macro_metric(cps, Metric::Auroc).value_or(NAN);
      if (!level0) level0 = auc;
      if (arm.fusion == FusionMode::None && auc != *level0) res.none_flat = false;
      if (level == kCorruptionLevel) res.corrupt_auroc[to_string(arm.fusion)] = auc;
    }
    res.clean_auroc[to_string(arm.fusion)] = *level0;

    if (arm.fusion == FusionMode::Gated) {
      const auto rows = gate_analysis(tr.model, d, ext_samples, ext, kGeometricFeature);
      std::vector<double> x, y;
      for (const auto& r : rows) {
        x.push_back(r.feature_value);
        y.push_back(r.mean_gate);
      }
      res.spearman = spearman(x, y);
    }
    sets.emplace(to_string(arm.fusion), std::move(ps));
  }
  res.minutes_per_arm = train_seconds / 60.0;
  res.selectivity = tsr_and_selectivity(sets.at("none"), sets.at("gated"), c.veto).macro_selectivity;
  return res;
}

struct Benchmark {
  std::vector<SeedResult> seeds;
};

Outcome directional_table(const Benchmark& b) {
  std::map<std::string, std::vector<double>> deltas;
  double worst_minutes = 0.0;
  for (const auto& s : b.seeds) {
    for (const auto& [fam, auc] : s.family_external.at("gated")) deltas[fam].push_back(auc - s.family_external.at("none").at(fam));
    worst_minutes = std::max(worst_minutes, s.minutes_per_arm);
  }
  const double geo = median(deltas["geometric"]), den = median(deltas["densitometric"]), foc = median(deltas["focal"]);
  const bool pass = geo >= kFamilyGain && den >= kFamilyGain && std::abs(foc) <= kFocalBand && worst_minutes < 15.0;
  std::string per_seed;
  for (std::size_t i = 0; i < b.seeds.size(); ++i)
    per_seed += " [" + fmt(deltas["geometric"][i], 3) + "/" + fmt(deltas["densitometric"][i], 3) + "/" +
                fmt(deltas["focal"][i], 3) + "]";
  return {pass, "median gated-none external AUROC: geometric " + fmt(geo, 3) + ", densitometric " + fmt(den, 3) +
                    ", focal " + fmt(foc, 3) + "; per seed" + per_seed + "; max " + fmt(worst_minutes, 2) + " min/arm"};
}

Outcome directional_veto(const Benchmark& b) {
  // A seed without a qualifying label (|F| >= 5) has no selectivity and is
  // counted as not exceeding the threshold.
  std::vector<double> v;
  std::string per_seed;
  for (const auto& s : b.seeds) {
    v.push_back(s.selectivity.value_or(0.0));
    per_seed += s.selectivity ? " " + fmt(*s.selectivity, 2) : " undefined";
  }
  const double m = median(v);
  return {m > kMinSelectivity, "median selectivity " + fmt(m, 2) + "; per seed" + per_seed};
}

Outcome directional_corruption(const Benchmark& b) {
  std::vector<double> dg, dc;
  bool flat = true;
  for (const auto& s : b.seeds) {
    dg.push_back(s.clean_auroc.at("gated") - s.corrupt_auroc.at("gated"));
    dc.push_back(s.clean_auroc.at("concat") - s.corrupt_auroc.at("concat"));
    flat = flat && s.none_flat;
  }
  const double mg = median(dg), mc = median(dc);
  std::string per_seed;
  for (std::size_t i = 0; i < dg.size(); ++i) per_seed += " [" + fmt(dg[i], 3) + "/" + fmt(dc[i], 3) + "]";
  return {mg < mc && flat, "median drop at 50%: gated " + fmt(mg, 3) + " vs concat " + fmt(mc, 3) +
                               "; none flat " + (flat ? "yes" : "no") + "; per seed gated/concat" + per_seed};
}

Outcome gate_monotonicity(const Benchmark& b) {
  std::string per_seed;
  bool trained = true;
  for (const auto& s : b.seeds) {
    trained = trained && std::abs(s.spearman) > kMinAbsSpearman;
    per_seed += " " + fmt(s.spearman, 3);
  }
  // Mechanism: for fixed W, each g_i moves with s_k in the direction of W_ik.
  Rng rng(1010);
  std::size_t violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor w = random_tensor({6, 3}, rng, -3, 3), bias = random_tensor({6}, rng, -2, 2);
    std::vector<double> s(3);
    for (double& v : s) v = uniform(rng, -2, 2);
    const std::size_t k = trial % 3;
    std::vector<double> prev;
    for (double step = -3.0; step <= 3.0; step += 0.25) {
      std::vector<double> sk = s;
      sk[k] += step;
      Tape tape;
      const Tensor g = gate(tape.constant(Tensor::vector(sk)), tape.constant(w), tape.constant(bias)).value();
      if (!prev.empty())
        for (std::size_t i = 0; i < 6; ++i) {
          const double wk = w[i * 3 + k];
          if ((wk > 0 && g[i] < prev[i]) || (wk < 0 && g[i] > prev[i])) ++violations;
        }
      prev.assign(g.values().begin(), g.values().end());
    }
  }
  const std::string sign = b.seeds.empty() ? "" : (median([&] {
                                                     std::vector<double> v;
                                                     for (const auto& s : b.seeds) v.push_back(s.spearman);
                                                     return v;
                                                   }()) >= 0
                                                       ? "positive"
                                                       : "negative");
  return {trained && violations == 0, "Spearman(" + kGeometricFeature + ", mean gate) per seed" + per_seed +
                                          " (sign " + sign + "); mechanism violations " + std::to_string(violations)};
}

// ---- 11. Determinism ---------------------------------------------------------------------------
Outcome determinism() {
  std::vector<std::map<std::string, std::string>> runs;
  for (int run = 0; run < 2; ++run) {
    const fs::path root = fs::temp_directory_path() / ("janus_acceptance_determinism_" + std::to_string(run));
    fs::remove_all(root);
    ExperimentConfig c = default_experiment_config();
    c.seed = 11;
    c.dataset_dir = (root / "dataset").string();
    c.output_dir = (root / "runs").string();
    std::ostringstream log;
    cmd_generate(c, log);
    for (const auto& arm : c.arms) cmd_train(c, arm.id, log);
    cmd_evaluate(c, Split::TestExternal, log);
    std::map<std::string, std::string> files;
    files["manifest.json"] = io::read_text(root / "dataset" / "manifest.json");
    for (const auto& arm : c.arms) {
      const auto log_rows = io::parse_train_log(io::read_text(root / "runs" / arm.id / "train_log.jsonl"));
      files[arm.id + " epoch-0 loss"] = io::format_double(log_rows.at(0).loss);
      files[arm.id + " metrics.csv"] = io::read_text(root / "runs" / "eval" / "test-external" / arm.id / "metrics.csv");
    }
    runs.push_back(std::move(files));
    fs::remove_all(root);
  }
  std::size_t diffs = 0;
  for (const auto& [name, text] : runs[0])
    if (runs[1].at(name) != text) ++diffs;
  return {diffs == 0, std::to_string(runs[0].size()) + " artifacts compared, " + std::to_string(diffs) + " differ"};
}

// ---- 12. Bootstrap contract -------------------------------------------------------------------
Outcome bootstrap_contract() {
  Rng rng(1212);
  std::size_t nondeterministic = 0, excluded = 0, checked = 0;
  std::map<std::string, std::size_t> excluded_by_metric;
  for (std::size_t f = 0; f < kBootstrapFixtures; ++f) {
    const PredictionSet ps = random_set(rng, 60 + uniform_index(rng, 140), 2, "m", 0.2);
    const MetricOptions mo{10, kBootstrapResamples, 0.95, 500 + f};
    const MetricReport a = evaluate_predictions(ps, mo), b = evaluate_predictions(ps, mo);
    auto check = [&](const std::string& name, const MetricValue& x, const MetricValue& y) {
      if (!x.value || !x.ci) return;
      ++checked;
      if (x.ci->lo != y.ci->lo || x.ci->hi != y.ci->hi) ++nondeterministic;
      if (!x.ci->contains(*x.value)) {
        ++excluded;
        ++excluded_by_metric[name];
      }
    };
    check("auroc", a.macro_auroc, b.macro_auroc);
    check("auprc", a.macro_auprc, b.macro_auprc);
    check("ece", a.macro_ece, b.macro_ece);
    for (std::size_t l = 0; l < a.labels.size(); ++l) {
      check("auroc", a.labels[l].auroc, b.labels[l].auroc);
      check("auprc", a.labels[l].auprc, b.labels[l].auprc);
      check("ece", a.labels[l].ece, b.labels[l].ece);
    }
  }
  std::string misses;
  for (const auto& [name, count] : excluded_by_metric) misses += " " + name + " " + std::to_string(count);
  auto median_width = [&](std::size_t n) {
    std::vector<double> w;
    for (int f = 0; f < 15; ++f) {
      const PredictionSet ps = random_set(rng, n, 1, "m", 0.2);
      const MetricReport r = evaluate_predictions(ps, {10, kBootstrapResamples, 0.95, static_cast<std::uint64_t>(f)});
      w.push_back(r.macro_auroc.ci->hi - r.macro_auroc.ci->lo);
    }
    return median(w);
  };
  const double w200 = median_width(200), w2000 = median_width(2000);
  return {nondeterministic == 0 && excluded == 0 && w2000 < w200,
          std::to_string(nondeterministic) + " nondeterministic CIs, " + std::to_string(excluded) + " of " +
              std::to_string(checked) + " CIs missing their point estimate" + (misses.empty() ? "" : " (" + misses.substr(1) + ")") +
              "; median AUROC CI width n=200 " + fmt(w200, 4) + ", n=2000 " +
              fmt(w2000, 4)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  Benchmark bench;
  bool bench_ready = false;
  auto with_bench = [&](Outcome (*f)(const Benchmark&)) {
    return [&, f] {
      if (!bench_ready) {
        for (std::uint64_t s : kSeeds) bench.seeds.push_back(run_seed(s));
        bench_ready = true;
      }
      return f(bench);
    };
  };
  const std::vector<Criterion> criteria{
      {"gradient correctness", gradient_correctness},
      {"pooling invariants", pooling_invariants},
      {"gate initialization", gate_init},
      {"bounded veto", bounded_veto},
      {"curriculum schedule and reduction", curriculum},
      {"metric oracles", metric_oracles},
      {"stratified family gains", with_bench(directional_table)},
      {"veto selectivity", with_bench(directional_veto)},
      {"prior corruption robustness", with_bench(directional_corruption)},
      {"gate monotonicity", with_bench(gate_monotonicity)},
      {"determinism", determinism},
      {"bootstrap contract", bootstrap_contract},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
