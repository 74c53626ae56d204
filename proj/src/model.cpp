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

#include "janus/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "janus/metrics.hpp"
#include "janus/rng.hpp"

namespace janus {

std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::Gated: return "gated";
    case FusionMode::Concat: return "concat";
    case FusionMode::None: return "none";
  }
  return "?";
}

FusionMode fusion_from_string(const std::string& s) {
  if (s == "gated") return FusionMode::Gated;
  if (s == "concat") return FusionMode::Concat;
  if (s == "none") return FusionMode::None;
  throw ConfigError("unknown fusion mode '" + s + "' (expected gated, concat or none)");
}

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
  if (config.labels() == 0) throw ArgumentError("model needs at least one label");
  Model m;
  m.config_ = config;
  m.encoder_ = EncoderParams::init(config.encoder, seed);
  const std::size_t d = config.encoder.dim;
  for (std::size_t l = 0; l < config.labels(); ++l) {
    const std::string prefix = "label" + std::to_string(l);
    const std::size_t k = config.prior_dims[l];
    LabelHead h;
    h.pool = PoolParams::init(d, seed, prefix + ".pool");
    std::size_t head_in = d;
    if (config.fusion == FusionMode::Gated) {
      h.gate = GateParams::init(d, k, seed, prefix + ".gate");
    } else if (config.fusion == FusionMode::Concat) {
      const std::size_t w = config.concat_width;
      h.proj_w = Parameter(prefix + ".proj_w", init_uniform({w, k}, k, seed, prefix + ".proj_w"));
      h.proj_b = Parameter(prefix + ".proj_b", init_uniform({w}, k, seed, prefix + ".proj_b"));
      head_in += w;
    }
    h.head_w = Parameter(prefix + ".head_w", init_uniform({head_in, 1}, head_in, seed, prefix + ".head_w"));
    h.head_b = Parameter(prefix + ".head_b", init_uniform({1}, head_in, seed, prefix + ".head_b"));
    m.heads_.push_back(std::move(h));
  }
  return m;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out = encoder_.parameters();
  for (auto& h : heads_) {
    for (Parameter* p : h.pool.parameters()) out.push_back(p);
    if (config_.fusion == FusionMode::Gated) {
      for (Parameter* p : h.gate.parameters()) out.push_back(p);
    } else if (config_.fusion == FusionMode::Concat) {
      out.push_back(&h.proj_w);
      out.push_back(&h.proj_b);
    }
    out.push_back(&h.head_w);
    out.push_back(&h.head_b);
  }
  return out;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

namespace {

void check_input(const Model& model, const ModelInput& input) {
  const auto& cfg = model.config();
  if (input.masks.size() != cfg.labels() || input.priors.size() != cfg.labels()) {
    throw DimensionError("sample '" + input.sample_id + "': expected " + std::to_string(cfg.labels()) +
                         " labels of masks and priors");
  }
  for (std::size_t l = 0; l < cfg.labels(); ++l) {
    if (input.priors[l].size() != cfg.prior_dims[l]) {
      throw DimensionError("sample '" + input.sample_id + "': label " + std::to_string(l) + " has " +
                           std::to_string(input.priors[l].size()) + " priors, model expects " +
                           std::to_string(cfg.prior_dims[l]));
    }
  }
}

}  // namespace

ForwardResult forward(Tape& tape, Model& model, const ModelInput& input) {
  check_input(model, input);
  const auto& cfg = model.config();
  Var tokens = encode(tape, input.slices, model.encoder());
  ForwardResult out;
  for (std::size_t l = 0; l < cfg.labels(); ++l) {
    LabelHead& h = model.head(l);
    Var z = pool(tape, tokens, input.masks[l], h.pool).embedding;
    Var fused = z;
    if (cfg.fusion == FusionMode::Gated) {
      Var g = gate(tape, input.priors[l], h.gate);
      fused = modulate(z, g);
      out.gates.push_back(g);
    } else if (cfg.fusion == FusionMode::Concat) {
      const std::size_t k = input.priors[l].size();
      Var s = tape.constant(Tensor({k, 1}, input.priors[l]));
      Var proj = add(reshape(matmul(tape.param(h.proj_w), s), {cfg.concat_width}), tape.param(h.proj_b));
      fused = concat(z, proj);
    }
    const std::size_t width = fused.value().size();
    Var logit = add(reshape(matmul(reshape(fused, {1, width}), tape.param(h.head_w)), {1}), tape.param(h.head_b));
    out.probs.push_back(sigmoid(logit));
  }
  return out;
}

std::vector<double> predict(Model& model, const ModelInput& input) {
  Tape tape;
  auto res = forward(tape, model, input);
  std::vector<double> p;
  for (const auto& v : res.probs) p.push_back(v.value()[0]);
  return p;
}

std::vector<std::vector<double>> gate_values(Model& model, std::span<const std::vector<double>> priors) {
  if (model.config().fusion != FusionMode::Gated) throw ConfigError("gate values need a gated model");
  if (priors.size() != model.config().labels()) throw DimensionError("gate_values: one prior vector per label");
  std::vector<std::vector<double>> out;
  for (std::size_t l = 0; l < priors.size(); ++l) {
    Tape tape;
    Var g = gate(tape, priors[l], model.head(l).gate);
    out.emplace_back(g.value().values().begin(), g.value().values().end());
  }
  return out;
}

double curriculum_weight(double epoch, const CurriculumSchedule& s) {
  if (epoch < 0.0) throw ArgumentError("curriculum_weight: negative epoch");
  if (epoch <= s.e_ignore) return 0.0;
  if (epoch >= s.e_ignore + s.e_ramp) return s.w_max;
  return s.w_max * (epoch - s.e_ignore) / s.e_ramp;
}

LossResult curriculum_loss(Tape& tape, std::span<const Var> probs, const LabelTargets& targets, double w) {
  if (probs.size() != targets.size()) throw DimensionError("loss: probability and target counts differ");
  double denom = 0.0;
  for (std::size_t l = 0; l < targets.size(); ++l) denom += targets.observed(l) ? 1.0 : w;
  if (denom == 0.0) return {tape.constant(Tensor::scalar(0.0)), true};

  Var total;
  for (std::size_t l = 0; l < probs.size(); ++l) {
    const double coef = targets.observed(l) ? 1.0 : w;
    if (coef == 0.0) continue;
    const bool positive = targets.observed(l) && *targets.values[l];
    Var p = clamp(probs[l], kProbClamp, 1.0 - kProbClamp);
    Var bce = positive ? scale(log(p), -1.0) : scale(log(add_scalar(scale(p, -1.0), 1.0)), -1.0);
    Var term = scale(bce, coef);
    total = total.valid() ? add(total, term) : term;
  }
  return {scale(total, 1.0 / denom), false};
}

double curriculum_loss(std::span<const double> probs, const LabelTargets& targets, double w) {
  if (probs.size() != targets.size()) throw DimensionError("loss: probability and target counts differ");
  double num = 0.0, denom = 0.0;
  for (std::size_t l = 0; l < probs.size(); ++l) {
    const double p = std::clamp(probs[l], kProbClamp, 1.0 - kProbClamp);
    if (targets.observed(l)) {
      num += *targets.values[l] ? -std::log(p) : -std::log(1.0 - p);
      denom += 1.0;
    } else {
      num += w * -std::log(1.0 - p);
      denom += w;
    }
  }
  return denom == 0.0 ? 0.0 : num / denom;
}

std::optional<double> macro_auroc(Model& model, std::span<const Example> set) {
  if (set.empty()) return std::nullopt;
  PredictionSet ps;
  ps.labels.resize(model.config().labels());
  for (const auto& ex : set) {
    ps.sample_ids.push_back(ex.input.sample_id);
    const auto p = predict(model, ex.input);
    for (std::size_t l = 0; l < p.size(); ++l) {
      ps.probs.push_back(p[l]);
      ps.targets.push_back(ex.targets.values[l]);
    }
  }
  return macro_metric(ps, Metric::Auroc);
}

TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set, const ModelConfig& config,
                  const TrainConfig& options, const std::function<void(const EpochLog&)>& on_epoch,
                  const ExampleSource& source) {
  if (train_set.empty()) throw ArgumentError("train: empty training set");
  if (options.epochs == 0 || options.batch_size == 0 || !(options.learning_rate > 0.0)) {
    throw ConfigError("train: epochs, batch size and learning rate must be positive");
  }
  if (config.fusion != options.fusion) throw ConfigError("train: model and train config disagree on fusion mode");

  TrainResult result{Model::init(config, derive_seed(options.seed, "init")), {}};
  Model& model = result.model;
  auto params = model.parameters();
  for (Parameter* p : params) p->velocity = Tensor(p->value.shape());

  const std::size_t n = train_set.size();
  const std::size_t steps_per_epoch = (n + options.batch_size - 1) / options.batch_size;
  const double total_steps = static_cast<double>(steps_per_epoch * options.epochs);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const double w = curriculum_weight(static_cast<double>(epoch), options.curriculum);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(derive_seed(options.seed, "order"), epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

    EpochLog log;
    log.epoch = epoch;
    log.w_curriculum = w;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t end = std::min(n, start + options.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      std::vector<std::pair<std::string, double>> batch_losses;
      for (std::size_t j = start; j < end; ++j) {
        Example fetched;
        const Example* ex = &train_set[order[j]];
        if (source) {
          fetched = source(order[j], epoch);
          ex = &fetched;
        }
        Tape tape;
        auto fwd = forward(tape, model, ex->input);
        auto lr = curriculum_loss(tape, fwd.probs, ex->targets, w);
        const double value = lr.loss.value()[0];
        batch_losses.emplace_back(ex->input.sample_id, value);
        if (!std::isfinite(value)) {
          std::ostringstream os;
          os << "non-finite loss at epoch " << epoch << ", step " << step << "; batch:";
          for (const auto& [id, v] : batch_losses) os << ' ' << id << '=' << v;
          throw NumericError(os.str());
        }
        if (lr.empty) {
          ++log.empty_samples;
          continue;
        }
        loss_sum += value;
        Var scaled = scale(lr.loss, inv_batch);
        tape.backward(scaled);
        tape.accumulate_parameter_grads();
      }

      double norm_sq = 0.0;
      for (Parameter* p : params)
        for (double g : p->grad.values()) norm_sq += g * g;
      if (!std::isfinite(norm_sq)) throw NumericError("non-finite gradient at epoch " + std::to_string(epoch));
      const double norm = std::sqrt(norm_sq);
      const double clip = (options.grad_clip > 0.0 && norm > options.grad_clip) ? options.grad_clip / norm : 1.0;
      const double lr_t =
          options.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
      for (Parameter* p : params) {
        auto v = p->velocity.values();
        auto g = p->grad.values();
        auto x = p->value.values();
        for (std::size_t i = 0; i < x.size(); ++i) {
          v[i] = options.momentum * v[i] + clip * g[i];
          x[i] -= lr_t * v[i];
        }
      }
      ++step;
    }
    log.loss = loss_sum / static_cast<double>(n);
    log.val_auroc = macro_auroc(model, val_set);
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace janus
