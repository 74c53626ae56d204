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

#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "janus/experiment.hpp"
#include "janus/io.hpp"

using namespace janus;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(const fs::path& root) {
  ExperimentConfig c;
  c.dataset_dir = (root / "dataset").string();
  c.output_dir = (root / "runs").string();
  c.phantom.grid = {8, 32, 32};
  c.phantom.spacing = {4.5, 3.0, 3.0};
  c.counts = {10, 6, 6, 6};
  c.preprocess.target_spacing = {4.5, 3.0, 3.0};
  c.preprocess.target_shape = {8, 32, 32};
  c.preprocess.input_size = {32, 32};
  c.preprocess.stride = 3;
  c.encoder = {8, 8, true, 2};
  c.train.epochs = 2;
  c.train.batch_size = 4;
  c.metrics.resamples = 20;
  return c;
}

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("janus_test_exp_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config round trips through json") {
  ExperimentConfig c = tiny("/tmp/x");
  c.seed = 42;
  c.train.curriculum.w_max = 0.25;
  c.arms = {{"g", FusionMode::Gated}, {"n", FusionMode::None}};
  c.phantom.organs[0].shape_jitter = 0.1;
  const ExperimentConfig back = parse_config(emit_config(c));
  CHECK(back == c);
  CHECK(emit_config(back) == emit_config(c));
  CHECK(parse_config(emit_config(default_experiment_config())) == default_experiment_config());
}

TEST_CASE("config parsing is strict") {
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 1, \"seed\": 1, \"sede\": 2}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 1, \"train\": {\"epochs\": \"many\"}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 99}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"seed\": 9}"), ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 1, \"arms\": [{\"id\": \"a\", \"fusion\": \"film\"}]}"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/janus.json"), ConfigError);
  const ExperimentConfig partial = parse_config("{\"schema_version\": 1, \"seed\": 9}");
  CHECK(partial.seed == 9);
  CHECK(partial.counts == SplitCounts{});
}

TEST_CASE("config validation") {
  ExperimentConfig c = tiny("/tmp/x");
  CHECK_NOTHROW(validate(c));
  c.counts.val = 0;
  CHECK_THROWS_AS(validate(c), SpecError);
  c = tiny("/tmp/x");
  c.arms.push_back(c.arms[0]);
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = tiny("/tmp/x");
  c.preprocess.input_size = {30, 32};
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = tiny("/tmp/x");
  CHECK_THROWS_AS(c.arm("film"), ConfigError);
}

TEST_CASE("seed derivation is labelled and stable") {
  ExperimentConfig a = tiny("/tmp/x"), b = a;
  CHECK(dataset_seed(a) != train_seed(a));
  CHECK(train_seed(a) != bootstrap_seed(a));
  CHECK(corruption_seed(a, 10) != corruption_seed(a, 20));
  b.seed = 2;
  CHECK(dataset_seed(a) != dataset_seed(b));
  CHECK(dataset_spec(a).seed == dataset_seed(a));
}

TEST_CASE("examples have the model input layout") {
  const ExperimentConfig c = tiny("/tmp/x");
  const Dataset d = generate_dataset(c);
  const auto norms = fit_normalizers(d);
  REQUIRE(norms.size() == 3);
  const Example ex = make_example(c, d.split(Split::Val)[0], norms);
  CHECK(ex.input.slices.shape() == Shape{3, 3, 32, 32});
  REQUIRE(ex.input.masks.size() == 3);
  CHECK(ex.input.masks[0].tokens() == 16);
  for (const auto& m : ex.input.masks) CHECK_FALSE(m.empty());
  CHECK(ex.input.priors[0].size() == 2);
  const auto mc = model_config(c, d, FusionMode::Concat);
  CHECK(mc.prior_dims == std::vector<std::size_t>{2, 2, 2});
  CHECK(mc.fusion == FusionMode::Concat);
}

TEST_CASE("dataset write and load round trip") {
  const fs::path root = fresh("roundtrip");
  const ExperimentConfig c = tiny(root);
  const Dataset d = generate_dataset(c);
  write_dataset(d, c.dataset_dir);
  const Dataset back = load_dataset(c.dataset_dir, {Split::Train, Split::TestExternal});
  CHECK(back.labels == d.labels);
  CHECK(back.families == d.families);
  for (Split s : {Split::Train, Split::TestExternal}) {
    REQUIRE(back.split(s).size() == d.split(s).size());
    for (std::size_t i = 0; i < d.split(s).size(); ++i) {
      const auto& a = d.split(s)[i];
      const auto& b = back.split(s)[i];
      CHECK(a.id == b.id);
      CHECK(a.volume.data == b.volume.data);
      CHECK(a.targets.values == b.targets.values);
      for (std::size_t l = 0; l < a.rois.size(); ++l) {
        CHECK(a.rois[l].mask == b.rois[l].mask);
        CHECK(a.priors[l].values == b.priors[l].values);
      }
    }
  }
  CHECK_THROWS_AS(back.split(Split::Val), DataError);
  CHECK_THROWS_AS(load_dataset(root / "nope", {Split::Train}), DataError);
  fs::remove_all(root);
}

TEST_CASE("end-to-end pipeline writes every artifact deterministically") {
  std::string first_manifest, first_metrics, first_log;
  for (int run = 0; run < 2; ++run) {
    const fs::path root = fresh("pipeline" + std::to_string(run));
    const ExperimentConfig c = tiny(root);
    std::ostringstream log;
    cmd_generate(c, log);
    for (const auto& arm : c.arms) cmd_train(c, arm.id, log);
    cmd_evaluate(c, Split::TestExternal, log);
    cmd_corruption_sweep(c, Split::TestExternal, log);
    cmd_gate_analysis(c, "gated", "spleen.radius_mm", log);

    const fs::path runs = c.output_dir;
    for (const auto& f : {runs / "gated" / "checkpoint.bin", runs / "concat" / "train_log.jsonl",
                          runs / "none" / "normalizers.json", runs / "eval" / "test-external" / "stratified.csv",
                          runs / "eval" / "test-external" / "veto.csv", runs / "eval" / "test-external" / "gated" / "metrics.csv",
                          runs / "corruption_sweep_test-external.csv", runs / "gate_analysis_spleen.radius_mm.csv"})
      CHECK_MESSAGE(fs::exists(f), f.string());

    const std::string manifest = io::read_text(fs::path(c.dataset_dir) / "manifest.json");
    const std::string metrics = io::read_text(runs / "eval" / "test-external" / "gated" / "metrics.csv");
    const std::string tlog = io::read_text(runs / "gated" / "train_log.jsonl");
    if (run == 0) {
      first_manifest = manifest;
      first_metrics = metrics;
      first_log = tlog;
    } else {
      CHECK(manifest == first_manifest);
      CHECK(metrics == first_metrics);
      CHECK(tlog == first_log);
    }

    // The none arm is flat under prior corruption.
    const std::string sweep = io::read_text(runs / "corruption_sweep_test-external.csv");
    std::istringstream in(sweep);
    std::string line, none_value;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.rfind("none,", 0) != 0) continue;
      const std::string v = line.substr(line.rfind(',') + 1);
      if (none_value.empty()) none_value = v;
      CHECK(v == none_value);
    }

    CHECK_THROWS_AS(cmd_gate_analysis(c, "none", "spleen.radius_mm", log), ConfigError);
    CHECK_THROWS_AS(cmd_gate_analysis(c, "gated", "spleen.weight", log), ConfigError);
    ExperimentConfig swapped = c;
    swapped.arms[0].fusion = FusionMode::None;
    CHECK_THROWS_AS(cmd_evaluate(swapped, Split::TestExternal, log), ConfigError);
    fs::remove_all(root);
  }
}

TEST_CASE("training without a dataset is a data error") {
  const fs::path root = fresh("nodata");
  const ExperimentConfig c = tiny(root);
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_train(c, "gated", log), DataError);
}
