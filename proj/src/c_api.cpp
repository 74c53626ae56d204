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

#include "janus/janus.h"

#include <cstring>
#include <new>
#include <ostream>
#include <streambuf>
#include <string>

#include "janus/error.hpp"
#include "janus/experiment.hpp"

struct janus_config {
  janus::ExperimentConfig config;
  janus_log_fn log = nullptr;
  void* log_user = nullptr;
};

namespace {

thread_local std::string g_last_error;

class LineBuf : public std::streambuf {
 public:
  LineBuf(janus_log_fn fn, void* user) : fn_(fn), user_(user) {}
  ~LineBuf() override { flush_line(); }

 protected:
  int_type overflow(int_type ch) override {
    if (ch == traits_type::eof()) return traits_type::not_eof(ch);
    if (ch == '\n') flush_line();
    else line_.push_back(static_cast<char>(ch));
    return ch;
  }

 private:
  void flush_line() {
    if (line_.empty()) return;
    if (fn_) fn_(line_.c_str(), user_);
    line_.clear();
  }

  janus_log_fn fn_;
  void* user_;
  std::string line_;
};

template <class F>
janus_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return JANUS_OK;
  } catch (const janus::ConfigError& e) {
    g_last_error = e.what();
    return JANUS_ERR_CONFIG;
  } catch (const janus::DataError& e) {
    g_last_error = e.what();
    return JANUS_ERR_DATA;
  } catch (const janus::NumericError& e) {
    g_last_error = e.what();
    return JANUS_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return JANUS_ERR_OTHER;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return JANUS_ERR_OTHER;
  } catch (...) {
    g_last_error = "unknown error";
    return JANUS_ERR_OTHER;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw janus::ArgumentError(std::string(what) + " must not be NULL");
}

template <class F>
janus_status with_log(const janus_config* c, F&& f) {
  return guarded([&] {
    require(c, "config");
    LineBuf buf(c->log, c->log_user);
    std::ostream os(&buf);
    f(c->config, os);
  });
}

}  // namespace

extern "C" {

const char* janus_version(void) { return "0.1.0"; }

const char* janus_last_error(void) { return g_last_error.c_str(); }

janus_status janus_config_default(janus_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new janus_config{janus::default_experiment_config()};
  });
}

janus_status janus_config_load(const char* path, janus_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new janus_config{janus::load_config(path)};
  });
}

janus_status janus_config_parse(const char* json_text, janus_config** out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    *out = new janus_config{janus::parse_config(json_text)};
  });
}

void janus_config_free(janus_config* config) { delete config; }

janus_status janus_config_emit(const janus_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    const std::string text = janus::emit_config(config->config);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void janus_string_free(char* s) { delete[] s; }

janus_status janus_config_set_seed(janus_config* config, uint64_t seed) {
  return guarded([&] {
    require(config, "config");
    config->config.seed = seed;
  });
}

janus_status janus_config_set_output_dir(janus_config* config, const char* dir) {
  return guarded([&] {
    require(config, "config");
    require(dir, "dir");
    config->config.output_dir = dir;
  });
}

janus_status janus_config_set_dataset_dir(janus_config* config, const char* dir) {
  return guarded([&] {
    require(config, "config");
    require(dir, "dir");
    config->config.dataset_dir = dir;
  });
}

janus_status janus_config_set_log(janus_config* config, janus_log_fn fn, void* user) {
  return guarded([&] {
    require(config, "config");
    config->log = fn;
    config->log_user = user;
  });
}

janus_status janus_generate(const janus_config* config) {
  return with_log(config, [](const janus::ExperimentConfig& c, std::ostream& os) { janus::cmd_generate(c, os); });
}

janus_status janus_train(const janus_config* config, const char* arm) {
  return with_log(config, [&](const janus::ExperimentConfig& c, std::ostream& os) {
    require(arm, "arm");
    janus::cmd_train(c, arm, os);
  });
}

janus_status janus_evaluate(const janus_config* config, const char* split) {
  return with_log(config, [&](const janus::ExperimentConfig& c, std::ostream& os) {
    require(split, "split");
    janus::cmd_evaluate(c, janus::split_from_string(split), os);
  });
}

janus_status janus_corruption_sweep(const janus_config* config, const char* split) {
  return with_log(config, [&](const janus::ExperimentConfig& c, std::ostream& os) {
    require(split, "split");
    janus::cmd_corruption_sweep(c, janus::split_from_string(split), os);
  });
}

janus_status janus_gate_analysis(const janus_config* config, const char* arm, const char* feature) {
  return with_log(config, [&](const janus::ExperimentConfig& c, std::ostream& os) {
    require(arm, "arm");
    require(feature, "feature");
    janus::cmd_gate_analysis(c, arm, feature, os);
  });
}

}  // extern "C"
