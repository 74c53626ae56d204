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

#ifndef JANUS_JANUS_H_
#define JANUS_JANUS_H_

#include <stdint.h>

#if defined(JANUS_BUILDING_LIBRARY)
#define JANUS_API __attribute__((visibility("default")))
#else
#define JANUS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; the command-line tool uses them as exit codes. */
typedef enum janus_status {
  JANUS_OK = 0,
  JANUS_ERR_OTHER = 1,
  JANUS_ERR_CONFIG = 2,
  JANUS_ERR_DATA = 3,
  JANUS_ERR_NUMERIC = 4
} janus_status;

typedef struct janus_config janus_config;

/* Receives one line of progress output (without the trailing newline). */
typedef void (*janus_log_fn)(const char* line, void* user);

JANUS_API const char* janus_version(void);

/* Message of the last failing call on this thread; "" when none. */
JANUS_API const char* janus_last_error(void);

JANUS_API janus_status janus_config_default(janus_config** out);
JANUS_API janus_status janus_config_load(const char* path, janus_config** out);
JANUS_API janus_status janus_config_parse(const char* json_text, janus_config** out);
JANUS_API void janus_config_free(janus_config* config);

/* Serialized config; release with janus_string_free. */
JANUS_API janus_status janus_config_emit(const janus_config* config, char** out);
JANUS_API void janus_string_free(char* s);

JANUS_API janus_status janus_config_set_seed(janus_config* config, uint64_t seed);
JANUS_API janus_status janus_config_set_output_dir(janus_config* config, const char* dir);
JANUS_API janus_status janus_config_set_dataset_dir(janus_config* config, const char* dir);
JANUS_API janus_status janus_config_set_log(janus_config* config, janus_log_fn fn, void* user);

JANUS_API janus_status janus_generate(const janus_config* config);
JANUS_API janus_status janus_train(const janus_config* config, const char* arm);
JANUS_API janus_status janus_evaluate(const janus_config* config, const char* split);
JANUS_API janus_status janus_corruption_sweep(const janus_config* config, const char* split);
JANUS_API janus_status janus_gate_analysis(const janus_config* config, const char* arm, const char* feature);

#ifdef __cplusplus
}
#endif

#endif /* JANUS_JANUS_H_ */
