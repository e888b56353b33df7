/*
 * Copyright 2026 The cellscope Authors
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

/*
 * C interface to cellscope.
 *
 * Every function returns a cs_status. On failure, cs_last_error() returns a
 * message for the calling thread that stays valid until that thread's next
 * call. Output handles are written only on success. Strings returned through
 * char** outputs are owned by the caller and released with cs_string_free.
 * Passing NULL to any *_free function is a no-op.
 */

#ifndef CELLSCOPE_CELLSCOPE_H_
#define CELLSCOPE_CELLSCOPE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CS_API __declspec(dllexport)
#else
#define CS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cs_status {
  CS_OK = 0,
  CS_ERR_INVALID_ARGUMENT = 1,
  CS_ERR_DIMENSION = 2,
  CS_ERR_PARSE = 3,
  CS_ERR_IO = 4,
  CS_ERR_FORMAT = 5,
  CS_ERR_INTERNAL = 6
} cs_status;

typedef enum cs_method { CS_METHOD_BETA = 0, CS_METHOD_GAMMA = 1, CS_METHOD_GRADIENT = 2 } cs_method;

typedef enum cs_format { CS_FORMAT_TSV = 0, CS_FORMAT_HTML = 1, CS_FORMAT_ANSI = 2 } cs_format;

typedef struct cs_corpus cs_corpus;
typedef struct cs_model cs_model;
typedef struct cs_patterns cs_patterns;
typedef struct cs_qa_corpus cs_qa_corpus;
typedef struct cs_qa_model cs_qa_model;
typedef struct cs_qa_patterns cs_qa_patterns;

CS_API const char* cs_last_error(void);
CS_API const char* cs_version(void);
CS_API void cs_string_free(char* s);

/* Parses "beta", "gamma" or "gradient". */
CS_API cs_status cs_method_parse(const char* name, cs_method* out);

/* ---- sentiment corpora ---- */

/* Planted-phrase corpus; *planted_tsv receives the class<TAB>phrase sidecar. */
CS_API cs_status cs_synth_sentiment(uint64_t seed, size_t n_docs, size_t n_phrases,
                                    cs_corpus** out, char** planted_tsv);
/* Builds a vocabulary from the file unless vocab_from is given, in which case
 * its vocabulary is reused and unknown words map to <unk>. */
CS_API cs_status cs_corpus_load(const char* path, const cs_corpus* vocab_from, cs_corpus** out);
CS_API cs_status cs_corpus_load_for_model(const char* path, const cs_model* model,
                                          cs_corpus** out);
CS_API cs_status cs_corpus_save(const cs_corpus* corpus, const char* path);
CS_API cs_status cs_corpus_size(const cs_corpus* corpus, size_t* n_docs);
/* Splits into the first `first` documents and the rest. */
CS_API cs_status cs_corpus_split(const cs_corpus* corpus, size_t first, cs_corpus** head,
                                 cs_corpus** tail);
CS_API void cs_corpus_free(cs_corpus* corpus);

/* ---- classifier ---- */

typedef struct cs_train_config {
  size_t embed;
  size_t hidden;
  uint64_t seed;
  size_t max_epochs;
  size_t patience;
  double lr;
  double clip_norm;
} cs_train_config;

CS_API void cs_train_config_default(cs_train_config* config);
CS_API cs_status cs_train(const cs_corpus* train, const cs_corpus* dev,
                          const cs_train_config* config, cs_model** out);
CS_API cs_status cs_model_load(const char* path, cs_model** out);
CS_API cs_status cs_model_save(const cs_model* model, const char* path);
CS_API cs_status cs_model_info(const cs_model* model, size_t* epochs, double* dev_accuracy);
CS_API void cs_model_free(cs_model* model);
/* Reads a model file's kind line; *kind receives "classifier" or "qa". */
CS_API cs_status cs_model_kind(const char* path, char** kind);

CS_API cs_status cs_accuracy(const cs_model* model, const cs_corpus* corpus, double* out);
/* Predicted class for one document of the corpus. */
CS_API cs_status cs_predict(const cs_model* model, const cs_corpus* corpus, size_t doc_index,
                            int* label);
/* Word importances for one document, or for all when doc_index is SIZE_MAX. */
CS_API cs_status cs_importance_render(const cs_model* model, const cs_corpus* corpus,
                                      size_t doc_index, cs_method method, cs_format format,
                                      char** out);

/* ---- patterns and rules ---- */

typedef struct cs_extract_config {
  double threshold;
  size_t max_len;
  size_t min_support;
} cs_extract_config;

CS_API void cs_extract_config_default(cs_extract_config* config);
CS_API cs_status cs_extract(const cs_model* model, const cs_corpus* corpus, cs_method method,
                            const cs_extract_config* config, cs_patterns** out);
CS_API cs_status cs_patterns_load(const char* path, const cs_model* model, cs_patterns** out);
CS_API cs_status cs_patterns_save(const cs_patterns* patterns, const cs_model* model,
                                  const char* path);
CS_API cs_status cs_patterns_format(const cs_patterns* patterns, const cs_model* model,
                                    char** out);
CS_API cs_status cs_patterns_count(const cs_patterns* patterns, size_t* n);
CS_API void cs_patterns_free(cs_patterns* patterns);

typedef struct cs_rules_result {
  double accuracy;
  double coverage;
  double matched_accuracy;
  double agreement; /* with the model's predictions; NaN when no model was given */
} cs_rules_result;

/* Falls back to the mining corpus majority class on no match. model is
 * optional and enables the agreement figure; report may be NULL. */
CS_API cs_status cs_rules_evaluate(const cs_patterns* patterns, const cs_corpus* corpus,
                                   const cs_model* model, cs_rules_result* result,
                                   char** report);

/* ---- question answering ---- */

CS_API cs_status cs_synth_qa(uint64_t seed, size_t n_movies, cs_qa_corpus** out);
CS_API cs_status cs_qa_corpus_load(const char* path, const cs_qa_corpus* vocab_from,
                                   cs_qa_corpus** out);
CS_API cs_status cs_qa_corpus_load_for_model(const char* path, const cs_qa_model* model,
                                             cs_qa_corpus** out);
CS_API cs_status cs_qa_corpus_save(const cs_qa_corpus* corpus, const char* path);
CS_API cs_status cs_qa_corpus_size(const cs_qa_corpus* corpus, size_t* n_examples);
CS_API cs_status cs_qa_corpus_split(const cs_qa_corpus* corpus, size_t first,
                                    cs_qa_corpus** head, cs_qa_corpus** tail);
CS_API void cs_qa_corpus_free(cs_qa_corpus* corpus);

typedef struct cs_qa_train_config {
  size_t embed;
  size_t hidden;
  size_t question_hidden;
  uint64_t seed;
  size_t max_epochs;
  size_t patience;
  double lr;
  double clip_norm;
  size_t max_negatives;
} cs_qa_train_config;

CS_API void cs_qa_train_config_default(cs_qa_train_config* config);
CS_API cs_status cs_qa_train(const cs_qa_corpus* train, const cs_qa_corpus* dev,
                             const cs_qa_train_config* config, cs_qa_model** out);
CS_API cs_status cs_qa_model_load(const char* path, cs_qa_model** out);
CS_API cs_status cs_qa_model_save(const cs_qa_model* model, const char* path);
CS_API cs_status cs_qa_model_info(const cs_qa_model* model, size_t* epochs, double* dev_hits);
CS_API void cs_qa_model_free(cs_qa_model* model);

CS_API cs_status cs_qa_hits(const cs_qa_model* model, const cs_qa_corpus* corpus, double* out);
CS_API cs_status cs_qa_answer(const cs_qa_model* model, const cs_qa_corpus* corpus,
                              size_t index, int64_t* entity, double* probability);
/* Importance at the model's chosen answer position, rendered with the question. */
CS_API cs_status cs_qa_importance_render(const cs_qa_model* model, const cs_qa_corpus* corpus,
                                         size_t index, cs_method method, cs_format format,
                                         char** out);

CS_API cs_status cs_qa_extract(const cs_qa_model* model, const cs_qa_corpus* corpus,
                               cs_method method, const cs_extract_config* config,
                               cs_qa_patterns** out);
CS_API cs_status cs_qa_patterns_load(const char* path, const cs_qa_model* model,
                                     cs_qa_patterns** out);
CS_API cs_status cs_qa_patterns_save(const cs_qa_patterns* patterns, const cs_qa_model* model,
                                     const char* path);
CS_API cs_status cs_qa_patterns_format(const cs_qa_patterns* patterns, const cs_qa_model* model,
                                       char** out);
CS_API void cs_qa_patterns_free(cs_qa_patterns* patterns);

CS_API cs_status cs_qa_rules_evaluate(const cs_qa_patterns* patterns, const cs_qa_corpus* corpus,
                                      double* hits, double* coverage);
/* Per-question TSV: index, question, gold, model answer, rules answer ("-" if
 * none). patterns may be NULL. */
CS_API cs_status cs_qa_answer_report(const cs_qa_model* model, const cs_qa_patterns* patterns,
                                     const cs_qa_corpus* corpus, char** out);

/* ---- self-check ---- */

/* Runs the identity suite; *passed is 1 when every check holds. */
CS_API cs_status cs_verify(uint64_t seed, int* passed, char** report);

#ifdef __cplusplus
}
#endif

#endif /* CELLSCOPE_CELLSCOPE_H_ */
