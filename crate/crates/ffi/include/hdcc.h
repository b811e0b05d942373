#ifndef HDCC_H
#define HDCC_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum HdccStatus {
  HDCC_STATUS_OK = 0,
  HDCC_STATUS_NULL_ARGUMENT = 1,
  HDCC_STATUS_INVALID_UTF8 = 2,
  /**
   * Lex, parse, semantic or type diagnostics.
   */
  HDCC_STATUS_DIAGNOSTIC = 3,
  HDCC_STATUS_IO = 4,
  /**
   * Malformed data, bad labels or sample shape.
   */
  HDCC_STATUS_DATA = 5,
  HDCC_STATUS_BACKEND = 6,
  /**
   * Call not valid in the model's current state.
   */
  HDCC_STATUS_STATE = 7,
  HDCC_STATUS_PANIC = 8,
} HdccStatus;

/**
 * A trainable associative-memory classifier for one program.
 */
typedef struct HdccModel HdccModel;

/**
 * A validated, type-checked description.
 */
typedef struct HdccProgram HdccProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next library call on the same thread.
 */
const char *hdcc_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *hdcc_version(void);

void hdcc_string_free(char *s);

/**
 * Parses and checks a description held in memory.
 */
enum HdccStatus hdcc_program_from_source(const char *source, struct HdccProgram **out);

enum HdccStatus hdcc_program_from_file(const char *path, struct HdccProgram **out);

void hdcc_program_free(struct HdccProgram *program);

/**
 * Replaces the seed used for basis tables.
 */
enum HdccStatus hdcc_program_set_seed(struct HdccProgram *program, uint64_t seed);

size_t hdcc_program_input_dim(const struct HdccProgram *program);

size_t hdcc_program_classes(const struct HdccProgram *program);

size_t hdcc_program_dimensions(const struct HdccProgram *program);

/**
 * True when samples are real values; false when they are integer indices.
 */
bool hdcc_program_real_input(const struct HdccProgram *program);

/**
 * Textual IR, fused unless `unfused`. Free with `hdcc_string_free`.
 */
enum HdccStatus hdcc_program_ir_dump(const struct HdccProgram *program, bool unfused, char **out);

/**
 * Writes the C sources and Makefile into `dir`.
 */
enum HdccStatus hdcc_program_emit(const struct HdccProgram *program,
                                  const char *dir,
                                  double range_min,
                                  double range_max);

/**
 * Trains and tests from the four data files; either output may be NULL.
 */
enum HdccStatus hdcc_run_files(const struct HdccProgram *program,
                               const char *train_data,
                               const char *train_labels,
                               const char *test_data,
                               const char *test_labels,
                               double *accuracy,
                               uint64_t *digest);

enum HdccStatus hdcc_model_new(const struct HdccProgram *program,
                               double range_min,
                               double range_max,
                               struct HdccModel **out);

void hdcc_model_free(struct HdccModel *model);

/**
 * Adds one real-valued sample of `n` features to class `label`.
 */
enum HdccStatus hdcc_model_train(struct HdccModel *model,
                                 const double *features,
                                 size_t n,
                                 size_t label);

/**
 * Adds one index sample (`-1` = absent) to class `label`.
 */
enum HdccStatus hdcc_model_train_indices(struct HdccModel *model,
                                         const int64_t *indices,
                                         size_t n,
                                         size_t label);

/**
 * Normalizes the class prototypes. Training afterwards is an error.
 */
enum HdccStatus hdcc_model_finalize(struct HdccModel *model);

enum HdccStatus hdcc_model_predict(const struct HdccModel *model,
                                   const double *features,
                                   size_t n,
                                   size_t *class_out);

enum HdccStatus hdcc_model_predict_indices(const struct HdccModel *model,
                                           const int64_t *indices,
                                           size_t n,
                                           size_t *class_out);

/**
 * Digest of the class counts; matches the emitted program's report.
 */
enum HdccStatus hdcc_model_digest(const struct HdccModel *model, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HDCC_H */
