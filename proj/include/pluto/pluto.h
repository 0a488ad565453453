/* C interface to the pluto logistic regression tree library.
 *
 * Every function returns a pluto_status. On failure, pluto_last_error()
 * describes the most recent error on the calling thread. Strings returned
 * through char** out-parameters are owned by the caller and released with
 * pluto_string_free().
 */
#ifndef PLUTO_PLUTO_H
#define PLUTO_PLUTO_H

#include <stddef.h>
#include <stdint.h>

#if defined(PLUTO_BUILDING_LIBRARY)
#define PLUTO_API __attribute__((visibility("default")))
#else
#define PLUTO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pluto_status {
  PLUTO_OK = 0,
  PLUTO_ERR_CONFIG = 2,
  PLUTO_ERR_DATA = 3,
  PLUTO_ERR_CONVERGENCE = 4,
  PLUTO_ERR_IO = 5,
  PLUTO_ERR_ARGUMENT = 6,
  PLUTO_ERR_INTERNAL = 7
} pluto_status;

typedef struct pluto_dataset pluto_dataset;
typedef struct pluto_tree pluto_tree;

/* Receives one JSON document per split node while a tree grows. */
typedef void (*pluto_trace_fn)(const char* json_line, void* user);

PLUTO_API const char* pluto_version(void);
PLUTO_API const char* pluto_last_error(void);
PLUTO_API void pluto_string_free(char* s);
PLUTO_API void pluto_buffer_free(void* p);

/* Caps worker threads for all library calls; 0 uses every core. */
PLUTO_API pluto_status pluto_set_threads(int n);

/* Loads a CSV file under a JSON schema (text, not a path). With
 * require_response == 0 the response column may be absent. */
PLUTO_API pluto_status pluto_dataset_load(const char* csv_path, const char* schema_json, int require_response,
                                          pluto_dataset** out);
/* Same, using the schema stored in a trained tree. */
PLUTO_API pluto_status pluto_dataset_load_for_tree(const char* csv_path, const pluto_tree* tree,
                                                   int require_response, pluto_dataset** out);
PLUTO_API void pluto_dataset_free(pluto_dataset* data);
PLUTO_API size_t pluto_dataset_rows(const pluto_dataset* data);
/* 1 when the dataset carries a response column. */
PLUTO_API int pluto_dataset_has_response(const pluto_dataset* data);
/* Copies the 0/1 response into out[0..n). n must equal the row count. */
PLUTO_API pluto_status pluto_dataset_response(const pluto_dataset* data, uint8_t* out, size_t n);

/* Reads one column of a CSV file as numbers. */
PLUTO_API pluto_status pluto_csv_column(const char* csv_path, const char* column, double** values, size_t* n);
/* Reads one column of a CSV file as a 0/1 response. When positive_label is
 * non-NULL, cells equal to it map to 1 and all others to 0. */
PLUTO_API pluto_status pluto_csv_binary_column(const char* csv_path, const char* column, const char* positive_label,
                                               uint8_t** values, size_t* n);

/* Checks a JSON run config and returns it with every default filled in. */
PLUTO_API pluto_status pluto_config_validate(const char* config_json, char** normalized_json);

/* Trains under a JSON run config. The config must carry a seed. report_json
 * receives the training report and may be NULL. */
PLUTO_API pluto_status pluto_train(const pluto_dataset* data, const char* config_json, pluto_trace_fn trace,
                                   void* trace_user, pluto_tree** out, char** report_json);
PLUTO_API void pluto_tree_free(pluto_tree* tree);
PLUTO_API pluto_status pluto_tree_save(const pluto_tree* tree, const char* path);
PLUTO_API pluto_status pluto_tree_load(const char* path, pluto_tree** out);
PLUTO_API pluto_status pluto_tree_to_json(const pluto_tree* tree, char** out);
PLUTO_API pluto_status pluto_tree_to_dot(const pluto_tree* tree, char** out);
PLUTO_API size_t pluto_tree_leaves(const pluto_tree* tree);
/* Writes one probability per row into out[0..n). n must equal the row count. */
PLUTO_API pluto_status pluto_tree_predict(const pluto_tree* tree, const pluto_dataset* data, double* out, size_t n);

/* Scores predictions against 0/1 labels; returns a JSON report. */
PLUTO_API pluto_status pluto_score(const uint8_t* y, const double* p, size_t n, double trim_frac, char** report_json);

/* options_json keys: reps, with_replacement, trim_frac, seed. table_text
 * may be NULL. */
PLUTO_API pluto_status pluto_importance(const pluto_tree* tree, const pluto_dataset* test, const char* options_json,
                                        char** report_json, char** table_text);

/* options_json keys: model, option, iterations, n, m_groups, bias_correct,
 * calib_reps, calib_grid, alpha, cv_folds, n_lambda, seed. table_csv may be
 * NULL. */
PLUTO_API pluto_status pluto_simulate(const char* options_json, char** table_json, char** table_csv);

/* Lowercase hex SHA-256 of a file. */
PLUTO_API pluto_status pluto_file_sha256(const char* path, char** hex);

#ifdef __cplusplus
}
#endif

#endif /* PLUTO_PLUTO_H */
