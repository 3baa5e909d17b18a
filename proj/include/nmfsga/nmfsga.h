#ifndef NMFSGA_H
#define NMFSGA_H

/* Noise-aware multi-objective feature selection: C interface.
 *
 * All functions that can fail return an nmfs_status; on failure a
 * thread-local message is available from nmfs_last_error(). Out-parameters
 * are written only on NMFS_OK. Handles are opaque and must be released with
 * their matching _free function; freeing NULL is a no-op.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NMFS_API __declspec(dllexport)
#else
#define NMFS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nmfs_status {
    NMFS_OK = 0,
    NMFS_ERR_INVALID_ARGUMENT = 1,
    NMFS_ERR_RUNTIME = 2,
    NMFS_ERR_PARTIAL = 3, /* a grid finished with some failed cells */
    NMFS_ERR_INTERNAL = 4
} nmfs_status;

NMFS_API const char* nmfs_version(void);

/* Message describing the most recent failure on this thread; empty string if
 * none. The pointer stays valid until the next failing call on the thread. */
NMFS_API const char* nmfs_last_error(void);

typedef struct nmfs_dataset nmfs_dataset;
typedef struct nmfs_ga_result nmfs_ga_result;
typedef struct nmfs_experiment nmfs_experiment;

/* ---- datasets -------------------------------------------------------- */

/* preset is "A" (500 features, 6 informative) or "B" (500 features, 7
 * informative). Labels start clean; inject noise separately. */
NMFS_API nmfs_status nmfs_dataset_synthetic(const char* preset, int n_per_class, uint64_t seed,
                                            nmfs_dataset** out);

NMFS_API nmfs_status nmfs_dataset_load_csv(const char* path, const char* label_column,
                                           const char* positive_label, nmfs_dataset** out);

/* Appends `count` standard-normal noise columns and randomly permutes all
 * column positions (recorded internally for recovery scoring). */
NMFS_API nmfs_status nmfs_dataset_augment_noise(nmfs_dataset* ds, int count, uint64_t seed);

/* Flips labels class-conditionally: clean 0 becomes 1 with rho_0_to_1 and
 * clean 1 becomes 0 with rho_1_to_0. Clean labels are preserved. */
NMFS_API nmfs_status nmfs_dataset_inject_noise(nmfs_dataset* ds, double rho_0_to_1,
                                               double rho_1_to_0, uint64_t seed);

NMFS_API nmfs_status nmfs_dataset_save_csv(const nmfs_dataset* ds, const char* path);

/* Return -1 on a NULL handle. */
NMFS_API int nmfs_dataset_rows(const nmfs_dataset* ds);
NMFS_API int nmfs_dataset_cols(const nmfs_dataset* ds);

NMFS_API void nmfs_dataset_free(nmfs_dataset* ds);

/* ---- genetic algorithm ------------------------------------------------ */

/* Runs the multi-niche NSGA-II feature search on the dataset's noisy labels.
 * loss_kind is one of BA, CE, SCE, GCE, JOL, PL, CWD. config_keys/values are
 * n_config parallel arrays of overrides using the experiment config names
 * ("ga.generations", "loss.q", ...); pass NULL/0 for defaults. */
NMFS_API nmfs_status nmfs_ga_run(const nmfs_dataset* ds, const char* loss_kind,
                                 const char* const* config_keys,
                                 const char* const* config_values, size_t n_config,
                                 uint64_t seed, int n_threads, nmfs_ga_result** out);

NMFS_API size_t nmfs_ga_front_size(const nmfs_ga_result* result);

/* Copies front member `index` into mask_buffer (mask_length must equal the
 * dataset column count). loss / n_selected may be NULL. */
NMFS_API nmfs_status nmfs_ga_front_get(const nmfs_ga_result* result, size_t index,
                                       uint8_t* mask_buffer, size_t mask_length, double* loss,
                                       int* n_selected);

/* The front member with minimal loss (ties: fewer features, then
 * lexicographically smallest mask). */
NMFS_API nmfs_status nmfs_ga_select_final(const nmfs_ga_result* result, uint8_t* mask_buffer,
                                          size_t mask_length, double* loss, int* n_selected);

NMFS_API void nmfs_ga_result_free(nmfs_ga_result* result);

/* ---- experiment grids -------------------------------------------------- */

NMFS_API nmfs_status nmfs_experiment_load(const char* config_path, nmfs_experiment** out);

/* Applies one `key = value` assignment (same names as the config file).
 * Unknown keys fail with NMFS_ERR_INVALID_ARGUMENT. */
NMFS_API nmfs_status nmfs_experiment_set(nmfs_experiment* config, const char* key,
                                         const char* value);

/* Desk-scale preset: generations=200, population=60, niches=2, mc=1e6. */
NMFS_API nmfs_status nmfs_experiment_fast_preset(nmfs_experiment* config);

/* Reads one resolved config value by its config-file key. The returned
 * string must be released with nmfs_string_free. */
NMFS_API nmfs_status nmfs_experiment_get(const nmfs_experiment* config, const char* key,
                                         char** value);

NMFS_API void nmfs_experiment_free(nmfs_experiment* config);

/* Writes the task's dataset CSV plus provenance sidecar into out_dir. */
NMFS_API nmfs_status nmfs_cmd_generate(const nmfs_experiment* config);

/* Runs the full grid with at most `workers` concurrent cells. Returns
 * NMFS_ERR_PARTIAL when some cells failed but artifacts were written. */
NMFS_API nmfs_status nmfs_cmd_run(const nmfs_experiment* config, int workers);

/* Renders the result directory as a table, written to report.txt/report.csv
 * inside it. On NMFS_OK or NMFS_ERR_PARTIAL (failed cells present),
 * *rendered_table receives the text table; release it with
 * nmfs_string_free. */
NMFS_API nmfs_status nmfs_cmd_report(const char* result_dir, char** rendered_table);

NMFS_API void nmfs_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* NMFSGA_H */
