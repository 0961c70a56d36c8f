#ifndef CARTOGRAPHY_H
#define CARTOGRAPHY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  CG_STATUS_OK = 0,
  CG_STATUS_NULL_POINTER = 1,
  CG_STATUS_INVALID_UTF8 = 2,
  CG_STATUS_IO = 3,
  CG_STATUS_PARSE = 4,
  CG_STATUS_VALIDATION = 5,
  CG_STATUS_SELECTION = 6,
  CG_STATUS_TRAINING = 7,
  CG_STATUS_OUT_OF_RANGE = 8,
  CG_STATUS_INTERNAL = 9,
} CgStatus;

/**
 * A parsed train/dev/test split.
 */
typedef struct CgDataset CgDataset;

/**
 * Per-sample training dynamics, sorted by guid.
 */
typedef struct CgDynamics CgDynamics;

/**
 * The guids picked by a subset recipe, in claim order.
 */
typedef struct CgSelection CgSelection;

/**
 * Per-sample values copied out of a [`CgDynamics`] row.
 */
typedef struct {
  double confidence;
  double variability;
  double correctness;
  size_t epochs;
} CgDynamicsRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *cg_last_error(void);

/**
 * Library version as a static string.
 */
const char *cg_version(void);

void cg_string_free(char *s);

/**
 * Reads a train split in SNLI/GLUE layout. With `row_index_guids` set,
 * guids are the data-row index instead of the `pairID` column.
 */
CgStatus cg_dataset_read_tsv(const char *tsv_path, bool row_index_guids, CgDataset **out);

CgStatus cg_dataset_len(const CgDataset *ds, size_t *out_len, size_t *out_skipped);

void cg_dataset_free(CgDataset *ds);

/**
 * Ingests an epoch log (one JSON record per line) and computes dynamics.
 */
CgStatus cg_dynamics_from_log(const char *log_path, CgDynamics **out);

/**
 * Trains the reference classifier on `ds` and computes dynamics from its
 * per-epoch records. Other trainer settings keep their defaults.
 */
CgStatus cg_dynamics_train(const CgDataset *ds,
                           size_t epochs,
                           uint64_t seed,
                           size_t hash_dim,
                           CgDynamics **out);

CgStatus cg_dynamics_load(const char *tsv_path, CgDynamics **out);

CgStatus cg_dynamics_save(const CgDynamics *d, const char *tsv_path);

size_t cg_dynamics_len(const CgDynamics *d);

/**
 * Copies row `index` into `out_row`. Rows are sorted by guid.
 */
CgStatus cg_dynamics_get(const CgDynamics *d, size_t index, CgDynamicsRow *out_row);

/**
 * Copies the guid of row `index` into `buf` as a NUL-terminated string.
 */
CgStatus cg_dynamics_guid(const CgDynamics *d, size_t index, char *buf, size_t buf_len);

void cg_dynamics_free(CgDynamics *d);

/**
 * Renders the data map as an SVG document (default style, given size).
 */
CgStatus cg_render_map(const CgDynamics *d, uint32_t width, uint32_t height, char **out_svg);

/**
 * Selects a subset by recipe name (`easy-33`, `hard+ambiguous`, ...).
 */
CgStatus cg_select_recipe(const CgDynamics *d,
                          const char *recipe_name,
                          uint64_t seed,
                          CgSelection **out);

size_t cg_selection_len(const CgSelection *s);

/**
 * Guid at `index` in claim order, borrowed from the handle; null when out
 * of range.
 */
const char *cg_selection_guid(const CgSelection *s, size_t index);

/**
 * Writes the selected samples of `ds` as a train TSV and the provenance
 * manifest next to it.
 */
CgStatus cg_selection_write(const CgSelection *s,
                            const CgDataset *ds,
                            const char *tsv_path,
                            const char *manifest_path);

void cg_selection_free(CgSelection *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARTOGRAPHY_H */
