#ifndef IOT_MEDIAN_H
#define IOT_MEDIAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IotmStatus {
  IOTM_STATUS_OK = 0,
  IOTM_STATUS_NULL_POINTER = 1,
  IOTM_STATUS_INVALID_CONFIG = 2,
  IOTM_STATUS_INVALID_INPUT = 3,
  /**
   * Selection on an empty tree.
   */
  IOTM_STATUS_EMPTY_QUERY = 4,
  /**
   * Removing a value that is not stored.
   */
  IOTM_STATUS_LOGIC = 5,
  IOTM_STATUS_FORMAT = 6,
  IOTM_STATUS_IO = 7,
  IOTM_STATUS_PANIC = 8,
} IotmStatus;

typedef enum IotmMode {
  IOTM_MODE_UNIFORM = 0,
  /**
   * Adaptive tree built from the image's own statistics.
   */
  IOTM_MODE_ADAPTIVE = 1,
  /**
   * Uniform tree, every window node updated at every step.
   */
  IOTM_MODE_UNCONDITIONAL = 2,
} IotmMode;

/**
 * Gray image with 8- or 16-bit samples.
 */
typedef struct IotmImage IotmImage;

/**
 * Shared tree shape.
 */
typedef struct IotmTopology IotmTopology;

/**
 * One occurrence tree.
 */
typedef struct IotmTree IotmTree;

typedef struct IotmFilterConfig {
  /**
   * Odd window side.
   */
  uint32_t window;
  /**
   * 1-based rank; 0 selects the median.
   */
  uint32_t rank;
  /**
   * Largest tolerated error in gray values; 1 is exact.
   */
  uint32_t max_error;
  /**
   * An `IotmMode` value.
   */
  uint32_t mode;
  /**
   * Horizontal bands filtered in parallel; 0 is treated as 1.
   */
  uint32_t bands;
} IotmFilterConfig;

/**
 * Operation totals of one filter run, split by phase.
 */
typedef struct IotmCounters {
  uint64_t column_additions;
  uint64_t column_comparisons;
  uint64_t window_additions;
  uint64_t window_comparisons;
  uint64_t extraction_additions;
  uint64_t extraction_comparisons;
  uint64_t pixels;
  uint64_t elementary_syncs;
  uint64_t replay_syncs;
  uint64_t rebuild_syncs;
} IotmCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty string.
 * Valid until the next call into this library from the same thread.
 */
const char *iotm_last_error(void);

/**
 * Static name of an `IotmStatus` value.
 */
const char *iotm_status_name(int32_t status);

/**
 * Bisection tree for `bit_depth`-bit values (1..=16).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum IotmStatus iotm_topology_uniform(uint8_t bit_depth, struct IotmTopology **out);

/**
 * Tree balanced for the access frequencies in `weights` (`2^bit_depth`
 * non-negative entries).
 *
 * # Safety
 * `weights` must point to `len` readable doubles; `out` as above.
 */
enum IotmStatus iotm_topology_adaptive(const double *weights,
                                       size_t len,
                                       uint8_t bit_depth,
                                       struct IotmTopology **out);

/**
 * Number of counters a tree of this shape stores; 0 for a null handle.
 *
 * # Safety
 * `topology` must be null or a live handle.
 */
size_t iotm_topology_counter_count(const struct IotmTopology *topology);

/**
 * # Safety
 * `topology` must be null or a handle not yet freed.
 */
void iotm_topology_free(struct IotmTopology *topology);

/**
 * Empty tree sharing `topology`; the topology handle may be freed afterwards.
 *
 * # Safety
 * `topology` must be a live handle; `out` writable.
 */
enum IotmStatus iotm_tree_new(const struct IotmTopology *topology, struct IotmTree **out);

/**
 * # Safety
 * `tree` must be null or a handle not yet freed.
 */
void iotm_tree_free(struct IotmTree *tree);

/**
 * # Safety
 * `tree` must be a live handle.
 */
enum IotmStatus iotm_tree_add(struct IotmTree *tree, uint32_t value);

/**
 * Removes one occurrence of `value`; fails with `Logic` if none is stored.
 *
 * # Safety
 * `tree` must be a live handle.
 */
enum IotmStatus iotm_tree_remove(struct IotmTree *tree, uint32_t value);

/**
 * Number of stored values; 0 for a null handle.
 *
 * # Safety
 * `tree` must be null or a live handle.
 */
uint32_t iotm_tree_total(const struct IotmTree *tree);

/**
 * The `rank`-th smallest stored value (1-based) to within `max_error`.
 * `error_bound` receives the width of the reported interval and may be null.
 *
 * # Safety
 * `tree` must be a live handle; `value` writable; `error_bound` null or writable.
 */
enum IotmStatus iotm_tree_select(const struct IotmTree *tree,
                                 uint32_t rank,
                                 uint32_t max_error,
                                 uint32_t *value,
                                 uint32_t *error_bound);

/**
 * Image copied from `width * height` row-major samples.
 *
 * # Safety
 * `data` must point to `width * height` readable samples; `out` writable.
 */
enum IotmStatus iotm_image_from_data(size_t width,
                                     size_t height,
                                     uint8_t bit_depth,
                                     const uint16_t *data,
                                     struct IotmImage **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` writable.
 */
enum IotmStatus iotm_image_read_pgm(const char *path, struct IotmImage **out);

/**
 * # Safety
 * `image` must be a live handle; `path` a NUL-terminated string.
 */
enum IotmStatus iotm_image_write_pgm(const struct IotmImage *image, const char *path);

/**
 * # Safety
 * `image` must be null or a live handle.
 */
size_t iotm_image_width(const struct IotmImage *image);

/**
 * # Safety
 * `image` must be null or a live handle.
 */
size_t iotm_image_height(const struct IotmImage *image);

/**
 * # Safety
 * `image` must be null or a live handle.
 */
uint8_t iotm_image_bit_depth(const struct IotmImage *image);

/**
 * Row-major samples, valid while the handle lives; null for a null handle.
 *
 * # Safety
 * `image` must be null or a live handle.
 */
const uint16_t *iotm_image_data(const struct IotmImage *image);

/**
 * # Safety
 * `image` must be null or a handle not yet freed.
 */
void iotm_image_free(struct IotmImage *image);

/**
 * Filters `image` into a new image. `counters` may be null.
 *
 * # Safety
 * `image` and `config` must be valid; `out` writable; `counters` null or writable.
 */
enum IotmStatus iotm_filter(const struct IotmImage *image,
                            const struct IotmFilterConfig *config,
                            struct IotmImage **out,
                            struct IotmCounters *counters);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IOT_MEDIAN_H */
