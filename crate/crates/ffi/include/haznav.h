#ifndef HAZNAV_H
#define HAZNAV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HaznavStatus {
  HAZNAV_STATUS_OK = 0,
  HAZNAV_STATUS_NULL_POINTER = 1,
  HAZNAV_STATUS_INVALID_ARGUMENT = 2,
  HAZNAV_STATUS_PARSE = 3,
  HAZNAV_STATUS_IO = 4,
  HAZNAV_STATUS_RUNTIME = 5,
  HAZNAV_STATUS_PANIC = 6,
} HaznavStatus;

/**
 * Experiment configuration.
 */
typedef struct HaznavConfig HaznavConfig;

/**
 * Trained steering controller.
 */
typedef struct HaznavController HaznavController;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *haznav_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void haznav_string_free(char *s);

/**
 * Radar-procedure threat for a hazard `l_x_cm` ahead and `l_y_cm` to the
 * side, with the default gates.
 *
 * # Safety
 * `out` must point to writable memory for one double.
 */
enum HaznavStatus haznav_threat_radar(double l_x_cm, double l_y_cm, double *out);

/**
 * Pixel-procedure threat at `(row, col)` of an `height x width` frame.
 *
 * # Safety
 * `out` must point to writable memory for one double.
 */
enum HaznavStatus haznav_threat_pixel(double row,
                                      double col,
                                      size_t height,
                                      size_t width,
                                      double *out);

/**
 * Blends `original` toward `segmented` by `t_f`. All three buffers hold
 * `height * width * 3` raw values in `[0, 255]`, row-major and
 * channel-interleaved.
 *
 * # Safety
 * Each pointer must reference `height * width * 3` floats; `out` must be writable.
 */
enum HaznavStatus haznav_fuse(const float *original,
                              const float *segmented,
                              size_t height,
                              size_t width,
                              double t_f,
                              float *out);

/**
 * # Safety
 * `out` must point to writable memory for one handle pointer.
 */
enum HaznavStatus haznav_config_default(struct HaznavConfig **out);

/**
 * Parses a JSON config; missing fields take their defaults. The result is validated.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HaznavStatus haznav_config_from_json(const char *json, struct HaznavConfig **out);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum HaznavStatus haznav_config_set_seed(struct HaznavConfig *cfg, uint64_t seed);

/**
 * Effective configuration as JSON.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum HaznavStatus haznav_config_to_json(const struct HaznavConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must be null or a handle from this library, not yet freed.
 */
void haznav_config_free(struct HaznavConfig *cfg);

/**
 * Runs the full evaluation, writing artifacts under `out_dir`, and returns
 * the report JSON.
 *
 * # Safety
 * `cfg` must be a live handle, `out_dir` a NUL-terminated path, `report` writable.
 */
enum HaznavStatus haznav_eval(const struct HaznavConfig *cfg, const char *out_dir, char **report);

/**
 * Loads a weights file written by `haznav train` or `haznav eval`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HaznavStatus haznav_controller_load(const char *path, struct HaznavController **out);

/**
 * Input rows and columns the controller expects, after cropping.
 *
 * # Safety
 * `ctl` must be a live handle; `height` and `width` writable.
 */
enum HaznavStatus haznav_controller_input_dims(const struct HaznavController *ctl,
                                               size_t *height,
                                               size_t *width);

/**
 * Steering prediction for one normalized input of `len` floats in `[-1, 1]`.
 * The value is clamped to the steering range.
 *
 * # Safety
 * `ctl` must be a live handle, `input` must reference `len` floats, `out` writable.
 */
enum HaznavStatus haznav_controller_predict(const struct HaznavController *ctl,
                                            const float *input,
                                            size_t len,
                                            double *out);

/**
 * # Safety
 * `ctl` must be null or a handle from this library, not yet freed.
 */
void haznav_controller_free(struct HaznavController *ctl);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAZNAV_H */
