#ifndef CURRICULUM_H
#define CURRICULUM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CUR_SCORER_STDDEV 0

#define CUR_SCORER_ENTROPY 1

#define CUR_SCORER_NORM 2

#define CUR_SCORER_CLASS_NORM 3

#define CUR_DIRECTION_PLUS 0

#define CUR_DIRECTION_MINUS 1

#define CUR_CIFAR10 10

#define CUR_CIFAR100 100

#define CUR_SCALE_ZERO_ONE 0

#define CUR_SCALE_UNIT 1

/**
 * Status codes returned by every fallible function.
 */
typedef enum CurStatus {
  CUR_STATUS_OK = 0,
  CUR_STATUS_NULL_POINTER = 1,
  CUR_STATUS_INVALID_ARGUMENT = 2,
  CUR_STATUS_IO = 3,
  CUR_STATUS_FORMAT = 4,
  CUR_STATUS_DEGENERATE_DATA = 5,
  CUR_STATUS_DIVERGED = 6,
  CUR_STATUS_ARCHITECTURE_MISMATCH = 7,
  CUR_STATUS_BUFFER_SIZE = 8,
  CUR_STATUS_AT_OPTIMUM = 9,
  CUR_STATUS_PANIC = 10,
} CurStatus;

/**
 * Labeled images; normalized views are built on first use from the
 * dataset's own statistics.
 */
typedef struct CurDataset CurDataset;

/**
 * Two-layer ELU classifier.
 */
typedef struct CurModel CurModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread ("" after a success).
 * The pointer stays valid until the next call on the same thread.
 */
const char *cur_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *cur_version(void);

/**
 * Builds a dataset from `n` row-major images of `height * width * channels`
 * bytes and `n` labels below `classes`.
 */
enum CurStatus cur_dataset_new(const uint8_t *images,
                               const uint32_t *labels,
                               size_t n,
                               size_t height,
                               size_t width,
                               size_t channels,
                               size_t classes,
                               struct CurDataset **out_dataset);

/**
 * Loads an IDX image/label file pair (raw or gzip).
 */
enum CurStatus cur_dataset_load_mnist(const char *image_path,
                                      const char *label_path,
                                      struct CurDataset **out_dataset);

/**
 * Loads and concatenates CIFAR binary batch files; `variant` is
 * `CUR_CIFAR10` or `CUR_CIFAR100`.
 */
enum CurStatus cur_dataset_load_cifar(const char *const *paths,
                                      size_t n_paths,
                                      uint32_t variant,
                                      struct CurDataset **out_dataset);

void cur_dataset_free(struct CurDataset *dataset);

/**
 * Number of examples (0 for a null handle).
 */
size_t cur_dataset_len(const struct CurDataset *dataset);

/**
 * Pixels per example (0 for a null handle).
 */
size_t cur_dataset_dim(const struct CurDataset *dataset);

size_t cur_dataset_num_classes(const struct CurDataset *dataset);

enum CurStatus cur_dataset_labels(const struct CurDataset *dataset,
                                  uint32_t *out_labels,
                                  size_t len);

/**
 * Keeps examples whose label is in `keep`; with `relabel` the kept labels
 * become `0..n_keep` in ascending order.
 */
enum CurStatus cur_dataset_select_subset(const struct CurDataset *dataset,
                                         const uint32_t *keep,
                                         size_t n_keep,
                                         bool relabel,
                                         struct CurDataset **out_dataset);

/**
 * Copy of `dataset` with exactly `floor(fraction * N)` labels changed.
 */
enum CurStatus cur_dataset_inject_label_noise(const struct CurDataset *dataset,
                                              double fraction,
                                              uint64_t seed,
                                              struct CurDataset **out_dataset);

/**
 * Per-example difficulty scores (sign applied for `CUR_DIRECTION_MINUS`).
 */
enum CurStatus cur_score(const struct CurDataset *dataset,
                         uint32_t scorer_code,
                         uint32_t direction_code,
                         double *out_scores,
                         size_t len);

/**
 * Ascending order of `values` (ties by index) written to `out_perm`.
 */
enum CurStatus cur_order_ascending(const double *values, size_t n, size_t *out_perm);

/**
 * Class-balanced round-robin order of `values`.
 */
enum CurStatus cur_order_class_balanced(const double *values,
                                        const uint32_t *labels,
                                        size_t n,
                                        size_t *out_perm);

/**
 * `floor(min(1, starting_fraction * inc^floor(step / step_length)) * n)`.
 */
enum CurStatus cur_pace_exponential(size_t step,
                                    double starting_fraction,
                                    double inc,
                                    size_t step_length,
                                    size_t n,
                                    size_t *out_size);

/**
 * `floor(k * n)`, requiring `b / n <= k <= 1`.
 */
enum CurStatus cur_pace_constant(double k, size_t n, size_t batch, size_t *out_size);

/**
 * Step-decay learning rate `lr0 / decay_factor^floor(t / decay_step)`.
 */
enum CurStatus cur_lr_at(double lr0,
                         double decay_factor,
                         size_t decay_step,
                         size_t t,
                         double *out_lr);

/**
 * Glorot-initialized model, deterministic in `seed`.
 */
enum CurStatus cur_model_new(size_t d_in,
                             size_t hidden,
                             size_t classes,
                             bool use_bias,
                             uint64_t seed,
                             struct CurModel **out_model);

void cur_model_free(struct CurModel *model);

/**
 * Length of the flat parameter vector `[W1, b1, W2, b2]` (0 for null).
 */
size_t cur_model_num_params(const struct CurModel *model);

enum CurStatus cur_model_get_params(const struct CurModel *model, double *out_params, size_t len);

enum CurStatus cur_model_set_params(struct CurModel *model, const double *params, size_t len);

enum CurStatus cur_model_save(const struct CurModel *model, const char *file);

enum CurStatus cur_model_load(const char *file, struct CurModel **out_model);

/**
 * Mean cross-entropy and its gradient over a row-major `batch × d_in` block.
 */
enum CurStatus cur_loss_and_grad(const struct CurModel *model,
                                 const double *x,
                                 const uint32_t *labels,
                                 size_t batch,
                                 double *out_loss,
                                 double *out_grad,
                                 size_t grad_len);

/**
 * In-place `w <- w - lr * grad`.
 */
enum CurStatus cur_sgd_step(struct CurModel *model, const double *grad, size_t len, double lr);

/**
 * Mean loss and accuracy on the dataset's standardized view.
 */
enum CurStatus cur_evaluate(const struct CurModel *model,
                            const struct CurDataset *dataset,
                            double *out_loss,
                            double *out_accuracy);

/**
 * Dynamic-curriculum scores of every example of `dataset` for the current
 * model and reference parameters `w_bar`.
 */
enum CurStatus cur_rho_scores(const struct CurModel *model,
                              const double *w_bar,
                              size_t w_len,
                              const struct CurDataset *dataset,
                              double *out_rho,
                              size_t len);

/**
 * Writes `[R², predicted R'², actual R'²]` for one SGD step to `out3`.
 */
enum CurStatus cur_distance_decomposition(const double *w,
                                          const double *w_bar,
                                          const double *grad,
                                          size_t len,
                                          double eta,
                                          double *out3);

/**
 * Pearson correlation with its two-sided p-value.
 */
enum CurStatus cur_pearson(const double *x,
                           const double *y,
                           size_t n,
                           double *out_r,
                           double *out_p);

/**
 * Dataset median pixel value `M` and the distances `M+`, `M-` of the
 * first `b` images under ascending and descending stddev order.
 */
enum CurStatus cur_median_pixel_distance(const struct CurDataset *dataset,
                                         size_t b,
                                         uint32_t scale,
                                         double *out_m,
                                         double *out_m_plus,
                                         double *out_m_minus);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURRICULUM_H */
