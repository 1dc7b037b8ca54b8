#ifndef ML5G_H
#define ML5G_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Ml5gStatus {
  ML5G_STATUS_OK = 0,
  ML5G_STATUS_NULL_POINTER = 1,
  ML5G_STATUS_INVALID_UTF8 = 2,
  ML5G_STATUS_INVALID_ARGUMENT = 3,
  ML5G_STATUS_INVALID_INTENT = 4,
  ML5G_STATUS_VALIDATION_FAILED = 5,
  ML5G_STATUS_BUFFER_TOO_SMALL = 6,
  ML5G_STATUS_RUNTIME = 7,
  ML5G_STATUS_PANIC = 8,
} Ml5gStatus;

// A generated WLAN deployment.
typedef struct Ml5gDeployment Ml5gDeployment;

// A trained throughput model.
typedef struct Ml5gModel Ml5gModel;

// An orchestrated pipeline instance.
typedef struct Ml5gPipeline Ml5gPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code.
const char *ml5g_status_str(enum Ml5gStatus status);

// Copies the calling thread's last error message into `buf`.
//
// # Safety
// `buf` must be valid for `len` bytes or null; `needed` must be null or writable.
enum Ml5gStatus ml5g_last_error(char *buf, uintptr_t len, uintptr_t *needed);

// Generates a deployment of a density class (`"sparse"`, `"medium"` or `"dense"`).
//
// # Safety
// `density` must be a NUL-terminated string; `out` must be writable.
enum Ml5gStatus ml5g_deployment_generate(const char *density,
                                         double side_m,
                                         uint64_t seed,
                                         struct Ml5gDeployment **out);

// # Safety
// `deployment` must come from [`ml5g_deployment_generate`] and not be used afterwards.
void ml5g_deployment_free(struct Ml5gDeployment *deployment);

// # Safety
// Handles and output pointers must be valid.
enum Ml5gStatus ml5g_deployment_counts(const struct Ml5gDeployment *deployment,
                                       uint32_t *num_aps,
                                       uint32_t *num_stas);

// Mean per-STA throughput (Mbps) under Strongest Signal First.
//
// # Safety
// Handles and output pointers must be valid.
enum Ml5gStatus ml5g_ssf_mean_throughput(const struct Ml5gDeployment *deployment, double *out_mbps);

// Mean per-STA throughput (Mbps) under model-driven association, no policies.
//
// # Safety
// Handles and output pointers must be valid.
enum Ml5gStatus ml5g_nn_mean_throughput(const struct Ml5gDeployment *deployment,
                                        const struct Ml5gModel *model,
                                        uint64_t order_seed,
                                        double *out_mbps);

// Loads a model from its JSON artifact bytes.
//
// # Safety
// `json` must be valid for `len` bytes; `out` must be writable.
enum Ml5gStatus ml5g_model_from_json(const uint8_t *json, uintptr_t len, struct Ml5gModel **out);

// # Safety
// `model` must come from this library and not be used afterwards.
void ml5g_model_free(struct Ml5gModel *model);

// Predicts throughput (Mbps) from raw, un-normalized features in the model's input order.
//
// # Safety
// `features` must be valid for `n` values; `out_mbps` must be writable.
enum Ml5gStatus ml5g_model_predict(const struct Ml5gModel *model,
                                   const double *features,
                                   uintptr_t n,
                                   double *out_mbps);

// Parses and instantiates an intent on the hosts it names.
//
// # Safety
// `intent_json` must be a NUL-terminated string; `out` must be writable.
enum Ml5gStatus ml5g_pipeline_new(const char *intent_json, struct Ml5gPipeline **out);

// Runs the training phase; on success the pipeline is serving a validated model.
//
// # Safety
// `pipeline` must be a valid handle.
enum Ml5gStatus ml5g_pipeline_train(struct Ml5gPipeline *pipeline);

// Copies the pipeline's JSON state dump into `buf`.
//
// # Safety
// `buf` must be valid for `len` bytes or null; `needed` must be null or writable.
enum Ml5gStatus ml5g_pipeline_state_json(const struct Ml5gPipeline *pipeline,
                                         char *buf,
                                         uintptr_t len,
                                         uintptr_t *needed);

// Copies the active model's JSON artifact into `buf`; fails if nothing is serving.
//
// # Safety
// `buf` must be valid for `len` bytes or null; `needed` must be null or writable.
enum Ml5gStatus ml5g_pipeline_model_json(const struct Ml5gPipeline *pipeline,
                                         char *buf,
                                         uintptr_t len,
                                         uintptr_t *needed);

// # Safety
// `pipeline` must come from [`ml5g_pipeline_new`] and not be used afterwards.
void ml5g_pipeline_free(struct Ml5gPipeline *pipeline);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ML5G_H */
