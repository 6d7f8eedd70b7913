/*
 * C interface to the rejopt library: classification with a reject option by
 * data replication, plus the baselines and the accuracy-reject protocol.
 *
 * Every fallible call returns a rejopt_status. On failure a description is
 * available from rejopt_last_error() on the calling thread until the next
 * failing call on that thread. Handles are opaque and owned by the caller,
 * who releases them with the matching *_free function (NULL is accepted).
 */
#ifndef REJOPT_H
#define REJOPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(REJOPT_BUILDING_LIBRARY)
#define REJOPT_API __attribute__((visibility("default")))
#else
#define REJOPT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rejopt_status {
    REJOPT_OK = 0,
    REJOPT_INVALID_ARGUMENT = 1,
    REJOPT_IO = 2,
    REJOPT_PARSE = 3,
    REJOPT_TRAINING = 4,
    REJOPT_DIMENSION = 5,
    REJOPT_INTERNAL = 6
} rejopt_status;

typedef struct rejopt_dataset rejopt_dataset_t;
typedef struct rejopt_model rejopt_model_t;
typedef struct rejopt_experiment rejopt_experiment_t;

REJOPT_API const char* rejopt_version(void);
REJOPT_API const char* rejopt_last_error(void);
REJOPT_API const char* rejopt_status_name(rejopt_status status);

/* Datasets */

REJOPT_API rejopt_status rejopt_dataset_load_csv(const char* path, rejopt_dataset_t** out);
/* name is one of "synthetic-i", "synthetic-ii", "synthetic-iii", "synthetic-iv". */
REJOPT_API rejopt_status rejopt_dataset_generate(const char* name, size_t n, uint64_t seed, rejopt_dataset_t** out);
REJOPT_API rejopt_status rejopt_dataset_write_csv(const rejopt_dataset_t* data, const char* path);
REJOPT_API size_t rejopt_dataset_rows(const rejopt_dataset_t* data);
REJOPT_API size_t rejopt_dataset_cols(const rejopt_dataset_t* data);
REJOPT_API int rejopt_dataset_classes(const rejopt_dataset_t* data);
/* Copies row `row` into x (capacity cols) and its label into *label. */
REJOPT_API rejopt_status rejopt_dataset_get_row(const rejopt_dataset_t* data, size_t row, double* x, size_t capacity,
                                                int* label);
REJOPT_API void rejopt_dataset_free(rejopt_dataset_t* data);

/* Models */

typedef enum rejopt_kernel { REJOPT_KERNEL_LINEAR = 0, REJOPT_KERNEL_RBF = 1 } rejopt_kernel;

typedef struct rejopt_train_options {
    /* "rejoSVM", "rejoNN", "single-threshold", "independent-pair" or "standard". */
    const char* method;
    double w_r;
    rejopt_kernel kernel;
    double C;
    double gamma;
    /* Hidden layer widths of the network; hidden_count 0 gives an affine G. */
    const size_t* hidden;
    size_t hidden_count;
    double learning_rate;
    int epochs;
    size_t batch_size;
    double h;
    double tol;
    int max_passes;
    uint64_t seed;
} rejopt_train_options;

/* Fills defaults: rejoSVM, w_r 0.2, RBF gamma 1, C 1, one hidden layer of 8, lr 0.1,
 * 200 epochs, batch 16, h 1, tol 1e-3, 1000 passes, seed 1. */
REJOPT_API void rejopt_train_options_init(rejopt_train_options* options);

typedef enum rejopt_prediction_kind { REJOPT_CLASS = 0, REJOPT_REJECT = 1 } rejopt_prediction_kind;

typedef struct rejopt_prediction {
    rejopt_prediction_kind kind;
    /* Class k in 1..K, or j in 1..K-1 for a rejection between classes j and j+1. */
    int index;
    int non_monotone;
} rejopt_prediction;

REJOPT_API rejopt_status rejopt_train(const rejopt_dataset_t* train, const rejopt_train_options* options,
                                      rejopt_model_t** out);
REJOPT_API rejopt_status rejopt_model_save(const rejopt_model_t* model, const char* path);
REJOPT_API rejopt_status rejopt_model_load(const char* path, rejopt_model_t** out);
REJOPT_API rejopt_status rejopt_model_predict(const rejopt_model_t* model, const double* x, size_t dims,
                                              rejopt_prediction* out);
REJOPT_API size_t rejopt_model_dims(const rejopt_model_t* model);
REJOPT_API int rejopt_model_classes(const rejopt_model_t* model);
/* Induced replica offsets b_1..b_{2(K-1)} of a rejoSVM or rejoNN model. *count
 * receives the number of offsets even when capacity is too small. */
REJOPT_API rejopt_status rejopt_model_offsets(const rejopt_model_t* model, double* out, size_t capacity,
                                              size_t* count);
REJOPT_API void rejopt_model_free(rejopt_model_t* model);

/* Experiments */

typedef void (*rejopt_event_fn)(const char* message, void* user);

typedef struct rejopt_experiment_options {
    unsigned jobs;
    /* When non-zero, seed replaces the configured base seed. */
    int override_seed;
    uint64_t seed;
    rejopt_event_fn on_event;
    void* user;
} rejopt_experiment_options;

REJOPT_API void rejopt_experiment_options_init(rejopt_experiment_options* options);
/* Loads a config file, loads or generates its dataset and runs the repeated
 * split protocol. Repetitions that cannot be completed are counted in
 * rejopt_experiment_failed_repetitions and described by events; they do not
 * make the call fail. */
REJOPT_API rejopt_status rejopt_experiment_run(const char* config_path, const rejopt_experiment_options* options,
                                               rejopt_experiment_t** out);
REJOPT_API const char* rejopt_experiment_config_text(const rejopt_experiment_t* experiment);
REJOPT_API uint64_t rejopt_experiment_seed(const rejopt_experiment_t* experiment);
REJOPT_API size_t rejopt_experiment_row_count(const rejopt_experiment_t* experiment);
REJOPT_API size_t rejopt_experiment_aggregate_count(const rejopt_experiment_t* experiment);
REJOPT_API int rejopt_experiment_failed_repetitions(const rejopt_experiment_t* experiment);
REJOPT_API size_t rejopt_experiment_event_count(const rejopt_experiment_t* experiment);
REJOPT_API const char* rejopt_experiment_event(const rejopt_experiment_t* experiment, size_t index);
REJOPT_API rejopt_status rejopt_experiment_write_runs(const rejopt_experiment_t* experiment, const char* path);
REJOPT_API rejopt_status rejopt_experiment_write_aggregate(const rejopt_experiment_t* experiment, const char* path);
REJOPT_API rejopt_status rejopt_experiment_write_confusion(const rejopt_experiment_t* experiment, const char* path);
REJOPT_API void rejopt_experiment_free(rejopt_experiment_t* experiment);

#ifdef __cplusplus
}
#endif

#endif
