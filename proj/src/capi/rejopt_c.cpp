#include "rejopt/rejopt.h"

#include <algorithm>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "rejopt/evaluation.hpp"
#include "rejopt/synthetic.hpp"
#include "rejopt/version.hpp"

struct rejopt_dataset {
    rejopt::LabeledDataset data;
};

struct rejopt_model {
    rejopt::Classifier classifier;
    std::size_t dims = 0;
    int classes = 2;
};

struct rejopt_experiment {
    rejopt::ExperimentConfig config;
    rejopt::ArCurveResult result;
    std::string config_text;
};

namespace {

thread_local std::string last_error;

rejopt_status fail_with(rejopt_status status, std::string message)
{
    last_error = std::move(message);
    return status;
}

rejopt_status status_of(rejopt::ErrorCode code)
{
    switch (code) {
    case rejopt::ErrorCode::InvalidArgument:
        return REJOPT_INVALID_ARGUMENT;
    case rejopt::ErrorCode::Io:
        return REJOPT_IO;
    case rejopt::ErrorCode::Parse:
        return REJOPT_PARSE;
    case rejopt::ErrorCode::Training:
        return REJOPT_TRAINING;
    case rejopt::ErrorCode::DimensionMismatch:
        return REJOPT_DIMENSION;
    }
    return REJOPT_INTERNAL;
}

template <class F>
rejopt_status guarded(F&& body)
{
    try {
        body();
        return REJOPT_OK;
    } catch (const rejopt::Error& e) {
        return fail_with(status_of(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail_with(REJOPT_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail_with(REJOPT_INTERNAL, e.what());
    } catch (...) {
        return fail_with(REJOPT_INTERNAL, "unknown error");
    }
}

#define REJOPT_REQUIRE(cond, what)                                   \
    do {                                                             \
        if (!(cond)) {                                               \
            return fail_with(REJOPT_INVALID_ARGUMENT, (what));       \
        }                                                            \
    } while (false)

std::ofstream open_output(const char* path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        rejopt::fail(rejopt::ErrorCode::Io, std::string("cannot open ") + path + " for writing");
    }
    return out;
}

void finish_output(std::ofstream& out, const char* path)
{
    out.flush();
    if (!out) {
        rejopt::fail(rejopt::ErrorCode::Io, std::string("write to ") + path + " failed");
    }
}

template <class Writer>
rejopt_status write_experiment(const rejopt_experiment_t* experiment, const char* path, Writer writer)
{
    REJOPT_REQUIRE(experiment != nullptr && path != nullptr, "experiment and path must be non-null");
    return guarded([&] {
        auto out = open_output(path);
        writer(experiment->result, out);
        finish_output(out, path);
    });
}

}  // namespace

extern "C" {

const char* rejopt_version(void) { return rejopt::kVersion; }

const char* rejopt_last_error(void) { return last_error.c_str(); }

const char* rejopt_status_name(rejopt_status status)
{
    switch (status) {
    case REJOPT_OK:
        return "ok";
    case REJOPT_INVALID_ARGUMENT:
        return "invalid argument";
    case REJOPT_IO:
        return "i/o error";
    case REJOPT_PARSE:
        return "parse error";
    case REJOPT_TRAINING:
        return "training error";
    case REJOPT_DIMENSION:
        return "dimension mismatch";
    case REJOPT_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

rejopt_status rejopt_dataset_load_csv(const char* path, rejopt_dataset_t** out)
{
    REJOPT_REQUIRE(path != nullptr && out != nullptr, "path and out must be non-null");
    *out = nullptr;
    return guarded([&] { *out = new rejopt_dataset{rejopt::load_csv(path)}; });
}

rejopt_status rejopt_dataset_generate(const char* name, size_t n, uint64_t seed, rejopt_dataset_t** out)
{
    REJOPT_REQUIRE(name != nullptr && out != nullptr, "name and out must be non-null");
    *out = nullptr;
    return guarded([&] { *out = new rejopt_dataset{rejopt::generate_synthetic(name, n, seed)}; });
}

rejopt_status rejopt_dataset_write_csv(const rejopt_dataset_t* data, const char* path)
{
    REJOPT_REQUIRE(data != nullptr && path != nullptr, "data and path must be non-null");
    return guarded([&] { rejopt::write_csv(data->data, path); });
}

size_t rejopt_dataset_rows(const rejopt_dataset_t* data) { return data ? data->data.size() : 0; }

size_t rejopt_dataset_cols(const rejopt_dataset_t* data) { return data ? data->data.dims() : 0; }

int rejopt_dataset_classes(const rejopt_dataset_t* data) { return data ? data->data.classes() : 0; }

rejopt_status rejopt_dataset_get_row(const rejopt_dataset_t* data, size_t row, double* x, size_t capacity, int* label)
{
    REJOPT_REQUIRE(data != nullptr, "data must be non-null");
    REJOPT_REQUIRE(row < data->data.size(), "row index out of range");
    if (x != nullptr) {
        const auto values = data->data.x(row);
        if (capacity < values.size()) {
            return fail_with(REJOPT_DIMENSION, "row buffer holds " + std::to_string(capacity) + " values, need " +
                                                   std::to_string(values.size()));
        }
        std::copy(values.begin(), values.end(), x);
    }
    if (label != nullptr) {
        *label = data->data.y(row);
    }
    return REJOPT_OK;
}

void rejopt_dataset_free(rejopt_dataset_t* data) { delete data; }

void rejopt_train_options_init(rejopt_train_options* options)
{
    if (options == nullptr) {
        return;
    }
    static const size_t default_hidden[] = {8};
    options->method = "rejoSVM";
    options->w_r = 0.2;
    options->kernel = REJOPT_KERNEL_RBF;
    options->C = 1.0;
    options->gamma = 1.0;
    options->hidden = default_hidden;
    options->hidden_count = 1;
    options->learning_rate = 0.1;
    options->epochs = 200;
    options->batch_size = 16;
    options->h = 1.0;
    options->tol = 1e-3;
    options->max_passes = 1000;
    options->seed = 1;
}

rejopt_status rejopt_train(const rejopt_dataset_t* train, const rejopt_train_options* options, rejopt_model_t** out)
{
    REJOPT_REQUIRE(train != nullptr && options != nullptr && out != nullptr, "train, options and out must be non-null");
    REJOPT_REQUIRE(options->method != nullptr, "options.method must be set");
    REJOPT_REQUIRE(options->hidden_count == 0 || options->hidden != nullptr, "options.hidden is null");
    *out = nullptr;
    return guarded([&] {
        rejopt::TrainSettings settings;
        settings.method = rejopt::parse_method(options->method);
        settings.kernel = options->kernel == REJOPT_KERNEL_LINEAR ? rejopt::KernelType::Linear : rejopt::KernelType::Rbf;
        settings.h = options->h;
        settings.tol = options->tol;
        settings.max_passes = options->max_passes;
        settings.epochs = options->epochs;
        settings.batch_size = options->batch_size;
        rejopt::HyperParams hp;
        hp.C = options->C;
        hp.gamma = options->gamma;
        hp.hidden.assign(options->hidden, options->hidden + options->hidden_count);
        hp.learning_rate = options->learning_rate;
        rejopt::require(options->h > 0.0, "h must be positive");
        auto classifier = rejopt::train_classifier(train->data, options->w_r, settings, hp, options->seed);
        *out = new rejopt_model{std::move(classifier), train->data.dims(), train->data.classes()};
    });
}

rejopt_status rejopt_model_save(const rejopt_model_t* model, const char* path)
{
    REJOPT_REQUIRE(model != nullptr && path != nullptr, "model and path must be non-null");
    return guarded([&] {
        auto out = open_output(path);
        rejopt::save(model->classifier, out);
        finish_output(out, path);
    });
}

rejopt_status rejopt_model_load(const char* path, rejopt_model_t** out)
{
    REJOPT_REQUIRE(path != nullptr && out != nullptr, "path and out must be non-null");
    *out = nullptr;
    return guarded([&] {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            rejopt::fail(rejopt::ErrorCode::Io, std::string("cannot open model file ") + path);
        }
        auto classifier = rejopt::load_classifier(in);
        std::size_t dims = 0;
        int classes = 2;
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, rejopt::RejectModel>) {
                    dims = m.original_dims;
                    classes = m.classes;
                } else if constexpr (std::is_same_v<T, rejopt::SingleThresholdModel>) {
                    dims = m.classifier.dims();
                } else {
                    dims = m.classifiers.front().dims();
                    classes = m.classes;
                }
            },
            classifier);
        *out = new rejopt_model{std::move(classifier), dims, classes};
    });
}

rejopt_status rejopt_model_predict(const rejopt_model_t* model, const double* x, size_t dims, rejopt_prediction* out)
{
    REJOPT_REQUIRE(model != nullptr && out != nullptr, "model and out must be non-null");
    REJOPT_REQUIRE(x != nullptr || dims == 0, "x is null");
    if (dims != model->dims) {
        return fail_with(REJOPT_DIMENSION, "model expects " + std::to_string(model->dims) + " features, got " +
                                               std::to_string(dims));
    }
    return guarded([&] {
        const auto p = rejopt::predict(model->classifier, std::span<const double>(x, dims));
        out->kind = p.rejected() ? REJOPT_REJECT : REJOPT_CLASS;
        out->index = p.index;
        out->non_monotone = p.non_monotone ? 1 : 0;
    });
}

size_t rejopt_model_dims(const rejopt_model_t* model) { return model ? model->dims : 0; }

int rejopt_model_classes(const rejopt_model_t* model) { return model ? model->classes : 0; }

rejopt_status rejopt_model_offsets(const rejopt_model_t* model, double* out, size_t capacity, size_t* count)
{
    REJOPT_REQUIRE(model != nullptr, "model must be non-null");
    const auto* reject = std::get_if<rejopt::RejectModel>(&model->classifier);
    REJOPT_REQUIRE(reject != nullptr, "induced offsets exist only for rejoSVM and rejoNN models");
    std::vector<double> offsets;
    const auto status = guarded([&] { offsets = rejopt::induced_offsets(*reject); });
    if (status != REJOPT_OK) {
        return status;
    }
    if (count != nullptr) {
        *count = offsets.size();
    }
    if (out != nullptr) {
        if (capacity < offsets.size()) {
            return fail_with(REJOPT_DIMENSION, "offset buffer too small");
        }
        std::copy(offsets.begin(), offsets.end(), out);
    }
    return REJOPT_OK;
}

void rejopt_model_free(rejopt_model_t* model) { delete model; }

void rejopt_experiment_options_init(rejopt_experiment_options* options)
{
    if (options == nullptr) {
        return;
    }
    options->jobs = 1;
    options->override_seed = 0;
    options->seed = 0;
    options->on_event = nullptr;
    options->user = nullptr;
}

rejopt_status rejopt_experiment_run(const char* config_path, const rejopt_experiment_options* options,
                                    rejopt_experiment_t** out)
{
    REJOPT_REQUIRE(config_path != nullptr && out != nullptr, "config_path and out must be non-null");
    *out = nullptr;
    rejopt_experiment_options defaults;
    rejopt_experiment_options_init(&defaults);
    const auto& opts = options != nullptr ? *options : defaults;
    return guarded([&] {
        auto experiment = std::make_unique<rejopt_experiment>();
        experiment->config = rejopt::load_config(config_path);
        if (opts.override_seed != 0) {
            experiment->config.seed = opts.seed;
        }
        experiment->config_text = rejopt::render_config(experiment->config);
        rejopt::ArCurveOptions run;
        run.jobs = opts.jobs == 0 ? 1 : opts.jobs;
        if (opts.on_event != nullptr) {
            run.on_event = [&](const std::string& message) { opts.on_event(message.c_str(), opts.user); };
        }
        experiment->result = rejopt::ar_curve(experiment->config, run);
        *out = experiment.release();
    });
}

const char* rejopt_experiment_config_text(const rejopt_experiment_t* experiment)
{
    return experiment ? experiment->config_text.c_str() : "";
}

uint64_t rejopt_experiment_seed(const rejopt_experiment_t* experiment)
{
    return experiment ? experiment->config.seed : 0;
}

size_t rejopt_experiment_row_count(const rejopt_experiment_t* experiment)
{
    return experiment ? experiment->result.rows.size() : 0;
}

size_t rejopt_experiment_aggregate_count(const rejopt_experiment_t* experiment)
{
    return experiment ? experiment->result.aggregate.size() : 0;
}

int rejopt_experiment_failed_repetitions(const rejopt_experiment_t* experiment)
{
    return experiment ? experiment->result.failed_repetitions : 0;
}

size_t rejopt_experiment_event_count(const rejopt_experiment_t* experiment)
{
    return experiment ? experiment->result.events.size() : 0;
}

const char* rejopt_experiment_event(const rejopt_experiment_t* experiment, size_t index)
{
    if (experiment == nullptr || index >= experiment->result.events.size()) {
        return nullptr;
    }
    return experiment->result.events[index].c_str();
}

rejopt_status rejopt_experiment_write_runs(const rejopt_experiment_t* experiment, const char* path)
{
    return write_experiment(experiment, path, [](const auto& r, std::ostream& o) { rejopt::write_runs_csv(r, o); });
}

rejopt_status rejopt_experiment_write_aggregate(const rejopt_experiment_t* experiment, const char* path)
{
    return write_experiment(experiment, path,
                            [](const auto& r, std::ostream& o) { rejopt::write_aggregate_csv(r, o); });
}

rejopt_status rejopt_experiment_write_confusion(const rejopt_experiment_t* experiment, const char* path)
{
    return write_experiment(experiment, path,
                            [](const auto& r, std::ostream& o) { rejopt::write_confusion_csv(r, o); });
}

void rejopt_experiment_free(rejopt_experiment_t* experiment) { delete experiment; }

}  // extern "C"
