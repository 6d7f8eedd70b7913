#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rejopt/baselines.hpp"
#include "rejopt/dataset.hpp"
#include "rejopt/reject_model.hpp"

namespace rejopt {

/// `Standard` is the plain equal-cost binary SVM (K = 2, never rejects), used as
/// the zero-reject reference for A-R comparisons.
enum class Method { RejoSvm, RejoNn, SingleThreshold, IndependentPair, Standard };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

/// One point of the hyperparameter grid. Fields irrelevant to a method are ignored.
struct HyperParams {
    double C = 1.0;
    double gamma = 1.0;
    std::vector<std::size_t> hidden{8};
    double learning_rate = 0.1;

    friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

/// Deterministic preference used to break CV ties: smaller C, then larger gamma,
/// then fewer hidden units, then smaller learning rate.
bool preferred(const HyperParams& a, const HyperParams& b);

/// Settings that are fixed across the grid.
struct TrainSettings {
    Method method = Method::RejoSvm;
    KernelType kernel = KernelType::Rbf;
    double h = 1.0;
    double tol = 1e-3;
    int max_passes = 1000;
    int epochs = 200;
    std::size_t batch_size = 16;
};

/// Any trained model with reject option.
using Classifier = std::variant<RejectModel, SingleThresholdModel, IndependentPairModel>;

Classifier train_classifier(const LabeledDataset& train, double w_r, const TrainSettings& settings,
                            const HyperParams& hp, std::uint64_t seed);
Prediction predict(const Classifier& model, std::span<const double> x);
std::vector<Prediction> predict_all(const Classifier& model, const LabeledDataset& data);

void save(const Classifier& model, std::ostream& out);
Classifier load_classifier(std::istream& in);

/// Accuracy-reject summary of a prediction set.
struct ARPoint {
    double w_r = 0.0;
    double reject_rate = 0.0;
    /// Fraction of accepted points classified correctly; 1 when nothing is accepted.
    double acc_accepted = 1.0;
    double error_rate = 0.0;
    double risk = 0.0;
    double ambiguity_rate = 0.0;
};

ARPoint evaluate(std::span<const Prediction> preds, std::span<const int> truth, double w_r);

/// w_r R + E, where E counts accepted points whose class differs from the truth.
double empirical_risk(std::span<const Prediction> preds, std::span<const int> truth, double w_r);

/// Counts keyed by (true class, outcome); outcome k > 0 is class k, outcome -j is Reject(j).
using Confusion = std::map<std::pair<int, int>, std::size_t>;
Confusion confusion_counts(std::span<const Prediction> preds, std::span<const int> truth);

/// Fold assignment for k-fold CV; every training part keeps classes 1 and K
/// when that is achievable within a few redraws. Returns fold id per row.
std::vector<std::size_t> assign_folds(const LabeledDataset& data, std::size_t folds, std::uint64_t seed);

/// Returns the grid point with the smallest mean CV risk at w_r.
HyperParams grid_search_cv(const LabeledDataset& train, const TrainSettings& settings,
                           std::span<const HyperParams> grid, std::size_t folds, double w_r, std::uint64_t seed,
                           std::vector<double>* cv_risks = nullptr);

struct DatasetSpec {
    /// "synthetic-i".."synthetic-iv", or a CSV path.
    std::string source = "synthetic-i";
    std::size_t n = 400;
    std::optional<std::uint64_t> seed;

    [[nodiscard]] bool is_synthetic() const;
};

struct ExperimentConfig {
    std::string name;  ///< value of the `dataset` output column
    DatasetSpec dataset;
    TrainSettings settings;
    std::vector<double> C_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_grid{0.5, 2.0, 8.0};
    std::vector<std::vector<std::size_t>> hidden_grid{{8}};
    std::vector<double> learning_rate_grid{0.1};
    std::vector<double> w_r_grid;
    std::vector<double> fractions{0.25};
    int repetitions = 100;
    std::uint64_t seed = 1;
    std::size_t folds = 5;

    ExperimentConfig();

    /// Cartesian product of the grids relevant to the method.
    [[nodiscard]] std::vector<HyperParams> grid() const;
    void validate() const;
};

/// Default reject-weight grid 0.04, 0.08, ..., 0.48.
std::vector<double> default_w_r_grid();

/// Line-oriented `key = value` format; `#` starts a comment.
ExperimentConfig parse_config(std::istream& in, const std::string& source_name = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
std::string render_config(const ExperimentConfig& config);

struct RunRow {
    double fraction = 0.0;
    int rep = 0;
    ARPoint point;
    Confusion confusion;
    HyperParams chosen;
};

struct AggregateRow {
    double fraction = 0.0;
    double w_r = 0.0;
    int reps = 0;
    ARPoint mean;
    ARPoint stddev;
};

struct ArCurveResult {
    std::string dataset;
    std::string method;
    std::vector<RunRow> rows;  ///< ordered by (fraction, rep, w_r)
    std::vector<AggregateRow> aggregate;
    std::vector<std::string> events;
    int failed_repetitions = 0;
};

struct ArCurveOptions {
    unsigned jobs = 1;
    /// Called from the aggregating thread, in repetition order.
    std::function<void(const std::string&)> on_event;
};

LabeledDataset load_dataset(const DatasetSpec& spec, std::uint64_t fallback_seed);

/// Repeated-split protocol: per repetition, split, grid-search each w_r by CV on
/// train, retrain on the full train split, evaluate on test.
ArCurveResult ar_curve(const ExperimentConfig& config, const LabeledDataset& data, const ArCurveOptions& options = {});
ArCurveResult ar_curve(const ExperimentConfig& config, const ArCurveOptions& options = {});

/// Mean and sample standard deviation per (fraction, w_r), in first-seen order.
std::vector<AggregateRow> aggregate(std::span<const RunRow> rows);

inline constexpr std::string_view kRunsHeader =
    "dataset,method,fraction,w_r,rep,reject_rate,acc_accepted,error_rate,risk,ambiguity_rate";

void write_runs_csv(const ArCurveResult& result, std::ostream& out);
void write_aggregate_csv(const ArCurveResult& result, std::ostream& out);
void write_confusion_csv(const ArCurveResult& result, std::ostream& out);

}  // namespace rejopt
