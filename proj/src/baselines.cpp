#include "rejopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "rejopt/rng.hpp"
#include "rejopt/serialize.hpp"

namespace rejopt {

namespace {

constexpr std::size_t kThresholdGridSize = 33;

BinaryProblem equal_cost_problem(const LabeledDataset& data)
{
    BinaryProblem p;
    p.x = data.features();
    p.y.resize(data.size());
    p.cost.assign(data.size(), 1.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        p.y[i] = data.y(i) == 1 ? -1 : +1;
    }
    return p;
}

Prediction band_prediction(double f, double t)
{
    if (std::abs(f) <= t) {
        return Prediction::reject(1);
    }
    return Prediction::of_class(f >= 0.0 ? 2 : 1);
}

}  // namespace

std::size_t select_threshold(std::span<const double> grid, std::span<const double> decisions,
                             std::span<const int> truth, double w_r, std::vector<double>* risks)
{
    require(!grid.empty(), "threshold grid is empty");
    require(decisions.size() == truth.size() && !truth.empty(), "decisions and labels disagree in length");
    const auto n = static_cast<double>(truth.size());
    std::size_t best = 0;
    double best_risk = std::numeric_limits<double>::infinity();
    if (risks != nullptr) {
        risks->assign(grid.size(), 0.0);
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::size_t rejected = 0;
        std::size_t errors = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const auto p = band_prediction(decisions[i], grid[g]);
            if (p.rejected()) {
                ++rejected;
            } else if (p.index != truth[i]) {
                ++errors;
            }
        }
        const double risk = w_r * static_cast<double>(rejected) / n + static_cast<double>(errors) / n;
        if (risks != nullptr) {
            (*risks)[g] = risk;
        }
        if (risk < best_risk || (risk == best_risk && grid[g] > grid[best])) {
            best_risk = risk;
            best = g;
        }
    }
    return best;
}

SingleThresholdModel train_single_threshold(const LabeledDataset& train, double w_r, const SvmParams& params)
{
    require(train.classes() == 2, "single-threshold baseline needs K = 2");
    cost_pair(w_r);
    require(train.size() >= 2, "single-threshold baseline needs at least two rows");

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(params.seed, 0x7e5));
    rng.shuffle(order.begin(), order.end());
    const std::size_t n_val = std::max<std::size_t>(1, train.size() / 5);
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(fit.begin(), fit.end());

    const auto fit_data = train.subset(fit);
    const auto val_data = train.subset(val);
    SvmParams p = params;
    p.linear_tail = 0;
    SingleThresholdModel model;
    model.classifier = train_svm(equal_cost_problem(fit_data), p);

    std::vector<double> decisions(val_data.size());
    std::vector<double> magnitudes(val_data.size());
    for (std::size_t i = 0; i < val_data.size(); ++i) {
        decisions[i] = model.classifier.decision(val_data.x(i));
        magnitudes[i] = std::abs(decisions[i]);
    }
    std::sort(magnitudes.begin(), magnitudes.end());
    model.threshold_grid.resize(kThresholdGridSize);
    for (std::size_t g = 0; g < kThresholdGridSize; ++g) {
        const double pos = static_cast<double>(g) / static_cast<double>(kThresholdGridSize - 1) *
                           static_cast<double>(magnitudes.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, magnitudes.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        model.threshold_grid[g] = magnitudes[lo] + frac * (magnitudes[hi] - magnitudes[lo]);
    }
    model.threshold_grid[0] = 0.0;
    const std::size_t best =
        select_threshold(model.threshold_grid, decisions, val_data.labels(), w_r, &model.validation_risk);
    model.threshold = model.threshold_grid[best];
    return model;
}

SingleThresholdModel train_standard(const LabeledDataset& train, const SvmParams& params)
{
    require(train.classes() == 2, "standard classifier needs K = 2");
    SvmParams p = params;
    p.linear_tail = 0;
    SingleThresholdModel model;
    model.classifier = train_svm(equal_cost_problem(train), p);
    return model;
}

Prediction predict_baseline(const SingleThresholdModel& model, std::span<const double> x)
{
    return band_prediction(model.classifier.decision(x), model.threshold);
}

IndependentPairModel train_independent(const LabeledDataset& train, const CostScheme& costs, const SvmParams& params)
{
    const int replicas = replica_count(train.classes());
    IndependentPairModel model;
    model.classes = train.classes();
    model.classifiers.reserve(static_cast<std::size_t>(replicas));
    SvmParams p = params;
    p.linear_tail = 0;
    for (int q = 1; q <= replicas; ++q) {
        p.seed = derive_seed(params.seed, static_cast<std::uint64_t>(q));
        model.classifiers.push_back(train_svm(replica_problem(train, q, costs), p));
    }
    return model;
}

IndependentPairModel train_independent(const LabeledDataset& train, double w_r, const SvmParams& params)
{
    return train_independent(train, cost_pair(w_r), params);
}

Prediction predict_baseline(const IndependentPairModel& model, std::span<const double> x)
{
    std::vector<ReplicaLabel> labels(model.classifiers.size());
    for (std::size_t q = 0; q < labels.size(); ++q) {
        labels[q] = label_of(model.classifiers[q].decision(x));
    }
    return decode(labels, model.classes);
}

void save(const SingleThresholdModel& model, std::ostream& out)
{
    out << "single-threshold 1\n";
    out << "threshold " << format_number(model.threshold) << '\n';
    model.classifier.save(out);
}

void save(const IndependentPairModel& model, std::ostream& out)
{
    out << "independent-pair 1\n";
    out << "classes " << model.classes << '\n';
    for (const auto& c : model.classifiers) {
        c.save(out);
    }
}

SingleThresholdModel load_single_threshold(std::istream& in)
{
    TokenReader r(in, "single-threshold model");
    r.expect("single-threshold");
    r.expect_version(1);
    r.expect("threshold");
    SingleThresholdModel model;
    model.threshold = r.number();
    model.classifier = SvmModel::load(in);
    return model;
}

IndependentPairModel load_independent_pair(std::istream& in)
{
    TokenReader r(in, "independent-pair model");
    r.expect("independent-pair");
    r.expect_version(1);
    r.expect("classes");
    IndependentPairModel model;
    model.classes = r.integer();
    if (model.classes < 2) {
        r.error("K must be >= 2");
    }
    for (int q = 0; q < replica_count(model.classes); ++q) {
        model.classifiers.push_back(SvmModel::load(in));
    }
    return model;
}

}  // namespace rejopt
