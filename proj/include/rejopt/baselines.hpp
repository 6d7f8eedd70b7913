#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rejopt/dataset.hpp"
#include "rejopt/replication.hpp"
#include "rejopt/svm.hpp"

namespace rejopt {

/// One equal-cost binary SVM in the original space; reject iff |f(x)| <= t.
struct SingleThresholdModel {
    SvmModel classifier;
    double threshold = 0.0;
    /// Candidate thresholds and their validation risks, kept for inspection.
    std::vector<double> threshold_grid;
    std::vector<double> validation_risk;
};

/// Trains on four fifths of `train` and picks t on the held-out fifth among
/// 33 quantiles of |f| (the lowest replaced by 0), minimizing w_r R + E.
/// Ties go to the larger threshold.
SingleThresholdModel train_single_threshold(const LabeledDataset& train, double w_r, const SvmParams& params);

/// Plain equal-cost classifier on all of `train` with a zero-width band.
SingleThresholdModel train_standard(const LabeledDataset& train, const SvmParams& params);

/// Chooses a threshold from `grid` minimizing w_r R + E on (decisions, truth).
/// Returns the index into grid; ties resolve to the larger threshold.

std::size_t select_threshold(std::span<const double> grid, std::span<const double> decisions,
                             std::span<const int> truth, double w_r, std::vector<double>* risks = nullptr);

Prediction predict_baseline(const SingleThresholdModel& model, std::span<const double> x);

/// 2(K-1) classifiers trained independently, member q on the replica-q labels and costs.
struct IndependentPairModel {
    std::vector<SvmModel> classifiers;
    int classes = 2;
};

IndependentPairModel train_independent(const LabeledDataset& train, double w_r, const SvmParams& params);
IndependentPairModel train_independent(const LabeledDataset& train, const CostScheme& costs, const SvmParams& params);

Prediction predict_baseline(const IndependentPairModel& model, std::span<const double> x);

void save(const SingleThresholdModel& model, std::ostream& out);
void save(const IndependentPairModel& model, std::ostream& out);
SingleThresholdModel load_single_threshold(std::istream& in);
IndependentPairModel load_independent_pair(std::istream& in);

}  // namespace rejopt
