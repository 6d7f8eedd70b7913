#pragma once

#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "rejopt/mlp.hpp"
#include "rejopt/replication.hpp"
#include "rejopt/svm.hpp"

namespace rejopt {

/// A single binary classifier over the extended space, together with the
/// replication constants needed to query it.
struct RejectModel {
    std::variant<SvmModel, MlpModel> scorer;
    std::size_t original_dims = 0;
    int classes = 2;
    double h = 1.0;

    /// Decision value of every replica of `x`, in replica order.
    [[nodiscard]] std::vector<double> replica_decisions(std::span<const double> x) const;
};

RejectModel train_reject_svm(const LabeledDataset& data, double w_r, const SvmParams& params, double h = 1.0);
RejectModel train_reject_mlp(const LabeledDataset& data, double w_r, const MlpParams& params, double h = 1.0);

/// Classifies all replicas of x and decodes the label sequence.
Prediction predict(const RejectModel& model, std::span<const double> x);

/// Per-replica offsets b_q of the shared decision function, in replica order.
std::vector<double> induced_offsets(const RejectModel& model);

void save(const RejectModel& model, std::ostream& out);
RejectModel load_reject_model(std::istream& in);

}  // namespace rejopt
