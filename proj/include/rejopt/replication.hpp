#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rejopt/dataset.hpp"
#include "rejopt/matrix.hpp"

namespace rejopt {

/// Low and high misclassification costs. C_low + C_high = 1 and C_low = w_r.
struct CostScheme {
    double low = 0.0;
    double high = 1.0;

    [[nodiscard]] double reject_cost() const noexcept { return low / (low + high); }
};

/// Costs for reject weight w_r in [0, 0.5).
CostScheme cost_pair(double w_r);

/// Labeled binary problem with one cost multiplier per row. Labels are -1/+1.
struct BinaryProblem {
    Matrix x;
    std::vector<int> y;
    std::vector<double> cost;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
};

/// The extended binary problem plus bookkeeping of where every row came from.
struct ReplicatedDataset {
    BinaryProblem problem;
    std::vector<int> replica;        ///< 1..2(K-1)
    std::vector<std::size_t> origin; ///< row of the source dataset, 0-based
    std::size_t original_dims = 0;
    int classes = 0;
    double h = 1.0;

    [[nodiscard]] std::size_t size() const noexcept { return problem.size(); }
    [[nodiscard]] std::size_t extension_dims() const noexcept { return 2 * static_cast<std::size_t>(classes - 1) - 1; }
};

inline int replica_count(int classes) { return 2 * (classes - 1); }

/// Binary label of a class-k point in replica q: -1 iff k <= ceil(q/2).
int replica_label(int k, int q);

/// True when a class-k point in replica q carries the low cost.
bool replica_low_cost(int k, int q);

/// Embeds every point into each of the 2(K-1) replicas (replica-major row order).
ReplicatedDataset replicate(const LabeledDataset& data, double h, double w_r);
ReplicatedDataset replicate(const LabeledDataset& data, double h, const CostScheme& costs);

/// Writes [x; e_q] into `out`, which must have length p + 2(K-1) - 1.
void extend_point_into(std::span<const double> x, int q, double h, int classes, std::span<double> out);
std::vector<double> extend_point(std::span<const double> x, int q, double h, int classes);

/// Replica-q slice of the ordinal problem in the original space: Frank-Hall style member problem.
BinaryProblem replica_problem(const LabeledDataset& data, int q, const CostScheme& costs);

/// Class or reject outcome of a classifier with reject option.
struct Prediction {
    enum class Kind { Class, Reject };

    Kind kind = Kind::Class;
    /// Class 1..K, or j in 1..K-1 for a rejection between classes j and j+1.
    int index = 1;
    /// Set when some lower label precedes an upper one in the replica sequence.
    bool non_monotone = false;

    [[nodiscard]] bool rejected() const noexcept { return kind == Kind::Reject; }

    static Prediction of_class(int k) { return {Kind::Class, k, false}; }
    static Prediction reject(int j) { return {Kind::Reject, j, false}; }

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Replica label in the extended binary problem: `Upper` is the +1 side.
enum class ReplicaLabel { Lower, Upper };

inline ReplicaLabel label_of(double decision) { return decision >= 0.0 ? ReplicaLabel::Upper : ReplicaLabel::Lower; }

/// Counting rule. N upper labels: N even -> class N/2 + 1, N odd -> reject (N+1)/2.
/// `labels` must hold exactly 2(classes - 1) values.
Prediction decode(std::span<const ReplicaLabel> labels, int classes);

}  // namespace rejopt
