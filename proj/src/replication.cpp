#include "rejopt/replication.hpp"

#include <algorithm>
#include <cmath>

namespace rejopt {

CostScheme cost_pair(double w_r)
{
    require(std::isfinite(w_r) && w_r >= 0.0, "w_r must be >= 0");
    require(w_r < 0.5, "w_r must be < 0.5; above it guessing randomly beats rejecting");
    return {w_r, 1.0 - w_r};
}

int replica_label(int k, int q)
{
    const int j = (q + 1) / 2;
    return k <= j ? -1 : +1;
}

bool replica_low_cost(int k, int q)
{
    const int j = (q + 1) / 2;
    return (q % 2 == 1) ? k == j : k == j + 1;
}

void extend_point_into(std::span<const double> x, int q, double h, int classes, std::span<double> out)
{
    const int replicas = replica_count(classes);
    require(q >= 1 && q <= replicas, "replica index " + std::to_string(q) + " outside 1.." + std::to_string(replicas));
    const std::size_t p = x.size();
    require(out.size() == p + static_cast<std::size_t>(replicas - 1), "extended buffer has the wrong length");
    std::copy(x.begin(), x.end(), out.begin());
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(p), out.end(), 0.0);
    if (q >= 2) {
        out[p + static_cast<std::size_t>(q) - 2] = h;
    }
}

std::vector<double> extend_point(std::span<const double> x, int q, double h, int classes)
{
    require(classes >= 2, "K must be >= 2");
    std::vector<double> out(x.size() + static_cast<std::size_t>(replica_count(classes) - 1));
    extend_point_into(x, q, h, classes, out);
    return out;
}

ReplicatedDataset replicate(const LabeledDataset& data, double h, const CostScheme& costs)
{
    require(h > 0.0 && std::isfinite(h), "h must be positive");
    require(data.classes() >= 2, "K must be >= 2");
    const int K = data.classes();
    const int replicas = replica_count(K);
    const std::size_t p = data.dims();
    const std::size_t ell = data.size();

    ReplicatedDataset out;
    out.original_dims = p;
    out.classes = K;
    out.h = h;
    const std::size_t rows = static_cast<std::size_t>(replicas) * ell;
    out.problem.x = Matrix(rows, p + static_cast<std::size_t>(replicas - 1));
    out.problem.y.resize(rows);
    out.problem.cost.resize(rows);
    out.replica.resize(rows);
    out.origin.resize(rows);

    std::size_t r = 0;
    for (int q = 1; q <= replicas; ++q) {
        for (std::size_t i = 0; i < ell; ++i, ++r) {
            const int k = data.y(i);
            extend_point_into(data.x(i), q, h, K, out.problem.x.row(r));
            out.problem.y[r] = replica_label(k, q);
            out.problem.cost[r] = replica_low_cost(k, q) ? costs.low : costs.high;
            out.replica[r] = q;
            out.origin[r] = i;
        }
    }
    return out;
}

ReplicatedDataset replicate(const LabeledDataset& data, double h, double w_r)
{
    return replicate(data, h, cost_pair(w_r));
}

BinaryProblem replica_problem(const LabeledDataset& data, int q, const CostScheme& costs)
{
    const int replicas = replica_count(data.classes());
    require(q >= 1 && q <= replicas, "replica index " + std::to_string(q) + " outside 1.." + std::to_string(replicas));
    BinaryProblem out;
    out.x = data.features();
    out.y.resize(data.size());
    out.cost.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.y[i] = replica_label(data.y(i), q);
        out.cost[i] = replica_low_cost(data.y(i), q) ? costs.low : costs.high;
    }
    return out;
}

Prediction decode(std::span<const ReplicaLabel> labels, int classes)
{
    require(classes >= 2, "K must be >= 2");
    const auto expected = static_cast<std::size_t>(replica_count(classes));
    require(labels.size() == expected, "decode expects " + std::to_string(expected) + " replica labels, got " +
                                           std::to_string(labels.size()));
    const auto upper = static_cast<int>(std::count(labels.begin(), labels.end(), ReplicaLabel::Upper));
    // Consistent sequences are a run of Upper followed by a run of Lower.
    const auto first_lower = std::find(labels.begin(), labels.end(), ReplicaLabel::Lower);
    const bool non_monotone = std::find(first_lower, labels.end(), ReplicaLabel::Upper) != labels.end();

    Prediction p = upper % 2 == 0 ? Prediction::of_class(upper / 2 + 1) : Prediction::reject((upper + 1) / 2);
    p.non_monotone = non_monotone;
    return p;
}

}  // namespace rejopt
