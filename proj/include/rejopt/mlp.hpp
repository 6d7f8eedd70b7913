#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rejopt/replication.hpp"

namespace rejopt {

struct MlpParams {
    std::vector<std::size_t> hidden{8};
    double learning_rate = 0.1;
    int epochs = 200;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
};

/// Partially linear network over the extended space:
///   out(x, e) = G(x) + u^T e + bias
/// G is a tanh network on the original coordinates ending in one linear unit
/// (an affine map when there are no hidden layers). The extension coordinates
/// reach the output only through u.
class MlpModel {
public:
    MlpModel() = default;
    MlpModel(std::size_t original_dims, std::size_t extension_dims, std::vector<std::size_t> hidden);

    /// Fan-in scaled uniform weights; u and every bias start at zero.
    static MlpModel random(std::size_t original_dims, std::size_t extension_dims,
                           std::vector<std::size_t> hidden, std::uint64_t seed);

    [[nodiscard]] double decision(std::span<const double> extended) const;
    /// G(x) alone, without bias and extension term.
    [[nodiscard]] double network(std::span<const double> x) const;

    [[nodiscard]] std::size_t original_dims() const noexcept { return original_dims_; }
    [[nodiscard]] std::size_t extension_dims() const noexcept { return extension_dims_; }
    [[nodiscard]] std::size_t dims() const noexcept { return original_dims_ + extension_dims_; }
    [[nodiscard]] const std::vector<std::size_t>& hidden() const noexcept { return hidden_; }

    /// All trainable parameters, flattened. Layout: per hidden layer [W row-major | b],
    /// then the output weights of G, then u, then the output bias.
    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }
    [[nodiscard]] std::span<double> parameters() noexcept { return params_; }
    [[nodiscard]] std::span<const double> extension_weights() const;
    [[nodiscard]] double output_bias() const { return params_.back(); }

    /// Weighted logistic loss sum_i cost_i log(1 + exp(-y_i out_i)), accumulated
    /// over `rows`; adds its gradient into `grad` when it is non-empty.
    double loss_and_gradient(const BinaryProblem& problem, std::span<const std::size_t> rows,
                             std::span<double> grad) const;
    double loss(const BinaryProblem& problem) const;

    void save(std::ostream& out) const;
    static MlpModel load(std::istream& in);

    friend bool operator==(const MlpModel&, const MlpModel&) = default;

private:
    struct Layer {
        std::size_t in = 0;
        std::size_t out = 0;
        std::size_t offset = 0;  // W at offset, b at offset + in * out
        friend bool operator==(const Layer&, const Layer&) = default;
    };

    void build_layout();

    std::size_t original_dims_ = 0;
    std::size_t extension_dims_ = 0;
    std::vector<std::size_t> hidden_;
    std::vector<Layer> layers_;
    std::size_t extension_offset_ = 0;
    std::vector<double> params_;
};

struct MlpTrainInfo {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int best_epoch = 0;
};

/// Mini-batch gradient descent on the weighted logistic loss. Keeps the
/// parameters of the epoch with the lowest full training loss, so the
/// returned loss never exceeds the initial one.
MlpModel train_mlp(const ReplicatedDataset& data, const MlpParams& params, MlpTrainInfo* info = nullptr);

/// Maximum over all parameters of |analytic - numeric| / max(1, |analytic|, |numeric|),
/// central differences with step eps, on at most 20 evenly spaced rows.
double gradient_check(const MlpModel& model, const BinaryProblem& problem, double eps);

}  // namespace rejopt
