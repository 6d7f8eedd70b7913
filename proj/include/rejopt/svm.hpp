#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rejopt/kernel.hpp"
#include "rejopt/matrix.hpp"
#include "rejopt/replication.hpp"

namespace rejopt {

struct SvmParams {
    KernelSpec kernel;
    double C = 1.0;
    /// Stop once the maximal KKT violation m(a) - M(a) drops below tol.
    double tol = 1e-3;
    /// Iteration budget, in multiples of the row count.
    int max_passes = 1000;
    std::uint64_t seed = 0;
    /// Trailing coordinates fed to the kernel linearly (see Kernel).
    std::size_t linear_tail = 0;
    /// Record the dual objective after every accepted step (tests only; costs memory).
    bool record_objective = false;
};

struct SvmTrainInfo {
    std::size_t iterations = 0;
    bool converged = false;
    double dual_objective = 0.0;
    double max_violation = 0.0;
    std::vector<double> objective_trace;
};

/// Kernel expansion f(x) = sum_i coef_i k(sv_i, x) + bias, coef_i = alpha_i y_i.
class SvmModel {
public:
    SvmModel() = default;
    SvmModel(KernelSpec kernel, std::size_t linear_tail, double C, Matrix support, std::vector<double> coef,
             std::vector<double> alpha, std::vector<double> upper, std::vector<int> labels, double bias);

    [[nodiscard]] double decision(std::span<const double> x) const;

    [[nodiscard]] std::size_t dims() const noexcept { return dims_; }
    [[nodiscard]] double bias() const noexcept { return bias_; }
    [[nodiscard]] double C() const noexcept { return C_; }
    [[nodiscard]] const KernelSpec& kernel_spec() const noexcept { return kernel_.spec(); }
    [[nodiscard]] std::size_t linear_tail() const noexcept { return kernel_.linear_tail(); }
    [[nodiscard]] const Matrix& support() const noexcept { return support_; }
    [[nodiscard]] const std::vector<double>& coef() const noexcept { return coef_; }
    [[nodiscard]] const std::vector<double>& alpha() const noexcept { return alpha_; }
    /// Per-row box C * cost_i of the retained rows.
    [[nodiscard]] const std::vector<double>& upper() const noexcept { return upper_; }
    [[nodiscard]] const std::vector<int>& labels() const noexcept { return labels_; }

    /// Weight vector of the collapsed expansion. Defined when the kernel is linear,
    /// and for the linear tail under any kernel.
    [[nodiscard]] std::optional<std::vector<double>> linear_weights() const;
    [[nodiscard]] std::vector<double> tail_weights() const;

    const SvmTrainInfo& info() const noexcept { return info_; }
    void set_info(SvmTrainInfo info) { info_ = std::move(info); }

    void save(std::ostream& out) const;
    static SvmModel load(std::istream& in);

    friend bool operator==(const SvmModel& a, const SvmModel& b)
    {
        return a.kernel_.spec() == b.kernel_.spec() && a.kernel_.linear_tail() == b.kernel_.linear_tail() &&
               a.C_ == b.C_ && a.support_ == b.support_ && a.coef_ == b.coef_ && a.alpha_ == b.alpha_ &&
               a.upper_ == b.upper_ && a.labels_ == b.labels_ && a.bias_ == b.bias_;
    }

private:
    Kernel kernel_{KernelSpec{}};
    double C_ = 1.0;
    std::size_t dims_ = 0;
    Matrix support_;
    std::vector<double> coef_;
    std::vector<double> alpha_;
    std::vector<double> upper_;
    std::vector<int> labels_;
    double bias_ = 0.0;
    std::vector<double> collapsed_;  // w for linear kernels, empty otherwise
    SvmTrainInfo info_;
};

/// SMO with per-row box constraints 0 <= alpha_i <= C * cost_i.
SvmModel train_svm(const BinaryProblem& problem, const SvmParams& params);

/// Trains on the extended problem. The extension coordinates are passed to the
/// kernel linearly, so every replica shares one nonlinear function of x.
SvmModel train_svm(const ReplicatedDataset& data, const SvmParams& params);

double decision_value(const SvmModel& model, std::span<const double> extended);

/// Offsets b_q of the 2(K-1) induced boundaries in the original space:
/// b_1 = bias, b_q = bias + w_{p+q-1} h. Requires the extension to be linear in the model.
std::vector<double> induced_offsets(const SvmModel& model, double h, int classes);

/// Primal objective 1/2 |w|^2 + C sum cost_i max(0, 1 - y_i f(x_i)) of a linear model.
double primal_objective(const SvmModel& model, const BinaryProblem& problem);

}  // namespace rejopt
