#include "rejopt/svm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <list>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rejopt/rng.hpp"
#include "rejopt/serialize.hpp"

namespace rejopt {

SvmModel::SvmModel(KernelSpec kernel, std::size_t linear_tail, double C, Matrix support, std::vector<double> coef,
                   std::vector<double> alpha, std::vector<double> upper, std::vector<int> labels, double bias)
    : kernel_(kernel, linear_tail),
      C_(C),
      dims_(support.cols()),
      support_(std::move(support)),
      coef_(std::move(coef)),
      alpha_(std::move(alpha)),
      upper_(std::move(upper)),
      labels_(std::move(labels)),
      bias_(bias)
{
    require(coef_.size() == support_.rows() && alpha_.size() == coef_.size() && upper_.size() == coef_.size() &&
                labels_.size() == coef_.size(),
            "inconsistent SVM model arrays");
    require(linear_tail <= dims_ || support_.rows() == 0, "linear tail wider than the model");
    if (kernel_.is_linear() || kernel_.linear_tail() > 0) {
        collapsed_.assign(dims_, 0.0);
        for (std::size_t i = 0; i < support_.rows(); ++i) {
            const auto sv = support_.row(i);
            for (std::size_t c = 0; c < dims_; ++c) {
                collapsed_[c] += coef_[i] * sv[c];
            }
        }
    }
}

double SvmModel::decision(std::span<const double> x) const
{
    if (x.size() != dims_) {
        fail(ErrorCode::DimensionMismatch,
             "decision expects a vector of length " + std::to_string(dims_) + ", got " + std::to_string(x.size()));
    }
    if (kernel_.is_linear()) {
        return dot(collapsed_, x) + bias_;
    }
    const std::size_t tail = kernel_.linear_tail();
    const std::size_t head = dims_ - tail;
    const KernelSpec base = kernel_.spec();
    double value = bias_;
    const auto xh = x.first(head);
    for (std::size_t i = 0; i < support_.rows(); ++i) {
        const auto sv = support_.row(i).first(head);
        double d2 = 0.0;
        for (std::size_t c = 0; c < head; ++c) {
            const double d = sv[c] - xh[c];
            d2 += d * d;
        }
        value += coef_[i] * std::exp(-base.gamma * d2);
    }
    if (tail > 0) {
        value += dot(std::span<const double>(collapsed_).subspan(head), x.subspan(head));
    }
    return value;
}

std::optional<std::vector<double>> SvmModel::linear_weights() const
{
    if (!kernel_.is_linear()) {
        return std::nullopt;
    }
    return collapsed_;
}

std::vector<double> SvmModel::tail_weights() const
{
    const std::size_t tail = kernel_.is_linear() ? dims_ : kernel_.linear_tail();
    if (collapsed_.empty()) {
        return std::vector<double>(tail, 0.0);
    }
    return {collapsed_.end() - static_cast<std::ptrdiff_t>(tail), collapsed_.end()};
}

namespace {

/// Rows of Q_ij = y_i y_j k(x_i, x_j), computed on demand and kept in an LRU cache.
class QMatrix {
public:
    QMatrix(const BinaryProblem& problem, const Kernel& kernel, std::size_t budget_bytes)
        : problem_(problem), kernel_(kernel), rows_(problem.size()), where_(problem.size())
    {
        const std::size_t n = problem.size();
        capacity_ = std::max<std::size_t>(2, budget_bytes / (sizeof(double) * std::max<std::size_t>(n, 1)));
        diag_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto xi = problem.x.row(i);
            diag_[i] = kernel_(xi, xi);
            if (!std::isfinite(diag_[i])) {
                fail(ErrorCode::Training, "non-finite kernel value at row " + std::to_string(i));
            }
        }
    }

    const std::vector<double>& row(std::size_t i)
    {
        if (!rows_[i].empty()) {
            lru_.splice(lru_.begin(), lru_, where_[i]);
            return rows_[i];
        }
        if (lru_.size() >= capacity_) {
            const std::size_t victim = lru_.back();
            lru_.pop_back();
            rows_[victim].clear();
            rows_[victim].shrink_to_fit();
        }
        const std::size_t n = problem_.size();
        auto& r = rows_[i];
        r.resize(n);
        const auto xi = problem_.x.row(i);
        const double yi = problem_.y[i];
        for (std::size_t j = 0; j < n; ++j) {
            const double k = kernel_(xi, problem_.x.row(j));
            if (!std::isfinite(k)) {
                fail(ErrorCode::Training, "non-finite kernel value at rows " + std::to_string(i) + "," +
                                              std::to_string(j));
            }
            r[j] = yi * problem_.y[j] * k;
        }
        lru_.push_front(i);
        where_[i] = lru_.begin();
        return r;
    }

    [[nodiscard]] double diag(std::size_t i) const { return diag_[i]; }

private:
    const BinaryProblem& problem_;
    const Kernel& kernel_;
    std::vector<std::vector<double>> rows_;
    std::vector<std::list<std::size_t>::iterator> where_;
    std::list<std::size_t> lru_;
    std::vector<double> diag_;
    std::size_t capacity_ = 0;
};

constexpr double kTau = 1e-12;

}  // namespace

SvmModel train_svm(const BinaryProblem& problem, const SvmParams& params)
{
    require(params.C > 0.0 && std::isfinite(params.C), "SVM trade-off C must be positive");
    require(params.tol > 0.0, "SVM tolerance must be positive");
    require(params.max_passes >= 1, "SVM pass budget must be >= 1");
    const std::size_t n = problem.size();
    require(n > 0, "SVM training data is empty");
    require(problem.x.rows() == n && problem.cost.size() == n, "SVM problem arrays disagree in length");
    require(params.linear_tail <= problem.x.cols(), "linear tail wider than the data");

    std::vector<double> upper(n);
    bool has_pos = false;
    bool has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        require(problem.y[i] == 1 || problem.y[i] == -1, "SVM labels must be -1 or +1");
        require(problem.cost[i] >= 0.0 && std::isfinite(problem.cost[i]), "SVM costs must be finite and >= 0");
        upper[i] = params.C * problem.cost[i];
        if (upper[i] > 0.0) {
            (problem.y[i] > 0 ? has_pos : has_neg) = true;
        }
    }
    if (!has_pos || !has_neg) {
        fail(ErrorCode::Training, "SVM training data holds a single class");
    }

    const Kernel kernel(params.kernel, params.linear_tail);
    QMatrix Q(problem, kernel, std::size_t{256} << 20);
    const auto& y = problem.y;

    std::vector<double> alpha(n, 0.0);
    std::vector<double> G(n, -1.0);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(params.seed);
    rng.shuffle(order.begin(), order.end());

    auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < upper[t] : alpha[t] > 0.0; };
    auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < upper[t]; };
    auto dual_objective = [&] {
        double f = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            f += alpha[t] * (G[t] - 1.0);
        }
        return -0.5 * f;
    };

    SvmTrainInfo info;
    const std::size_t max_iter = static_cast<std::size_t>(params.max_passes) * std::max<std::size_t>(n, 100);
    while (true) {
        // Maximal violating pair; ties resolve toward the earlier index in `order`.
        double g_max = -std::numeric_limits<double>::infinity();
        double g_min = std::numeric_limits<double>::infinity();
        std::size_t i = n;
        std::size_t j = n;
        for (const std::size_t t : order) {
            const double v = -y[t] * G[t];
            if (in_up(t) && v > g_max) {
                g_max = v;
                i = t;
            }
            if (in_low(t) && v < g_min) {
                g_min = v;
                j = t;
            }
        }
        info.max_violation = (i == n || j == n) ? 0.0 : g_max - g_min;
        if (i == n || j == n || g_max - g_min < params.tol) {
            info.converged = true;
            break;
        }
        if (info.iterations >= max_iter) {
            break;
        }
        ++info.iterations;

        const auto& Qi = Q.row(i);
        const auto& Qj = Q.row(j);
        const double Ci = upper[i];
        const double Cj = upper[j];
        const double old_ai = alpha[i];
        const double old_aj = alpha[j];

        if (y[i] != y[j]) {
            double quad = Q.diag(i) + Q.diag(j) + 2.0 * Qi[j];
            if (quad <= 0.0) {
                quad = kTau;
            }
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > Ci - Cj) {
                if (alpha[i] > Ci) {
                    alpha[i] = Ci;
                    alpha[j] = Ci - diff;
                }
            } else if (alpha[j] > Cj) {
                alpha[j] = Cj;
                alpha[i] = Cj + diff;
            }
        } else {
            double quad = Q.diag(i) + Q.diag(j) - 2.0 * Qi[j];
            if (quad <= 0.0) {
                quad = kTau;
            }
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > Ci) {
                if (alpha[i] > Ci) {
                    alpha[i] = Ci;
                    alpha[j] = sum - Ci;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > Cj) {
                if (alpha[j] > Cj) {
                    alpha[j] = Cj;
                    alpha[i] = sum - Cj;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        const double dai = alpha[i] - old_ai;
        const double daj = alpha[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t) {
            G[t] += Qi[t] * dai + Qj[t] * daj;
        }
        if (params.record_objective) {
            info.objective_trace.push_back(dual_objective());
        }
    }
    info.dual_objective = dual_objective();

    // Offset from the free vectors, or the middle of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (upper[t] <= 0.0) {
            continue;
        }
        const double yG = y[t] * G[t];
        if (alpha[t] >= upper[t]) {
            if (y[t] < 0) {
                ub = std::min(ub, yG);
            } else {
                lb = std::max(lb, yG);
            }
        } else if (alpha[t] <= 0.0) {
            if (y[t] > 0) {
                ub = std::min(ub, yG);
            } else {
                lb = std::max(lb, yG);
            }
        } else {
            ++n_free;
            sum_free += yG;
        }
    }
    double rho = 0.0;
    if (n_free > 0) {
        rho = sum_free / static_cast<double>(n_free);
    } else if (std::isfinite(ub) && std::isfinite(lb)) {
        rho = 0.5 * (ub + lb);
    } else if (std::isfinite(ub)) {
        rho = ub;
    } else if (std::isfinite(lb)) {
        rho = lb;
    }

    Matrix support;
    std::vector<double> coef;
    std::vector<double> sv_alpha;
    std::vector<double> sv_upper;
    std::vector<int> sv_labels;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0) {
            support.append_row(problem.x.row(t));
            coef.push_back(alpha[t] * y[t]);
            sv_alpha.push_back(alpha[t]);
            sv_upper.push_back(upper[t]);
            sv_labels.push_back(y[t]);
        }
    }
    if (support.rows() == 0) {
        support = Matrix(0, problem.x.cols());
    }
    SvmModel model(params.kernel, params.linear_tail, params.C, std::move(support), std::move(coef),
                   std::move(sv_alpha), std::move(sv_upper), std::move(sv_labels), -rho);
    model.set_info(std::move(info));
    return model;
}

SvmModel train_svm(const ReplicatedDataset& data, const SvmParams& params)
{
    SvmParams p = params;
    p.linear_tail = data.extension_dims();
    return train_svm(data.problem, p);
}

double decision_value(const SvmModel& model, std::span<const double> extended)
{
    return model.decision(extended);
}

std::vector<double> induced_offsets(const SvmModel& model, double h, int classes)
{
    require(classes >= 2, "K must be >= 2");
    const auto ext = static_cast<std::size_t>(replica_count(classes) - 1);
    require(model.dims() > ext, "model is too narrow for " + std::to_string(classes) + " classes");
    if (model.kernel_spec().type != KernelType::Linear && model.linear_tail() < ext) {
        fail(ErrorCode::InvalidArgument,
             "induced offsets are undefined when the extension features pass through a nonlinear kernel");
    }
    const auto tail = model.tail_weights();
    std::vector<double> offsets(ext + 1);
    offsets[0] = model.bias();
    for (std::size_t m = 0; m < ext; ++m) {
        offsets[m + 1] = model.bias() + tail[tail.size() - ext + m] * h;
    }
    return offsets;
}

double primal_objective(const SvmModel& model, const BinaryProblem& problem)
{
    const auto w = model.linear_weights();
    require(w.has_value(), "primal objective needs a linear kernel");
    double obj = 0.5 * dot(*w, *w);
    for (std::size_t i = 0; i < problem.size(); ++i) {
        const double margin = problem.y[i] * model.decision(problem.x.row(i));
        obj += model.C() * problem.cost[i] * std::max(0.0, 1.0 - margin);
    }
    return obj;
}

void SvmModel::save(std::ostream& out) const
{
    out << "svm 1\n";
    out << "kernel " << (kernel_.is_linear() ? "linear" : "rbf") << ' ' << format_number(kernel_.spec().gamma)
        << '\n';
    out << "linear_tail " << kernel_.linear_tail() << '\n';
    out << "C " << format_number(C_) << '\n';
    out << "bias " << format_number(bias_) << '\n';
    out << "dims " << dims_ << '\n';
    out << "rows " << support_.rows() << '\n';
    for (std::size_t i = 0; i < support_.rows(); ++i) {
        out << format_number(alpha_[i]) << ' ' << format_number(upper_[i]) << ' ' << labels_[i];
        for (double v : support_.row(i)) {
            out << ' ' << format_number(v);
        }
        out << '\n';
    }
    out << "end svm\n";
}

SvmModel SvmModel::load(std::istream& in)
{
    TokenReader r(in, "svm model");
    r.expect("svm");
    r.expect_version(1);
    r.expect("kernel");
    const std::string kind = r.word();
    const double gamma = r.number();
    KernelSpec spec;
    if (kind == "linear") {
        spec = KernelSpec{KernelType::Linear, gamma};
    } else if (kind == "rbf") {
        spec = KernelSpec::rbf(gamma);
    } else {
        r.error("unknown kernel '" + kind + "'");
    }
    r.expect("linear_tail");
    const std::size_t tail = r.count();
    r.expect("C");
    const double C = r.number();
    r.expect("bias");
    const double bias = r.number();
    r.expect("dims");
    const std::size_t dims = r.count();
    r.expect("rows");
    const std::size_t rows = r.count();
    Matrix support(rows, dims);
    std::vector<double> coef(rows);
    std::vector<double> alpha(rows);
    std::vector<double> upper(rows);
    std::vector<int> labels(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        alpha[i] = r.number();
        upper[i] = r.number();
        labels[i] = r.integer();
        if (labels[i] != 1 && labels[i] != -1) {
            r.error("support label must be -1 or +1");
        }
        coef[i] = alpha[i] * labels[i];
        for (std::size_t c = 0; c < dims; ++c) {
            support(i, c) = r.number();
        }
    }
    r.expect("end");
    r.expect("svm");
    return SvmModel(spec, tail, C, std::move(support), std::move(coef), std::move(alpha), std::move(upper),
                    std::move(labels), bias);
}

}  // namespace rejopt
