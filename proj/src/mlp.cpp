#include "rejopt/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "rejopt/rng.hpp"
#include "rejopt/serialize.hpp"

namespace rejopt {

MlpModel::MlpModel(std::size_t original_dims, std::size_t extension_dims, std::vector<std::size_t> hidden)
    : original_dims_(original_dims), extension_dims_(extension_dims), hidden_(std::move(hidden))
{
    require(original_dims_ >= 1, "network needs at least one input feature");
    for (std::size_t width : hidden_) {
        require(width >= 1, "hidden layers must have at least one unit");
    }
    build_layout();
}

void MlpModel::build_layout()
{
    layers_.clear();
    std::size_t offset = 0;
    std::size_t in = original_dims_;
    for (std::size_t width : hidden_) {
        layers_.push_back({in, width, offset});
        offset += in * width + width;
        in = width;
    }
    // Final linear unit of G, without its own bias.
    layers_.push_back({in, 1, offset});
    offset += in;
    extension_offset_ = offset;
    offset += extension_dims_ + 1;
    params_.assign(offset, 0.0);
}

MlpModel MlpModel::random(std::size_t original_dims, std::size_t extension_dims, std::vector<std::size_t> hidden,
                          std::uint64_t seed)
{
    MlpModel m(original_dims, extension_dims, std::move(hidden));
    Rng rng(seed);
    for (std::size_t l = 0; l < m.layers_.size(); ++l) {
        const auto& layer = m.layers_[l];
        const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (std::size_t k = 0; k < layer.in * layer.out; ++k) {
            m.params_[layer.offset + k] = rng.uniform(-scale, scale);
        }
    }
    return m;
}

std::span<const double> MlpModel::extension_weights() const
{
    return std::span<const double>(params_).subspan(extension_offset_, extension_dims_);
}

namespace {

double log1p_exp_neg(double margin)
{
    // log(1 + exp(-margin)) without overflow
    return margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

}  // namespace

double MlpModel::network(std::span<const double> x) const
{
    require(x.size() == original_dims_, "network input has the wrong length");
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        next.assign(layer.out, 0.0);
        const double* W = params_.data() + layer.offset;
        const double* b = W + layer.in * layer.out;
        for (std::size_t o = 0; o < layer.out; ++o) {
            double z = b[o];
            for (std::size_t i = 0; i < layer.in; ++i) {
                z += W[o * layer.in + i] * a[i];
            }
            next[o] = std::tanh(z);
        }
        a.swap(next);
    }
    const auto& last = layers_.back();
    return dot(std::span<const double>(params_).subspan(last.offset, last.in), a);
}

double MlpModel::decision(std::span<const double> extended) const
{
    if (extended.size() != dims()) {
        fail(ErrorCode::DimensionMismatch, "network expects a vector of length " + std::to_string(dims()) +
                                               ", got " + std::to_string(extended.size()));
    }
    return network(extended.first(original_dims_)) + dot(extension_weights(), extended.subspan(original_dims_)) +
           output_bias();
}

double MlpModel::loss_and_gradient(const BinaryProblem& problem, std::span<const std::size_t> rows,
                                   std::span<double> grad) const
{
    require(problem.x.cols() == dims(), "training rows do not match the network width");
    const bool want_grad = !grad.empty();
    if (want_grad) {
        require(grad.size() == params_.size(), "gradient buffer has the wrong length");
    }
    const std::size_t depth = layers_.size() - 1;  // hidden layers
    std::vector<std::vector<double>> acts(depth + 1);
    std::vector<double> delta;
    std::vector<double> prev_delta;
    double total = 0.0;

    for (const std::size_t r : rows) {
        const auto xr = problem.x.row(r);
        acts[0].assign(xr.begin(), xr.begin() + static_cast<std::ptrdiff_t>(original_dims_));
        for (std::size_t l = 0; l < depth; ++l) {
            const auto& layer = layers_[l];
            const double* W = params_.data() + layer.offset;
            const double* b = W + layer.in * layer.out;
            auto& out = acts[l + 1];
            out.assign(layer.out, 0.0);
            for (std::size_t o = 0; o < layer.out; ++o) {
                double z = b[o];
                for (std::size_t i = 0; i < layer.in; ++i) {
                    z += W[o * layer.in + i] * acts[l][i];
                }
                out[o] = std::tanh(z);
            }
        }
        const auto& last = layers_.back();
        const auto v = std::span<const double>(params_).subspan(last.offset, last.in);
        const auto ext = xr.subspan(original_dims_);
        const double out = dot(v, acts[depth]) + dot(extension_weights(), ext) + output_bias();
        const double y = problem.y[r];
        const double cost = problem.cost[r];
        total += cost * log1p_exp_neg(y * out);
        if (!want_grad || cost == 0.0) {
            continue;
        }

        // d/d out of cost * log(1 + exp(-y out))
        const double g = -cost * y / (1.0 + std::exp(y * out));
        grad.back() += g;
        for (std::size_t m = 0; m < extension_dims_; ++m) {
            grad[extension_offset_ + m] += g * ext[m];
        }
        for (std::size_t i = 0; i < last.in; ++i) {
            grad[last.offset + i] += g * acts[depth][i];
        }
        delta.assign(last.in, 0.0);
        for (std::size_t i = 0; i < last.in; ++i) {
            delta[i] = g * v[i];
        }
        for (std::size_t l = depth; l-- > 0;) {
            const auto& layer = layers_[l];
            const double* W = params_.data() + layer.offset;
            const std::size_t b_off = layer.offset + layer.in * layer.out;
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double a = acts[l + 1][o];
                delta[o] *= 1.0 - a * a;
            }
            prev_delta.assign(layer.in, 0.0);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = delta[o];
                grad[b_off + o] += d;
                for (std::size_t i = 0; i < layer.in; ++i) {
                    grad[layer.offset + o * layer.in + i] += d * acts[l][i];
                    prev_delta[i] += W[o * layer.in + i] * d;
                }
            }
            delta.swap(prev_delta);
        }
    }
    return total;
}

double MlpModel::loss(const BinaryProblem& problem) const
{
    std::vector<std::size_t> rows(problem.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return loss_and_gradient(problem, rows, {});
}

MlpModel train_mlp(const ReplicatedDataset& data, const MlpParams& params, MlpTrainInfo* info)
{
    require(params.learning_rate > 0.0 && std::isfinite(params.learning_rate), "learning rate must be positive");
    require(params.epochs >= 1, "epochs must be >= 1");
    require(params.batch_size >= 1, "batch size must be >= 1");
    require(data.size() > 0, "network training data is empty");
    const auto& problem = data.problem;

    MlpModel model =
        MlpModel::random(data.original_dims, data.extension_dims(), params.hidden, derive_seed(params.seed, 0));
    Rng rng(derive_seed(params.seed, 1));

    std::vector<std::size_t> order(problem.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(model.parameters().size());

    const double initial = model.loss(problem);
    if (!std::isfinite(initial)) {
        fail(ErrorCode::Training, "network loss is not finite at epoch 0");
    }
    double best_loss = initial;
    int best_epoch = 0;
    std::vector<double> best(model.parameters().begin(), model.parameters().end());

    for (int epoch = 1; epoch <= params.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
            const std::size_t len = std::min(params.batch_size, order.size() - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            model.loss_and_gradient(problem, std::span<const std::size_t>(order).subspan(start, len), grad);
            const double step = params.learning_rate / static_cast<double>(len);
            auto w = model.parameters();
            for (std::size_t k = 0; k < w.size(); ++k) {
                w[k] -= step * grad[k];
            }
        }
        const double current = model.loss(problem);
        if (!std::isfinite(current)) {
            fail(ErrorCode::Training, "network loss diverged at epoch " + std::to_string(epoch));
        }
        if (current < best_loss) {
            best_loss = current;
            best_epoch = epoch;
            std::copy(model.parameters().begin(), model.parameters().end(), best.begin());
        }
    }
    std::copy(best.begin(), best.end(), model.parameters().begin());
    if (info != nullptr) {
        *info = {initial, best_loss, best_epoch};
    }
    return model;
}

double gradient_check(const MlpModel& model, const BinaryProblem& problem, double eps)
{
    require(eps >= 1e-7 && eps <= 1e-3, "finite-difference step must lie in [1e-7, 1e-3]");
    require(problem.size() > 0, "gradient check needs at least one row");
    const std::size_t m = std::min<std::size_t>(20, problem.size());
    std::vector<std::size_t> rows(m);
    for (std::size_t i = 0; i < m; ++i) {
        rows[i] = i * problem.size() / m;
    }
    std::vector<double> analytic(model.parameters().size(), 0.0);
    model.loss_and_gradient(problem, rows, analytic);

    MlpModel probe = model;
    auto w = probe.parameters();
    double worst = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double saved = w[k];
        w[k] = saved + eps;
        const double plus = probe.loss_and_gradient(problem, rows, {});
        w[k] = saved - eps;
        const double minus = probe.loss_and_gradient(problem, rows, {});
        w[k] = saved;
        const double numeric = (plus - minus) / (2.0 * eps);
        const double denom = std::max({1.0, std::abs(analytic[k]), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
    }
    return worst;
}

void MlpModel::save(std::ostream& out) const
{
    out << "mlp 1\n";
    out << "original_dims " << original_dims_ << '\n';
    out << "extension_dims " << extension_dims_ << '\n';
    out << "hidden " << hidden_.size();
    for (std::size_t width : hidden_) {
        out << ' ' << width;
    }
    out << '\n';
    out << "params " << params_.size() << '\n';
    for (std::size_t k = 0; k < params_.size(); ++k) {
        out << format_number(params_[k]) << (k + 1 == params_.size() ? '\n' : ' ');
    }
    out << "end mlp\n";
}

MlpModel MlpModel::load(std::istream& in)
{
    TokenReader r(in, "mlp model");
    r.expect("mlp");
    r.expect_version(1);
    r.expect("original_dims");
    const std::size_t p = r.count();
    r.expect("extension_dims");
    const std::size_t e = r.count();
    r.expect("hidden");
    std::vector<std::size_t> hidden(r.count());
    for (auto& width : hidden) {
        width = r.count();
    }
    MlpModel m(p, e, std::move(hidden));
    r.expect("params");
    if (r.count() != m.params_.size()) {
        r.error("parameter count does not match the layer shapes");
    }
    for (double& v : m.params_) {
        v = r.number();
    }
    r.expect("end");
    r.expect("mlp");
    return m;
}

}  // namespace rejopt
