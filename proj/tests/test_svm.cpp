#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rejopt/error.hpp"
#include "rejopt/kernel.hpp"
#include "rejopt/reject_model.hpp"
#include "rejopt/replication.hpp"
#include "rejopt/rng.hpp"
#include "rejopt/svm.hpp"
#include "rejopt/synthetic.hpp"

using namespace rejopt;

namespace {

BinaryProblem two_points(double cost_neg, double cost_pos)
{
    return {Matrix(2, 1, {-1.0, 1.0}), {-1, 1}, {cost_neg, cost_pos}};
}

SvmParams linear_params(double C)
{
    SvmParams p;
    p.kernel = KernelSpec::linear();
    p.C = C;
    p.tol = 1e-6;
    return p;
}

double hinge_primal_1d(double w, double b, const BinaryProblem& prob, double C)
{
    double s = 0.5 * w * w;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        s += C * prob.cost[i] * std::max(0.0, 1.0 - prob.y[i] * (w * prob.x(i, 0) + b));
    }
    return s;
}

// Decision value recomputed from the stored expansion with a kernel written here.
double recompute(const SvmModel& m, std::span<const double> x)
{
    const std::size_t tail = m.linear_tail();
    double f = m.bias();
    for (std::size_t i = 0; i < m.support().rows(); ++i) {
        const auto sv = m.support().row(i);
        double k = 0.0;
        if (m.kernel_spec().type == KernelType::Linear) {
            for (std::size_t c = 0; c < x.size(); ++c) {
                k += sv[c] * x[c];
            }
        } else {
            double d2 = 0.0;
            for (std::size_t c = 0; c + tail < x.size(); ++c) {
                d2 += (sv[c] - x[c]) * (sv[c] - x[c]);
            }
            k = std::exp(-m.kernel_spec().gamma * d2);
            for (std::size_t c = x.size() - tail; c < x.size(); ++c) {
                k += sv[c] * x[c];
            }
        }
        f += m.coef()[i] * k;
    }
    return f;
}

void expect_dual_feasible(const SvmModel& m)
{
    double balance = 0.0;
    for (std::size_t i = 0; i < m.alpha().size(); ++i) {
        EXPECT_GE(m.alpha()[i], 0.0);
        EXPECT_LE(m.alpha()[i], m.upper()[i] * (1 + 1e-12));
        EXPECT_DOUBLE_EQ(m.coef()[i], m.alpha()[i] * m.labels()[i]);
        balance += m.alpha()[i] * m.labels()[i];
    }
    EXPECT_NEAR(balance, 0.0, 1e-6);
}

void expect_free_margins(const SvmModel& m, double tol)
{
    for (std::size_t i = 0; i < m.alpha().size(); ++i) {
        const double a = m.alpha()[i];
        if (a > 1e-8 * m.upper()[i] && a < m.upper()[i] * (1 - 1e-8)) {
            EXPECT_NEAR(m.labels()[i] * m.decision(m.support().row(i)), 1.0, tol) << "support row " << i;
        }
    }
}

}  // namespace

TEST(Kernel, RbfProperties)
{
    const Kernel k(KernelSpec::rbf(0.7));
    Rng rng(2);
    std::vector<std::vector<double>> pts(12, std::vector<double>(3));
    for (auto& p : pts) {
        for (auto& v : p) {
            v = rng.normal();
        }
    }
    for (const auto& a : pts) {
        EXPECT_DOUBLE_EQ(k(a, a), 1.0);
        for (const auto& b : pts) {
            EXPECT_DOUBLE_EQ(k(a, b), k(b, a));
        }
    }
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(pts.size());
        for (auto& c : v) {
            c = rng.normal();
        }
        double quad = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            for (std::size_t j = 0; j < pts.size(); ++j) {
                quad += v[i] * v[j] * k(pts[i], pts[j]);
            }
        }
        EXPECT_GE(quad, -1e-9);
    }
    EXPECT_THROW(Kernel(KernelSpec::rbf(0.0)), Error);
    EXPECT_THROW(Kernel(KernelSpec::rbf(-1.0)), Error);
}

TEST(Kernel, TailEntersLinearly)
{
    const Kernel k(KernelSpec::rbf(1.0), 2);
    const std::vector<double> a{0.3, 1.0, 2.0}, b{0.3, 3.0, -1.0};
    EXPECT_DOUBLE_EQ(k(a, b), 1.0 + 3.0 - 2.0);
}

TEST(Svm, TwoPointMaxMargin)
{
    const auto model = train_svm(two_points(1.0, 1.0), linear_params(1e6));
    const auto w = model.linear_weights();
    ASSERT_TRUE(w.has_value());
    EXPECT_NEAR((*w)[0], 1.0, 1e-6);
    EXPECT_NEAR(model.bias(), 0.0, 1e-6);
    EXPECT_TRUE(model.info().converged);
}

TEST(Svm, WeightedTwoPointMatchesGridOracle)
{
    const double C = 1.0;
    const auto prob = two_points(0.9, 0.1);
    const auto model = train_svm(prob, linear_params(C));
    const double w = (*model.linear_weights())[0];
    const double b = model.bias();

    double best = std::numeric_limits<double>::infinity(), best_w = 0, best_b = 0;
    for (int i = 0; i <= 2000; ++i) {
        for (int j = 0; j <= 4000; ++j) {
            const double gw = i * 1e-3, gb = -2.0 + j * 1e-3;
            const double v = hinge_primal_1d(gw, gb, prob, C);
            if (v < best) {
                best = v;
                best_w = gw;
                best_b = gb;
            }
        }
    }
    EXPECT_NEAR(w, best_w, 2e-3);
    EXPECT_NEAR(b, best_b, 2e-3);
    EXPECT_LE(primal_objective(model, prob), best + 1e-6);
    // Equal costs put the boundary at 0; cheap positives push it toward the positive side.
    const auto equal = train_svm(two_points(0.5, 0.5), linear_params(C));
    const double equal_boundary = -equal.bias() / (*equal.linear_weights())[0];
    EXPECT_NEAR(equal_boundary, 0.0, 1e-9);
    EXPECT_GT(-b / w, equal_boundary + 0.5);
}

TEST(Svm, XorWithRbf)
{
    const BinaryProblem prob{Matrix(4, 2, {1, 1, -1, -1, 1, -1, -1, 1}), {1, 1, -1, -1}, {1, 1, 1, 1}};
    SvmParams p;
    p.kernel = KernelSpec::rbf(1.0);
    p.C = 1e3;
    const auto model = train_svm(prob, p);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(model.decision(prob.x.row(i)) >= 0 ? 1 : -1, prob.y[i]);
    }
    EXPECT_FALSE(model.linear_weights().has_value());
    expect_dual_feasible(model);
    expect_free_margins(model, 1e-3);
}

TEST(Svm, DualFeasibilityAndMarginsOnReplicatedData)
{
    const auto data = generate_synthetic_i(120, 3);
    for (const auto kernel : {KernelSpec::linear(), KernelSpec::rbf(2.0)}) {
        for (double w_r : {0.04, 0.2, 0.44}) {
            SvmParams p;
            p.kernel = kernel;
            p.C = 10.0;
            const auto model = train_svm(replicate(data, 1.0, w_r), p);
            EXPECT_TRUE(model.info().converged);
            expect_dual_feasible(model);
            expect_free_margins(model, 1e-3);
        }
    }
}

TEST(Svm, DualObjectiveNeverDecreases)
{
    const auto data = generate_synthetic_ii(100, 4);
    SvmParams p;
    p.kernel = KernelSpec::rbf(0.5);
    p.C = 5.0;
    p.record_objective = true;
    const auto model = train_svm(replicate(data, 1.0, 0.2), p);
    const auto& trace = model.info().objective_trace;
    ASSERT_GT(trace.size(), 10u);
    for (std::size_t i = 1; i < trace.size(); ++i) {
        EXPECT_GE(trace[i], trace[i - 1] - 1e-9 * std::max(1.0, std::abs(trace[i])));
    }
    EXPECT_NEAR(trace.back(), model.info().dual_objective, 1e-9 * std::abs(trace.back()));
}

TEST(Svm, StrongDualityForLinearModels)
{
    const auto data = generate_synthetic_ii(80, 9);
    const auto rep = replicate(data, 1.0, 0.3);
    auto p = linear_params(0.5);
    p.linear_tail = rep.extension_dims();
    const auto model = train_svm(rep.problem, p);
    const double primal = primal_objective(model, rep.problem);
    const double dual = model.info().dual_objective;
    EXPECT_LE(dual, primal + 1e-6);
    EXPECT_NEAR(primal, dual, 1e-3 * std::max(1.0, std::abs(primal)));
}

TEST(Svm, DeterministicForFixedSeed)
{
    const auto data = generate_synthetic_i(100, 5);
    SvmParams p;
    p.kernel = KernelSpec::rbf(2.0);
    p.seed = 17;
    const auto a = train_svm(replicate(data, 1.0, 0.2), p);
    const auto b = train_svm(replicate(data, 1.0, 0.2), p);
    EXPECT_EQ(a, b);
}

TEST(Svm, DecisionMatchesExpansionOracle)
{
    const auto data = generate_synthetic_i(150, 6);
    SvmParams p;
    p.kernel = KernelSpec::rbf(3.0);
    p.C = 10.0;
    const auto rep = replicate(data, 1.0, 0.2);
    const auto model = train_svm(rep, p);
    for (std::size_t i = 0; i < rep.size(); i += 7) {
        const auto x = rep.problem.x.row(i);
        EXPECT_NEAR(decision_value(model, x), recompute(model, x), 1e-9);
    }
}

TEST(Svm, LinearDecisionIsAffine)
{
    const auto data = generate_synthetic_ii(60, 2);
    const auto model = train_svm(replicate(data, 1.0, 0.2), linear_params(1.0));
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> a(3), b(3), mid(3);
        for (std::size_t c = 0; c < 3; ++c) {
            a[c] = 5 * rng.normal();
            b[c] = 5 * rng.normal();
            mid[c] = 0.5 * (a[c] + b[c]);
        }
        EXPECT_NEAR(model.decision(mid), 0.5 * (model.decision(a) + model.decision(b)), 1e-9);
    }
}

TEST(Svm, ReplicaDifferencesAreConstantAndMatchOffsets)
{
    const auto data = generate_synthetic_iv(90, 8);
    for (const auto kernel : {KernelSpec::linear(), KernelSpec::rbf(0.5)}) {
        SvmParams p;
        p.kernel = kernel;
        const double h = 1.5;
        const auto model = train_svm(replicate(data, h, 0.2), p);
        const auto offsets = induced_offsets(model, h, 3);
        ASSERT_EQ(offsets.size(), 4u);
        EXPECT_DOUBLE_EQ(offsets[0], model.bias());
        Rng rng(10);
        for (int t = 0; t < 100; ++t) {
            const std::vector<double> x{8 * rng.normal(), 8 * rng.normal()};
            const double base = decision_value(model, extend_point(x, 1, h, 3));
            for (int q = 2; q <= 4; ++q) {
                const double diff = decision_value(model, extend_point(x, q, h, 3)) - base;
                EXPECT_NEAR(diff, offsets[static_cast<std::size_t>(q - 1)] - offsets[0], 1e-9);
            }
        }
    }
}

TEST(Svm, OffsetsNeedALinearExtension)
{
    const auto data = generate_synthetic_ii(40, 1);
    SvmParams p;
    p.kernel = KernelSpec::rbf(1.0);
    // Kernel applied to the whole extended vector: offsets are not defined.
    const auto rep = replicate(data, 1.0, 0.2);
    const auto full = train_svm(rep.problem, p);
    EXPECT_THROW(induced_offsets(full, 1.0, 2), Error);
    // Linear models always have offsets, even without a declared tail.
    const auto lin = train_svm(rep.problem, linear_params(1.0));
    const auto off = induced_offsets(lin, 1.0, 2);
    EXPECT_NEAR(off[1] - off[0], (*lin.linear_weights())[2], 1e-12);
}

TEST(Svm, ZeroExtensionWeightCollapsesTheBand)
{
    // A model with no weight on the extension coordinate has b_2 = b_1.
    const SvmModel m(KernelSpec::linear(), 1, 1.0, Matrix(1, 2, {1.0, 0.0}), {1.0}, {1.0}, {1.0}, {1}, 0.25);
    const auto off = induced_offsets(m, 1.0, 2);
    EXPECT_DOUBLE_EQ(off[0], off[1]);
}

TEST(Svm, ParallelBoundariesShareTheGradient)
{
    const auto data = generate_synthetic_i(120, 12);
    SvmParams p;
    p.kernel = KernelSpec::rbf(4.0);
    const auto model = train_svm(replicate(data, 1.0, 0.15), p);
    Rng rng(1);
    for (int t = 0; t < 30; ++t) {
        const std::vector<double> x{rng.uniform(), rng.uniform()};
        for (std::size_t c = 0; c < 2; ++c) {
            auto xp = x, xm = x;
            xp[c] += 1e-5;
            xm[c] -= 1e-5;
            const auto grad = [&](int q) {
                return (decision_value(model, extend_point(xp, q, 1.0, 2)) -
                        decision_value(model, extend_point(xm, q, 1.0, 2))) / 2e-5;
            };
            EXPECT_NEAR(grad(1), grad(2), 1e-6);
        }
    }
}

TEST(Svm, ErrorsOnBadInput)
{
    const BinaryProblem single{Matrix(2, 1, {0.0, 1.0}), {1, 1}, {1, 1}};
    try {
        train_svm(single, linear_params(1.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Training);
    }
    EXPECT_THROW(train_svm(two_points(1, 1), linear_params(0.0)), Error);
    const BinaryProblem huge{Matrix(2, 1, {-1e200, 1e200}), {-1, 1}, {1, 1}};
    try {
        train_svm(huge, linear_params(1.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Training);
    }
    const auto model = train_svm(two_points(1, 1), linear_params(1.0));
    const std::vector<double> wrong{1.0, 2.0};
    try {
        decision_value(model, wrong);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(Svm, SaveLoadRoundTrip)
{
    const auto data = generate_synthetic_i(80, 13);
    SvmParams p;
    p.kernel = KernelSpec::rbf(2.0);
    const auto model = train_svm(replicate(data, 1.0, 0.2), p);
    std::stringstream buf;
    model.save(buf);
    const auto loaded = SvmModel::load(buf);
    EXPECT_EQ(model, loaded);
    const std::vector<double> x{0.3, 0.8, 1.0};
    EXPECT_EQ(model.decision(x), loaded.decision(x));

    std::stringstream broken("svm 9\n");
    EXPECT_THROW(SvmModel::load(broken), Error);
}

TEST(RejectModel, ConstructedLinearBoundaries)
{
    // f(x, e) = x1 - e: replica 1 crosses at x1 = 0, replica 2 at x1 = 1.
    const SvmModel svm(KernelSpec::linear(), 1, 1.0, Matrix(1, 2, {1.0, -1.0}), {1.0}, {1.0}, {10.0}, {1}, 0.0);
    const RejectModel model{svm, 1, 2, 1.0};
    EXPECT_EQ(predict(model, std::vector<double>{-1.0}), Prediction::of_class(1));
    EXPECT_EQ(predict(model, std::vector<double>{0.5}), Prediction::reject(1));
    EXPECT_EQ(predict(model, std::vector<double>{2.0}), Prediction::of_class(2));
    EXPECT_EQ(predict(model, std::vector<double>{0.0}), Prediction::reject(1));
    EXPECT_THROW(predict(model, std::vector<double>{1.0, 2.0}), Error);
}

TEST(RejectModel, AgreeingReplicasNeverReject)
{
    const SvmModel svm(KernelSpec::linear(), 1, 1.0, Matrix(1, 2, {1.0, 0.0}), {1.0}, {1.0}, {10.0}, {1}, 0.0);
    const RejectModel model{svm, 1, 2, 1.0};
    for (double x = -3; x <= 3; x += 0.01) {
        EXPECT_FALSE(predict(model, std::vector<double>{x}).rejected());
    }
}

TEST(RejectModel, PredictionsMatchRecomputedSigns)
{
    const auto data = generate_synthetic_i(200, 14);
    SvmParams p;
    p.kernel = KernelSpec::rbf(4.0);
    p.C = 10.0;
    const auto model = train_reject_svm(data, 0.2, p);
    const auto& svm = std::get<SvmModel>(model.scorer);
    const auto test = generate_synthetic_i(300, 15);
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double f1 = recompute(svm, extend_point(test.x(i), 1, 1.0, 2));
        const double f2 = recompute(svm, extend_point(test.x(i), 2, 1.0, 2));
        const int uppers = (f1 >= 0) + (f2 >= 0);
        const auto pred = predict(model, test.x(i));
        if (uppers == 1) {
            EXPECT_TRUE(pred.rejected());
        } else {
            EXPECT_EQ(pred, Prediction::of_class(uppers / 2 + 1));
        }
    }
}

TEST(RejectModel, ThresholdOrderHoldsOnRandomPoints)
{
    struct Case {
        LabeledDataset train;
        LabeledDataset test;
        std::vector<double> weights;
    };
    // With two classes the order holds for every w_r. With more classes replica 1
    // anchors the shared bias for all boundaries, and near w_r = 0.5 the hinge
    // optimum can invert a pair, so only moderate weights are checked there.
    const std::vector<Case> cases{
        {generate_synthetic_i(150, 21), generate_synthetic_i(1000, 22), {0.04, 0.24, 0.36, 0.48}},
        {generate_synthetic_ii(150, 23), generate_synthetic_ii(1000, 24), {0.04, 0.24, 0.36, 0.48}},
        {generate_synthetic_iv(150, 16), generate_synthetic_iv(999, 17), {0.04, 0.12, 0.24}},
    };
    for (const auto& c : cases) {
        for (const auto kernel : {KernelSpec::linear(), KernelSpec::rbf(0.5)}) {
            for (double w_r : c.weights) {
                SvmParams p;
                p.kernel = kernel;
                const auto model = train_reject_svm(c.train, w_r, p);
                for (std::size_t i = 0; i < c.test.size(); ++i) {
                    ASSERT_FALSE(predict(model, c.test.x(i)).non_monotone)
                        << "K " << c.train.classes() << " w_r " << w_r;
                }
            }
        }
    }
}

TEST(RejectModel, DecodeIsMonotoneAlongRays)
{
    const auto data = generate_synthetic_iv(150, 18);
    SvmParams p;
    p.kernel = KernelSpec::linear();
    const auto model = train_reject_svm(data, 0.2, p);
    const auto& svm = std::get<SvmModel>(model.scorer);
    const auto w = *svm.linear_weights();
    Rng rng(19);
    for (int ray = 0; ray < 20; ++ray) {
        const std::vector<double> start{rng.uniform(-20, 20), rng.uniform(-20, 20)};
        // Walk in the direction of increasing decision value.
        const double norm = std::hypot(w[0], w[1]);
        double last = 0.0;
        for (int s = 0; s < 400; ++s) {
            const std::vector<double> x{start[0] + 0.1 * s * w[0] / norm, start[1] + 0.1 * s * w[1] / norm};
            const auto pred = predict(model, x);
            // Position on the ordinal axis: class k at 2k - 2, Reject(j) at 2j - 1.
            const double pos = pred.rejected() ? 2.0 * pred.index - 1 : 2.0 * pred.index - 2;
            EXPECT_GE(pos, last);
            last = pos;
        }
    }
}

TEST(RejectModel, SaveLoadRoundTrip)
{
    const auto data = generate_synthetic_iv(60, 20);
    SvmParams p;
    p.kernel = KernelSpec::rbf(0.5);
    const auto model = train_reject_svm(data, 0.2, p, 2.0);
    std::stringstream buf;
    save(model, buf);
    const auto loaded = load_reject_model(buf);
    EXPECT_EQ(loaded.classes, 3);
    EXPECT_EQ(loaded.h, 2.0);
    EXPECT_EQ(std::get<SvmModel>(loaded.scorer), std::get<SvmModel>(model.scorer));
    EXPECT_EQ(induced_offsets(loaded), induced_offsets(model));
}
