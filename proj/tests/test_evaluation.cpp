#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "rejopt/error.hpp"
#include "rejopt/evaluation.hpp"
#include "rejopt/rng.hpp"
#include "rejopt/synthetic.hpp"

using namespace rejopt;

namespace {

std::vector<Prediction> repeated(std::size_t n, Prediction p) { return std::vector<Prediction>(n, p); }

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.dataset.source = "synthetic-i";
    c.dataset.n = 120;
    c.settings.kernel = KernelType::Rbf;
    c.C_grid = {10.0};
    c.gamma_grid = {2.0};
    c.w_r_grid = {0.12, 0.36};
    c.repetitions = 3;
    c.seed = 17;
    c.folds = 3;
    c.fractions = {0.5};
    return c;
}

ExperimentConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in, "test.cfg");
}

std::string parse_error(const std::string& text)
{
    try {
        parse(text);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Parse) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return {};
}

}  // namespace

TEST(Evaluate, RiskOfAHandSet)
{
    // 10 points: 2 rejected, 1 wrong among the 8 accepted.
    std::vector<Prediction> preds;
    std::vector<int> truth;
    for (int i = 0; i < 10; ++i) {
        truth.push_back(1);
        if (i < 2) {
            preds.push_back(Prediction::reject(1));
        } else if (i < 3) {
            preds.push_back(Prediction::of_class(2));
        } else {
            preds.push_back(Prediction::of_class(1));
        }
    }
    const auto p = evaluate(preds, truth, 0.24);
    EXPECT_DOUBLE_EQ(p.reject_rate, 0.2);
    EXPECT_DOUBLE_EQ(p.error_rate, 0.1);
    EXPECT_NEAR(p.risk, 0.148, 1e-15);
    EXPECT_DOUBLE_EQ(p.acc_accepted, 7.0 / 8.0);
    EXPECT_EQ(p.ambiguity_rate, 0.0);
    EXPECT_DOUBLE_EQ(empirical_risk(preds, truth, 0.24), p.risk);
}

TEST(Evaluate, Extremes)
{
    const std::vector<int> truth{1, 2, 3, 2};
    const auto all_rejected = evaluate(repeated(4, Prediction::reject(2)), truth, 0.3);
    EXPECT_DOUBLE_EQ(all_rejected.risk, 0.3);
    EXPECT_EQ(all_rejected.acc_accepted, 1.0);
    EXPECT_EQ(all_rejected.error_rate, 0.0);

    const auto none_rejected = evaluate(repeated(4, Prediction::of_class(2)), truth, 0.3);
    EXPECT_EQ(none_rejected.reject_rate, 0.0);
    EXPECT_DOUBLE_EQ(none_rejected.risk, 0.5);
    EXPECT_DOUBLE_EQ(none_rejected.risk, none_rejected.error_rate);

    auto flagged = repeated(4, Prediction::reject(1));
    flagged[0].non_monotone = true;
    EXPECT_DOUBLE_EQ(evaluate(flagged, truth, 0.1).ambiguity_rate, 0.25);

    EXPECT_THROW(evaluate(repeated(3, Prediction::of_class(1)), truth, 0.1), Error);
    EXPECT_THROW(evaluate({}, {}, 0.1), Error);
}

TEST(Evaluate, IdentitiesOnRandomPredictions)
{
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const int K = 2 + static_cast<int>(rng.uniform() * 4);
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 60);
        std::vector<Prediction> preds;
        std::vector<int> truth;
        for (std::size_t i = 0; i < n; ++i) {
            truth.push_back(1 + static_cast<int>(rng.uniform() * K));
            if (rng.uniform() < 0.3) {
                preds.push_back(Prediction::reject(1 + static_cast<int>(rng.uniform() * (K - 1))));
            } else {
                preds.push_back(Prediction::of_class(1 + static_cast<int>(rng.uniform() * K)));
            }
        }
        const double w1 = 0.5 * rng.uniform(), w2 = 0.5 * rng.uniform();
        const auto a = evaluate(preds, truth, w1);
        const auto b = evaluate(preds, truth, w2);
        EXPECT_NEAR(a.error_rate, (1 - a.acc_accepted) * (1 - a.reject_rate), 1e-12);
        EXPECT_NEAR(a.risk - b.risk, (w1 - w2) * a.reject_rate, 1e-12);
        EXPECT_GE(a.acc_accepted, 0.0);
        EXPECT_LE(a.acc_accepted, 1.0);

        const auto conf = confusion_counts(preds, truth);
        std::size_t total = 0, rejects = 0;
        for (const auto& [key, count] : conf) {
            total += count;
            if (key.second < 0) {
                rejects += count;
            }
        }
        EXPECT_EQ(total, n);
        EXPECT_NEAR(static_cast<double>(rejects) / static_cast<double>(n), a.reject_rate, 1e-12);
    }
}

TEST(Methods, NamesRoundTrip)
{
    for (auto m : {Method::RejoSvm, Method::RejoNn, Method::SingleThreshold, Method::IndependentPair,
                   Method::Standard}) {
        EXPECT_EQ(parse_method(method_name(m)), m);
    }
    EXPECT_EQ(method_name(Method::RejoSvm), "rejoSVM");
    EXPECT_EQ(method_name(Method::RejoNn), "rejoNN");
    EXPECT_THROW(parse_method("svm"), Error);
}

TEST(Methods, EveryMethodTrainsSavesAndLoads)
{
    const auto data = generate_synthetic_i(80, 4);
    const auto test = generate_synthetic_i(60, 5);
    TrainSettings s;
    s.kernel = KernelType::Rbf;
    s.epochs = 15;
    HyperParams hp;
    hp.hidden = {4};
    for (auto m : {Method::RejoSvm, Method::RejoNn, Method::SingleThreshold, Method::IndependentPair,
                   Method::Standard}) {
        s.method = m;
        const auto model = train_classifier(data, 0.2, s, hp, 3);
        std::stringstream buf;
        save(model, buf);
        const auto back = load_classifier(buf);
        const auto a = predict_all(model, test), b = predict_all(back, test);
        EXPECT_EQ(a, b) << method_name(m);
        if (m == Method::Standard) {
            EXPECT_TRUE(std::none_of(a.begin(), a.end(), [](const Prediction& p) { return p.rejected(); }));
        }
    }
    std::stringstream junk("bogus 1\n");
    EXPECT_THROW(load_classifier(junk), Error);
}

TEST(Folds, CoverEveryRowAndKeepExtremeClasses)
{
    const auto data = generate_synthetic_iv(90, 3);
    const auto folds = assign_folds(data, 5, 8);
    ASSERT_EQ(folds.size(), data.size());
    std::vector<std::size_t> sizes(5, 0);
    for (auto f : folds) {
        ASSERT_LT(f, 5u);
        ++sizes[f];
    }
    EXPECT_EQ(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 0u);
    for (std::size_t f = 0; f < 5; ++f) {
        std::set<int> present;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (folds[i] != f) {
                present.insert(data.y(i));
            }
        }
        EXPECT_TRUE(present.count(1) && present.count(3));
    }
    EXPECT_EQ(assign_folds(data, 5, 8), folds);
    EXPECT_NE(assign_folds(data, 5, 9), folds);
}

TEST(GridSearch, SingletonGridIsReturnedUntouched)
{
    const auto data = generate_synthetic_i(40, 2);
    TrainSettings s;
    HyperParams only;
    only.C = 3.5;
    only.gamma = 0.25;
    const std::vector<HyperParams> grid{only};
    std::vector<double> risks;
    EXPECT_EQ(grid_search_cv(data, s, grid, 5, 0.2, 1, &risks), only);
}

TEST(GridSearch, PrefersTheFittingCOnSeparableData)
{
    Rng rng(21);
    Matrix x(60, 2);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        y[i] = i % 2 == 0 ? 1 : 2;
        x(i, 0) = (y[i] == 1 ? -1.0 : 1.0) * (0.4 + rng.uniform());
        x(i, 1) = 20 * rng.normal();
    }
    const LabeledDataset data(std::move(x), std::move(y), 2);
    TrainSettings s;
    s.kernel = KernelType::Linear;
    HyperParams tiny, big;
    tiny.C = 1e-3;
    big.C = 1e3;
    std::vector<HyperParams> grid{tiny, big};
    std::vector<double> risks;
    const auto chosen = grid_search_cv(data, s, grid, 5, 0.2, 4, &risks);
    EXPECT_EQ(chosen.C, 1e3);
    ASSERT_EQ(risks.size(), 2u);
    EXPECT_LT(risks[1], risks[0]);

    std::reverse(grid.begin(), grid.end());
    EXPECT_EQ(grid_search_cv(data, s, grid, 5, 0.2, 4).C, 1e3);
}

TEST(GridSearch, TiesGoToThePreferredPoint)
{
    HyperParams a, b;
    a.C = 1.0;
    b.C = 10.0;
    EXPECT_TRUE(preferred(a, b));
    EXPECT_FALSE(preferred(b, a));
    b = a;
    b.gamma = 2.0;
    EXPECT_TRUE(preferred(b, a));
    // A linear kernel ignores gamma, so both points score the same and the larger gamma wins.
    const auto data = generate_synthetic_i(40, 6);
    TrainSettings s;
    s.kernel = KernelType::Linear;
    HyperParams low, high;
    low.gamma = 0.5;
    high.gamma = 4.0;
    const std::vector<HyperParams> grid{low, high};
    std::vector<double> risks;
    const auto chosen = grid_search_cv(data, s, grid, 4, 0.2, 2, &risks);
    ASSERT_EQ(risks.size(), 2u);
    EXPECT_EQ(risks[0], risks[1]);
    EXPECT_EQ(chosen.gamma, 4.0);
}

TEST(Config, ParsesEveryKey)
{
    const auto c = parse(R"(# comment
name = demo
dataset = synthetic-iv
n = 90
dataset_seed = 7
method = rejoNN
kernel = linear
C_grid = 0.5, 2
gamma_grid = 1
hidden_grid = 8;4,2;-
lr_grid = 0.05,0.1
epochs = 30   # trailing comment
batch_size = 8
w_r_grid = 0.1, 0.2
fractions = 0.25,0.5
repetitions = 4
seed = 99
folds = 3
h = 2
tol = 1e-4
max_passes = 50
)");
    EXPECT_EQ(c.name, "demo");
    EXPECT_EQ(c.dataset.source, "synthetic-iv");
    EXPECT_EQ(c.dataset.n, 90u);
    EXPECT_EQ(c.dataset.seed, std::optional<std::uint64_t>(7));
    EXPECT_EQ(c.settings.method, Method::RejoNn);
    EXPECT_EQ(c.settings.kernel, KernelType::Linear);
    EXPECT_EQ(c.C_grid, (std::vector<double>{0.5, 2}));
    const std::vector<std::vector<std::size_t>> hidden{{8}, {4, 2}, {}};
    EXPECT_EQ(c.hidden_grid, hidden);
    EXPECT_EQ(c.learning_rate_grid, (std::vector<double>{0.05, 0.1}));
    EXPECT_EQ(c.settings.epochs, 30);
    EXPECT_EQ(c.settings.batch_size, 8u);
    EXPECT_EQ(c.w_r_grid, (std::vector<double>{0.1, 0.2}));
    EXPECT_EQ(c.fractions, (std::vector<double>{0.25, 0.5}));
    EXPECT_EQ(c.repetitions, 4);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.folds, 3u);
    EXPECT_EQ(c.settings.h, 2.0);
    EXPECT_EQ(c.settings.tol, 1e-4);
    EXPECT_EQ(c.settings.max_passes, 50);
    EXPECT_EQ(c.grid().size(), 6u);

    const std::string text = render_config(c);
    EXPECT_EQ(render_config(parse(text)), text);
}

TEST(Config, DefaultsAndGrid)
{
    const auto c = parse("");
    EXPECT_EQ(c.w_r_grid, default_w_r_grid());
    const auto w = default_w_r_grid();
    ASSERT_EQ(w.size(), 12u);
    EXPECT_DOUBLE_EQ(w.front(), 0.04);
    EXPECT_DOUBLE_EQ(w.back(), 0.48);
    EXPECT_EQ(c.grid().size(), c.C_grid.size() * c.gamma_grid.size());
    auto linear = c;
    linear.settings.kernel = KernelType::Linear;
    EXPECT_EQ(linear.grid().size(), c.C_grid.size());
    EXPECT_EQ(render_config(parse(render_config(c))), render_config(c));
}

TEST(Config, ErrorsNameTheLine)
{
    EXPECT_NE(parse_error("n = 10\nbogus = 3\n").find("test.cfg: line 2"), std::string::npos);
    EXPECT_NE(parse_error("n = ten\n").find("line 1"), std::string::npos);
    EXPECT_NE(parse_error("just words\n").find("line 1"), std::string::npos);
    parse_error("C_grid = 1,,2\n");
    parse_error("hidden_grid = 8;;4\n");
    parse_error("hidden_grid = 8,,4\n");
    parse_error("method = lasso\n");
    parse_error("kernel = poly\n");
    EXPECT_THROW(parse("w_r_grid = 0.5\n"), Error);
    EXPECT_THROW(parse("fractions = 1\n"), Error);
    EXPECT_THROW(parse("folds = 1\n"), Error);
    EXPECT_THROW(parse("C_grid = -1\n"), Error);
    try {
        load_config("/nonexistent/dir/x.cfg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
}

TEST(Datasets, LoadsSyntheticAndCsv)
{
    DatasetSpec spec;
    spec.source = "synthetic-ii";
    spec.n = 20;
    EXPECT_TRUE(spec.is_synthetic());
    EXPECT_EQ(load_dataset(spec, 3), generate_synthetic_ii(20, 3));
    spec.seed = 5;
    EXPECT_EQ(load_dataset(spec, 3), generate_synthetic_ii(20, 5));

    const auto path = std::filesystem::temp_directory_path() / "rejopt_eval_dataset.csv";
    write_csv(generate_synthetic_iv(30, 1), path);
    DatasetSpec csv;
    csv.source = path.string();
    EXPECT_FALSE(csv.is_synthetic());
    EXPECT_EQ(load_dataset(csv, 0).size(), 30u);
    csv.source = "csv:" + path.string();
    EXPECT_EQ(load_dataset(csv, 0).classes(), 3);
    std::filesystem::remove(path);
    try {
        load_dataset(csv, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
        EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
    }
}

TEST(ArCurve, OneRepetitionOneWeightGivesOnePoint)
{
    auto c = small_config();
    c.repetitions = 1;
    c.w_r_grid = {0.2};
    const auto r = ar_curve(c);
    ASSERT_EQ(r.rows.size(), 1u);
    ASSERT_EQ(r.aggregate.size(), 1u);
    EXPECT_EQ(r.aggregate[0].reps, 1);
    EXPECT_EQ(r.aggregate[0].mean.risk, r.rows[0].point.risk);
    EXPECT_EQ(r.aggregate[0].stddev.risk, 0.0);
    EXPECT_EQ(r.dataset, "synthetic-i");
    EXPECT_EQ(r.method, "rejoSVM");
    EXPECT_EQ(r.failed_repetitions, 0);
}

TEST(ArCurve, DeterministicAcrossJobCounts)
{
    const auto c = small_config();
    const auto a = ar_curve(c);
    ArCurveOptions threaded;
    threaded.jobs = 3;
    const auto b = ar_curve(c, threaded);
    std::ostringstream ra, rb, aa, ab, ca, cb;
    write_runs_csv(a, ra);
    write_runs_csv(b, rb);
    write_aggregate_csv(a, aa);
    write_aggregate_csv(b, ab);
    write_confusion_csv(a, ca);
    write_confusion_csv(b, cb);
    EXPECT_EQ(ra.str(), rb.str());
    EXPECT_EQ(aa.str(), ab.str());
    EXPECT_EQ(ca.str(), cb.str());
    EXPECT_EQ(ra.str().substr(0, kRunsHeader.size()), kRunsHeader);

    auto other = c;
    other.seed = 18;
    std::ostringstream ro;
    write_runs_csv(ar_curve(other), ro);
    EXPECT_NE(ro.str(), ra.str());
}

TEST(ArCurve, AggregateMatchesRecomputation)
{
    const auto c = small_config();
    const auto r = ar_curve(c);
    ASSERT_EQ(r.rows.size(), static_cast<std::size_t>(c.repetitions) * c.w_r_grid.size());
    ASSERT_EQ(r.aggregate.size(), c.w_r_grid.size());
    for (const auto& agg : r.aggregate) {
        std::vector<double> risks;
        for (const auto& row : r.rows) {
            if (row.point.w_r == agg.w_r && row.fraction == agg.fraction) {
                risks.push_back(row.point.risk);
            }
        }
        ASSERT_EQ(static_cast<int>(risks.size()), agg.reps);
        const double mean = std::accumulate(risks.begin(), risks.end(), 0.0) / static_cast<double>(risks.size());
        double ss = 0.0;
        for (double v : risks) {
            ss += (v - mean) * (v - mean);
        }
        EXPECT_NEAR(agg.mean.risk, mean, 1e-12);
        EXPECT_NEAR(agg.stddev.risk, std::sqrt(ss / static_cast<double>(risks.size() - 1)), 1e-12);
    }
    const std::size_t test_size = c.dataset.n - static_cast<std::size_t>(std::ceil(c.fractions[0] * c.dataset.n));
    for (const auto& row : r.rows) {
        std::size_t total = 0;
        for (const auto& [key, count] : row.confusion) {
            total += count;
        }
        EXPECT_EQ(total, test_size);
        EXPECT_EQ(row.chosen.C, 10.0);
        EXPECT_LT(row.point.reject_rate, 1.0);
    }
    EXPECT_EQ(aggregate(r.rows).size(), r.aggregate.size());
}

TEST(ArCurve, EventsReachTheCallbackInOrder)
{
    auto c = small_config();
    c.dataset.n = 12;
    c.fractions = {0.25};
    std::vector<std::string> seen;
    ArCurveOptions opts;
    opts.on_event = [&](const std::string& e) { seen.push_back(e); };
    const auto r = ar_curve(c, opts);
    EXPECT_EQ(seen, r.events);
}
