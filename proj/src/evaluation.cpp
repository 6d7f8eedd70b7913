#include "rejopt/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "rejopt/rng.hpp"
#include "rejopt/serialize.hpp"
#include "rejopt/synthetic.hpp"

namespace rejopt {

std::string_view method_name(Method method)
{
    switch (method) {
    case Method::RejoSvm:
        return "rejoSVM";
    case Method::RejoNn:
        return "rejoNN";
    case Method::SingleThreshold:
        return "single-threshold";
    case Method::IndependentPair:
        return "independent-pair";
    case Method::Standard:
        return "standard";
    }
    return "?";
}

Method parse_method(std::string_view name)
{
    for (Method m : {Method::RejoSvm, Method::RejoNn, Method::SingleThreshold, Method::IndependentPair,
                     Method::Standard}) {
        if (name == method_name(m)) {
            return m;
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) +
                                         "' (expected rejoSVM, rejoNN, single-threshold, independent-pair or standard)");
}

bool preferred(const HyperParams& a, const HyperParams& b)
{
    const auto units = [](const HyperParams& hp) {
        return std::accumulate(hp.hidden.begin(), hp.hidden.end(), std::size_t{0});
    };
    return std::make_tuple(a.C, -a.gamma, units(a), a.hidden, a.learning_rate) <
           std::make_tuple(b.C, -b.gamma, units(b), b.hidden, b.learning_rate);
}

namespace {

SvmParams svm_params(const TrainSettings& settings, const HyperParams& hp, std::uint64_t seed)
{
    SvmParams p;
    p.kernel = settings.kernel == KernelType::Linear ? KernelSpec::linear() : KernelSpec::rbf(hp.gamma);
    p.C = hp.C;
    p.tol = settings.tol;
    p.max_passes = settings.max_passes;
    p.seed = seed;
    return p;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

Classifier train_classifier(const LabeledDataset& train, double w_r, const TrainSettings& settings,
                            const HyperParams& hp, std::uint64_t seed)
{
    switch (settings.method) {
    case Method::RejoSvm:
        return train_reject_svm(train, w_r, svm_params(settings, hp, seed), settings.h);
    case Method::RejoNn: {
        MlpParams p;
        p.hidden = hp.hidden;
        p.learning_rate = hp.learning_rate;
        p.epochs = settings.epochs;
        p.batch_size = settings.batch_size;
        p.seed = seed;
        return train_reject_mlp(train, w_r, p, settings.h);
    }
    case Method::SingleThreshold:
        return train_single_threshold(train, w_r, svm_params(settings, hp, seed));
    case Method::IndependentPair:
        return train_independent(train, w_r, svm_params(settings, hp, seed));
    case Method::Standard:
        cost_pair(w_r);
        return train_standard(train, svm_params(settings, hp, seed));
    }
    fail(ErrorCode::InvalidArgument, "unknown method");
}

Prediction predict(const Classifier& model, std::span<const double> x)
{
    return std::visit(overloaded{[&](const RejectModel& m) { return predict(m, x); },
                                 [&](const auto& m) { return predict_baseline(m, x); }},
                      model);
}

std::vector<Prediction> predict_all(const Classifier& model, const LabeledDataset& data)
{
    std::vector<Prediction> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[i] = predict(model, data.x(i));
    }
    return out;
}

void save(const Classifier& model, std::ostream& out)
{
    std::visit([&](const auto& m) { save(m, out); }, model);
}

Classifier load_classifier(std::istream& in)
{
    const auto pos = in.tellg();
    std::string kind;
    if (!(in >> kind)) {
        fail(ErrorCode::Parse, "model file is empty");
    }
    in.seekg(pos);
    if (kind == "reject-model") {
        return load_reject_model(in);
    }
    if (kind == "single-threshold") {
        return load_single_threshold(in);
    }
    if (kind == "independent-pair") {
        return load_independent_pair(in);
    }
    fail(ErrorCode::Parse, "unknown model kind '" + kind + "'");
}

ARPoint evaluate(std::span<const Prediction> preds, std::span<const int> truth, double w_r)
{
    require(preds.size() == truth.size(), "predictions and labels disagree in length");
    require(!truth.empty(), "cannot evaluate an empty prediction set");
    std::size_t rejected = 0;
    std::size_t wrong = 0;
    std::size_t ambiguous = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].non_monotone) {
            ++ambiguous;
        }
        if (preds[i].rejected()) {
            ++rejected;
        } else if (preds[i].index != truth[i]) {
            ++wrong;
        }
    }
    const auto n = static_cast<double>(truth.size());
    const std::size_t accepted = truth.size() - rejected;
    ARPoint p;
    p.w_r = w_r;
    p.reject_rate = static_cast<double>(rejected) / n;
    p.error_rate = static_cast<double>(wrong) / n;
    p.acc_accepted =
        accepted == 0 ? 1.0 : static_cast<double>(accepted - wrong) / static_cast<double>(accepted);
    p.risk = w_r * p.reject_rate + p.error_rate;
    p.ambiguity_rate = static_cast<double>(ambiguous) / n;
    return p;
}

double empirical_risk(std::span<const Prediction> preds, std::span<const int> truth, double w_r)
{
    return evaluate(preds, truth, w_r).risk;
}

Confusion confusion_counts(std::span<const Prediction> preds, std::span<const int> truth)
{
    require(preds.size() == truth.size(), "predictions and labels disagree in length");
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int outcome = preds[i].rejected() ? -preds[i].index : preds[i].index;
        ++c[{truth[i], outcome}];
    }
    return c;
}

namespace {

bool has_extreme_classes(const LabeledDataset& data, std::span<const std::size_t> rows)
{
    bool low = false;
    bool high = false;
    for (const std::size_t r : rows) {
        low = low || data.y(r) == 1;
        high = high || data.y(r) == data.classes();
    }
    return low && high;
}

constexpr int kMaxRedraws = 50;

}  // namespace

std::vector<std::size_t> assign_folds(const LabeledDataset& data, std::size_t folds, std::uint64_t seed)
{
    require(folds >= 2, "cross validation needs at least two folds");
    require(data.size() >= folds, "cross validation needs at least one row per fold");
    std::vector<std::size_t> order(data.size());
    std::vector<std::size_t> fold(data.size());
    std::vector<std::size_t> rest;
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        rng.shuffle(order.begin(), order.end());
        for (std::size_t i = 0; i < order.size(); ++i) {
            fold[order[i]] = i % folds;
        }
        bool ok = true;
        for (std::size_t f = 0; f < folds && ok; ++f) {
            rest.clear();
            for (std::size_t i = 0; i < fold.size(); ++i) {
                if (fold[i] != f) {
                    rest.push_back(i);
                }
            }
            ok = has_extreme_classes(data, rest);
        }
        if (ok) {
            return fold;
        }
    }
    fail(ErrorCode::Training, "no fold assignment keeps classes 1 and K in every training part");
}

HyperParams grid_search_cv(const LabeledDataset& train, const TrainSettings& settings,
                           std::span<const HyperParams> grid, std::size_t folds, double w_r, std::uint64_t seed,
                           std::vector<double>* cv_risks)
{
    require(!grid.empty(), "hyperparameter grid is empty");
    cost_pair(w_r);
    if (cv_risks != nullptr) {
        cv_risks->assign(grid.size(), std::numeric_limits<double>::infinity());
    }
    if (grid.size() == 1) {
        return grid.front();
    }
    const auto fold = assign_folds(train, folds, seed);
    std::vector<LabeledDataset> fit_parts;
    std::vector<LabeledDataset> held_parts;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> fit;
        std::vector<std::size_t> held;
        for (std::size_t i = 0; i < fold.size(); ++i) {
            (fold[i] == f ? held : fit).push_back(i);
        }
        fit_parts.push_back(train.subset(fit));
        held_parts.push_back(train.subset(held));
    }

    std::size_t best = grid.size();
    double best_risk = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double total = 0.0;
        try {
            for (std::size_t f = 0; f < folds; ++f) {
                const auto model =
                    train_classifier(fit_parts[f], w_r, settings, grid[g], derive_seed(seed, 100 + f));
                const auto preds = predict_all(model, held_parts[f]);
                total += empirical_risk(preds, held_parts[f].labels(), w_r);
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Training) {
                throw;
            }
            continue;
        }
        const double risk = total / static_cast<double>(folds);
        if (cv_risks != nullptr) {
            (*cv_risks)[g] = risk;
        }
        if (best == grid.size() || risk < best_risk || (risk == best_risk && preferred(grid[g], grid[best]))) {
            best = g;
            best_risk = risk;
        }
    }
    if (best == grid.size()) {
        fail(ErrorCode::Training, "every grid point failed to train during cross validation");
    }
    return grid[best];
}

bool DatasetSpec::is_synthetic() const
{
    return source == "synthetic-i" || source == "synthetic-ii" || source == "synthetic-iii" ||
           source == "synthetic-iv";
}

std::vector<double> default_w_r_grid()
{
    std::vector<double> grid;
    for (int i = 1; i <= 12; ++i) {
        grid.push_back(0.04 * i);
    }
    return grid;
}

ExperimentConfig::ExperimentConfig() : w_r_grid(default_w_r_grid()) {}

std::vector<HyperParams> ExperimentConfig::grid() const
{
    std::vector<HyperParams> out;
    if (settings.method == Method::RejoNn) {
        for (const auto& hidden : hidden_grid) {
            for (double lr : learning_rate_grid) {
                HyperParams hp;
                hp.hidden = hidden;
                hp.learning_rate = lr;
                out.push_back(hp);
            }
        }
        return out;
    }
    const std::vector<double> gammas =
        settings.kernel == KernelType::Rbf ? gamma_grid : std::vector<double>{1.0};
    for (double C : C_grid) {
        for (double gamma : gammas) {
            HyperParams hp;
            hp.C = C;
            hp.gamma = gamma;
            out.push_back(hp);
        }
    }
    return out;
}

void ExperimentConfig::validate() const
{
    require(!w_r_grid.empty(), "w_r_grid is empty");
    for (double w : w_r_grid) {
        require(w >= 0.0 && w < 0.5, "every w_r must lie in [0, 0.5); got " + format_number(w));
    }
    require(!fractions.empty(), "fractions is empty");
    for (double f : fractions) {
        require(f > 0.0 && f < 1.0, "train fractions must lie in (0, 1); got " + format_number(f));
    }
    require(repetitions >= 1, "repetitions must be >= 1");
    require(folds >= 2, "folds must be >= 2");
    require(settings.h > 0.0, "h must be positive");
    require(!grid().empty(), "hyperparameter grid is empty");
    for (double C : C_grid) {
        require(C > 0.0, "C values must be positive");
    }
    for (double g : gamma_grid) {
        require(g > 0.0, "gamma values must be positive");
    }
    for (double lr : learning_rate_grid) {
        require(lr > 0.0, "learning rates must be positive");
    }
    require(settings.epochs >= 1, "epochs must be >= 1");
    if (dataset.is_synthetic()) {
        require(dataset.n >= 1, "dataset size n must be >= 1");
    }
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, sep)) {
        out.push_back(trim(item));
    }
    return out;
}

struct ConfigLine {
    const std::string& source;
    std::size_t line;

    [[noreturn]] void error(const std::string& what) const
    {
        fail(ErrorCode::Parse, source + ": line " + std::to_string(line) + ": " + what);
    }

    double number(const std::string& v) const
    {
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
            error("'" + v + "' is not a number");
        }
        return out;
    }

    std::uint64_t unsigned_integer(const std::string& v) const
    {
        std::uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
            error("'" + v + "' is not a non-negative integer");
        }
        return out;
    }

    std::vector<double> numbers(const std::string& v) const
    {
        std::vector<double> out;
        for (const auto& item : split_list(v, ',')) {
            out.push_back(number(item));
        }
        if (out.empty()) {
            error("empty list");
        }
        return out;
    }
};

std::string render_list(const std::vector<double>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? "," : "") + format_number(values[i]);
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source_name)
{
    ExperimentConfig config;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const ConfigLine at{source_name, line_no};
        const auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            at.error("expected 'key = value'");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key == "name") {
            config.name = value;
        } else if (key == "dataset") {
            config.dataset.source = value;
        } else if (key == "n") {
            config.dataset.n = at.unsigned_integer(value);
        } else if (key == "dataset_seed") {
            config.dataset.seed = at.unsigned_integer(value);
        } else if (key == "method") {
            try {
                config.settings.method = parse_method(value);
            } catch (const Error& e) {
                at.error(e.what());
            }
        } else if (key == "kernel") {
            if (value == "linear") {
                config.settings.kernel = KernelType::Linear;
            } else if (value == "rbf") {
                config.settings.kernel = KernelType::Rbf;
            } else {
                at.error("kernel must be 'linear' or 'rbf'");
            }
        } else if (key == "C_grid") {
            config.C_grid = at.numbers(value);
        } else if (key == "gamma_grid") {
            config.gamma_grid = at.numbers(value);
        } else if (key == "hidden_grid") {
            // Architectures separated by ';', widths by ','; '-' is the affine network.
            config.hidden_grid.clear();
            for (const auto& arch : split_list(value, ';')) {
                std::vector<std::size_t> widths;
                if (arch.empty()) {
                    at.error("empty architecture in hidden_grid (write - for no hidden layer)");
                }
                if (arch != "-") {
                    for (const auto& w : split_list(arch, ',')) {
                        widths.push_back(static_cast<std::size_t>(at.unsigned_integer(w)));
                    }
                }
                config.hidden_grid.push_back(std::move(widths));
            }
            if (config.hidden_grid.empty()) {
                at.error("empty hidden_grid");
            }
        } else if (key == "lr_grid") {
            config.learning_rate_grid = at.numbers(value);
        } else if (key == "epochs") {
            config.settings.epochs = static_cast<int>(at.unsigned_integer(value));
        } else if (key == "batch_size") {
            config.settings.batch_size = static_cast<std::size_t>(at.unsigned_integer(value));
        } else if (key == "w_r_grid") {
            config.w_r_grid = at.numbers(value);
        } else if (key == "fractions") {
            config.fractions = at.numbers(value);
        } else if (key == "repetitions") {
            config.repetitions = static_cast<int>(at.unsigned_integer(value));
        } else if (key == "seed") {
            config.seed = at.unsigned_integer(value);
        } else if (key == "folds") {
            config.folds = static_cast<std::size_t>(at.unsigned_integer(value));
        } else if (key == "h") {
            config.settings.h = at.number(value);
        } else if (key == "tol") {
            config.settings.tol = at.number(value);
        } else if (key == "max_passes") {
            config.settings.max_passes = static_cast<int>(at.unsigned_integer(value));
        } else {
            at.error("unknown key '" + key + "'");
        }
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::Io, "cannot open config file " + path.string());
    }
    return parse_config(in, path.string());
}

std::string render_config(const ExperimentConfig& c)
{
    std::ostringstream out;
    if (!c.name.empty()) {
        out << "name = " << c.name << '\n';
    }
    out << "dataset = " << c.dataset.source << '\n';
    out << "n = " << c.dataset.n << '\n';
    if (c.dataset.seed) {
        out << "dataset_seed = " << *c.dataset.seed << '\n';
    }
    out << "method = " << method_name(c.settings.method) << '\n';
    out << "kernel = " << (c.settings.kernel == KernelType::Linear ? "linear" : "rbf") << '\n';
    out << "C_grid = " << render_list(c.C_grid) << '\n';
    out << "gamma_grid = " << render_list(c.gamma_grid) << '\n';
    out << "hidden_grid = ";
    for (std::size_t a = 0; a < c.hidden_grid.size(); ++a) {
        out << (a ? ";" : "");
        if (c.hidden_grid[a].empty()) {
            out << '-';
        }
        for (std::size_t i = 0; i < c.hidden_grid[a].size(); ++i) {
            out << (i ? "," : "") << c.hidden_grid[a][i];
        }
    }
    out << '\n';
    out << "lr_grid = " << render_list(c.learning_rate_grid) << '\n';
    out << "epochs = " << c.settings.epochs << '\n';
    out << "batch_size = " << c.settings.batch_size << '\n';
    out << "w_r_grid = " << render_list(c.w_r_grid) << '\n';
    out << "fractions = " << render_list(c.fractions) << '\n';
    out << "repetitions = " << c.repetitions << '\n';
    out << "seed = " << c.seed << '\n';
    out << "folds = " << c.folds << '\n';
    out << "h = " << format_number(c.settings.h) << '\n';
    out << "tol = " << format_number(c.settings.tol) << '\n';
    out << "max_passes = " << c.settings.max_passes << '\n';
    return out.str();
}

LabeledDataset load_dataset(const DatasetSpec& spec, std::uint64_t fallback_seed)
{
    if (spec.is_synthetic()) {
        return generate_synthetic(spec.source, spec.n, spec.seed.value_or(fallback_seed));
    }
    std::string path = spec.source;
    if (path.rfind("csv:", 0) == 0) {
        path.erase(0, 4);
    }
    if (!std::filesystem::exists(path)) {
        fail(ErrorCode::Io, "dataset file not found: " + path);
    }
    return load_csv(path);
}

namespace {

struct RepetitionOutcome {
    std::vector<RunRow> rows;
    std::vector<std::string> events;
    bool failed = false;
};

RepetitionOutcome run_repetition(const ExperimentConfig& config, const LabeledDataset& data,
                                 std::size_t fraction_index, int rep)
{
    RepetitionOutcome out;
    const double fraction = config.fractions[fraction_index];
    const std::uint64_t rep_seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
    const auto grid = config.grid();
    const std::string where = "fraction " + format_number(fraction) + " rep " + std::to_string(rep);

    Split split;
    std::uint64_t split_seed = 0;
    bool usable = false;
    for (int attempt = 0; attempt < kMaxRedraws && !usable; ++attempt) {
        split_seed = derive_seed(rep_seed, fraction_index * 1024 + static_cast<std::uint64_t>(attempt));
        split = split_indices(data.size(), {fraction, split_seed});
        usable = !split.test_indices.empty() && split.train_indices.size() >= config.folds &&
                 has_extreme_classes(data, split.train_indices);
        if (usable) {
            try {
                assign_folds(data.subset(split.train_indices), config.folds, derive_seed(split_seed, 1));
            } catch (const Error&) {
                usable = false;
            }
        }
        if (!usable) {
            out.events.push_back(where + ": degenerate split (attempt " + std::to_string(attempt) + "), redrawn");
        }
    }
    if (!usable) {
        out.events.push_back(where + ": no usable split after " + std::to_string(kMaxRedraws) + " draws");
        out.failed = true;
        return out;
    }

    const auto train = data.subset(split.train_indices);
    const auto test = data.subset(split.test_indices);
    try {
        for (std::size_t w = 0; w < config.w_r_grid.size(); ++w) {
            const double w_r = config.w_r_grid[w];
            const auto hp = grid_search_cv(train, config.settings, grid, config.folds, w_r,
                                           derive_seed(split_seed, 1));
            const auto model = train_classifier(train, w_r, config.settings, hp, derive_seed(split_seed, 2000 + w));
            const auto preds = predict_all(model, test);
            RunRow row;
            row.fraction = fraction;
            row.rep = rep;
            row.point = evaluate(preds, test.labels(), w_r);
            row.confusion = confusion_counts(preds, test.labels());
            row.chosen = hp;
            out.rows.push_back(std::move(row));
        }
    } catch (const Error& e) {
        out.events.push_back(where + ": failed: " + e.what());
        out.rows.clear();
        out.failed = true;
    }
    return out;
}

ARPoint point_mean(std::span<const ARPoint> pts)
{
    ARPoint m;
    const auto n = static_cast<double>(pts.size());
    m.w_r = pts.front().w_r;
    m.reject_rate = m.acc_accepted = m.error_rate = m.risk = m.ambiguity_rate = 0.0;
    for (const auto& p : pts) {
        m.reject_rate += p.reject_rate;
        m.acc_accepted += p.acc_accepted;
        m.error_rate += p.error_rate;
        m.risk += p.risk;
        m.ambiguity_rate += p.ambiguity_rate;
    }
    m.reject_rate /= n;
    m.acc_accepted /= n;
    m.error_rate /= n;
    m.risk /= n;
    m.ambiguity_rate /= n;
    return m;
}

ARPoint point_std(std::span<const ARPoint> pts, const ARPoint& mean)
{
    ARPoint s;
    s.w_r = mean.w_r;
    s.reject_rate = s.acc_accepted = s.error_rate = s.risk = s.ambiguity_rate = 0.0;
    if (pts.size() < 2) {
        return s;
    }
    for (const auto& p : pts) {
        s.reject_rate += (p.reject_rate - mean.reject_rate) * (p.reject_rate - mean.reject_rate);
        s.acc_accepted += (p.acc_accepted - mean.acc_accepted) * (p.acc_accepted - mean.acc_accepted);
        s.error_rate += (p.error_rate - mean.error_rate) * (p.error_rate - mean.error_rate);
        s.risk += (p.risk - mean.risk) * (p.risk - mean.risk);
        s.ambiguity_rate += (p.ambiguity_rate - mean.ambiguity_rate) * (p.ambiguity_rate - mean.ambiguity_rate);
    }
    const auto d = static_cast<double>(pts.size() - 1);
    s.reject_rate = std::sqrt(s.reject_rate / d);
    s.acc_accepted = std::sqrt(s.acc_accepted / d);
    s.error_rate = std::sqrt(s.error_rate / d);
    s.risk = std::sqrt(s.risk / d);
    s.ambiguity_rate = std::sqrt(s.ambiguity_rate / d);
    return s;
}

std::string dataset_label(const ExperimentConfig& config)
{
    if (!config.name.empty()) {
        return config.name;
    }
    if (config.dataset.is_synthetic()) {
        return config.dataset.source;
    }
    return std::filesystem::path(config.dataset.source).stem().string();
}

}  // namespace

std::vector<AggregateRow> aggregate(std::span<const RunRow> rows)
{
    std::vector<std::pair<double, double>> keys;
    std::vector<std::vector<ARPoint>> groups;
    for (const auto& r : rows) {
        const std::pair<double, double> key{r.fraction, r.point.w_r};
        auto it = std::find(keys.begin(), keys.end(), key);
        if (it == keys.end()) {
            keys.push_back(key);
            groups.emplace_back();
            it = keys.end() - 1;
        }
        groups[static_cast<std::size_t>(it - keys.begin())].push_back(r.point);
    }
    std::vector<AggregateRow> out;
    for (std::size_t g = 0; g < keys.size(); ++g) {
        AggregateRow a;
        a.fraction = keys[g].first;
        a.w_r = keys[g].second;
        a.reps = static_cast<int>(groups[g].size());
        a.mean = point_mean(groups[g]);
        a.stddev = point_std(groups[g], a.mean);
        out.push_back(a);
    }
    return out;
}

ArCurveResult ar_curve(const ExperimentConfig& config, const LabeledDataset& data, const ArCurveOptions& options)
{
    config.validate();
    ArCurveResult result;
    result.dataset = dataset_label(config);
    result.method = std::string(method_name(config.settings.method));

    struct Job {
        std::size_t fraction_index;
        int rep;
    };
    std::vector<Job> jobs;
    for (std::size_t f = 0; f < config.fractions.size(); ++f) {
        for (int r = 0; r < config.repetitions; ++r) {
            jobs.push_back({f, r});
        }
    }
    std::vector<RepetitionOutcome> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            outcomes[k] = run_repetition(config, data, jobs[k].fraction_index, jobs[k].rep);
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(jobs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    for (auto& o : outcomes) {
        for (auto& e : o.events) {
            if (options.on_event) {
                options.on_event(e);
            }
            result.events.push_back(std::move(e));
        }
        if (o.failed) {
            ++result.failed_repetitions;
        }
        for (auto& r : o.rows) {
            result.rows.push_back(std::move(r));
        }
    }
    result.aggregate = aggregate(result.rows);
    return result;
}

ArCurveResult ar_curve(const ExperimentConfig& config, const ArCurveOptions& options)
{
    const auto data = load_dataset(config.dataset, config.seed);
    return ar_curve(config, data, options);
}

void write_runs_csv(const ArCurveResult& result, std::ostream& out)
{
    out << kRunsHeader << '\n';
    for (const auto& r : result.rows) {
        const auto& p = r.point;
        out << result.dataset << ',' << result.method << ',' << format_number(r.fraction) << ','
            << format_number(p.w_r) << ',' << r.rep << ',' << format_number(p.reject_rate) << ','
            << format_number(p.acc_accepted) << ',' << format_number(p.error_rate) << ',' << format_number(p.risk)
            << ',' << format_number(p.ambiguity_rate) << '\n';
    }
}

void write_aggregate_csv(const ArCurveResult& result, std::ostream& out)
{
    out << "dataset,method,fraction,w_r,reps";
    for (const char* m : {"reject_rate", "acc_accepted", "error_rate", "risk", "ambiguity_rate"}) {
        out << ',' << m << "_mean," << m << "_std";
    }
    out << '\n';
    for (const auto& a : result.aggregate) {
        out << result.dataset << ',' << result.method << ',' << format_number(a.fraction) << ','
            << format_number(a.w_r) << ',' << a.reps;
        const std::pair<double, double> cols[] = {{a.mean.reject_rate, a.stddev.reject_rate},
                                                  {a.mean.acc_accepted, a.stddev.acc_accepted},
                                                  {a.mean.error_rate, a.stddev.error_rate},
                                                  {a.mean.risk, a.stddev.risk},
                                                  {a.mean.ambiguity_rate, a.stddev.ambiguity_rate}};
        for (const auto& [m, s] : cols) {
            out << ',' << format_number(m) << ',' << format_number(s);
        }
        out << '\n';
    }
}

void write_confusion_csv(const ArCurveResult& result, std::ostream& out)
{
    out << "dataset,method,fraction,w_r,rep,true_class,outcome,count\n";
    for (const auto& r : result.rows) {
        for (const auto& [key, count] : r.confusion) {
            const auto [truth, outcome] = key;
            out << result.dataset << ',' << result.method << ',' << format_number(r.fraction) << ','
                << format_number(r.point.w_r) << ',' << r.rep << ',' << truth << ','
                << (outcome > 0 ? std::to_string(outcome) : "R" + std::to_string(-outcome)) << ',' << count
                << '\n';
        }
    }
}

}  // namespace rejopt
