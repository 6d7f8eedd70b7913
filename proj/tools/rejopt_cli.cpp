// rejopt-cli: dataset generation, model training, accuracy-reject experiments
// and manifest verification on top of the rejopt C library.
//
// Exit codes: 0 success, 1 runtime or training failure, 2 usage or validation error.

#include <openssl/evp.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rejopt/rejopt.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommandError {
    int exit_code;
    std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw CommandError{kExitUsage, message}; }

[[noreturn]] void runtime_error(const std::string& message) { throw CommandError{kExitRuntime, message}; }

// Validation-type failures from the library are the caller's fault; the rest are runtime failures.
void check(rejopt_status status, const std::string& context)
{
    if (status == REJOPT_OK) {
        return;
    }
    const std::string message = context + ": " + rejopt_last_error();
    switch (status) {
    case REJOPT_INVALID_ARGUMENT:
    case REJOPT_IO:
    case REJOPT_PARSE:
    case REJOPT_DIMENSION:
        usage_error(message);
    default:
        runtime_error(message);
    }
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
};

using Dataset = Handle<rejopt_dataset_t, rejopt_dataset_free>;
using Model = Handle<rejopt_model_t, rejopt_model_free>;
using Experiment = Handle<rejopt_experiment_t, rejopt_experiment_free>;

std::string sha256_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        runtime_error("cannot read " + path.string() + " for hashing");
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < length; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

// Shortest text that reads back to the same double.
std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string absolute(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

// ---------------------------------------------------------------------------
// Commands. Each writes its outputs and returns their paths; the manifest is
// written by the caller so that verify can rerun a command into a scratch dir.

struct GenerateArgs {
    std::string name;
    std::size_t n = 0;
    std::uint64_t seed = 1;
};

std::vector<fs::path> run_generate(const GenerateArgs& a, const fs::path& out)
{
    Dataset data;
    check(rejopt_dataset_generate(a.name.c_str(), a.n, a.seed, &data.ptr), "generate " + a.name);
    check(rejopt_dataset_write_csv(data.ptr, out.c_str()), "write " + out.string());
    std::cerr << "wrote " << rejopt_dataset_rows(data.ptr) << " rows (K=" << rejopt_dataset_classes(data.ptr)
              << ") to " << out.string() << '\n';
    return {out};
}

struct TrainArgs {
    std::string method = "rejoSVM";
    std::string data;
    double w_r = 0.2;
    std::string kernel = "rbf";
    double C = 1.0;
    double gamma = 1.0;
    std::vector<std::size_t> hidden{8};
    double lr = 0.1;
    int epochs = 200;
    std::size_t batch_size = 16;
    double h = 1.0;
    double tol = 1e-3;
    int max_passes = 1000;
    std::uint64_t seed = 1;
};

std::vector<fs::path> run_train(const TrainArgs& a, const fs::path& out)
{
    if (!(a.w_r >= 0.0 && a.w_r < 0.5)) {
        usage_error("--w-r must lie in [0, 0.5); got " + format_double(a.w_r));
    }
    if (!fs::exists(a.data)) {
        usage_error("dataset file not found: " + a.data);
    }
    Dataset data;
    check(rejopt_dataset_load_csv(a.data.c_str(), &data.ptr), "load " + a.data);

    rejopt_train_options opts;
    rejopt_train_options_init(&opts);
    opts.method = a.method.c_str();
    opts.w_r = a.w_r;
    opts.kernel = a.kernel == "linear" ? REJOPT_KERNEL_LINEAR : REJOPT_KERNEL_RBF;
    opts.C = a.C;
    opts.gamma = a.gamma;
    opts.hidden = a.hidden.data();
    opts.hidden_count = a.hidden.size();
    opts.learning_rate = a.lr;
    opts.epochs = a.epochs;
    opts.batch_size = a.batch_size;
    opts.h = a.h;
    opts.tol = a.tol;
    opts.max_passes = a.max_passes;
    opts.seed = a.seed;

    Model model;
    check(rejopt_train(data.ptr, &opts, &model.ptr), "train " + a.method);
    check(rejopt_model_save(model.ptr, out.c_str()), "save " + out.string());

    std::cerr << "trained " << a.method << " on " << rejopt_dataset_rows(data.ptr) << " rows, K="
              << rejopt_dataset_classes(data.ptr) << '\n';
    std::size_t count = 0;
    if (rejopt_model_offsets(model.ptr, nullptr, 0, &count) == REJOPT_OK) {
        std::vector<double> offsets(count);
        check(rejopt_model_offsets(model.ptr, offsets.data(), offsets.size(), &count), "offsets");
        for (std::size_t q = 0; q < count; ++q) {
            std::cerr << "offset b_" << q + 1 << " = " << format_double(offsets[q]) << '\n';
        }
    }
    std::cerr << "model written to " << out.string() << '\n';
    return {out};
}

struct ArCurveArgs {
    std::string config;
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;
};

struct ArCurveOutcome {
    std::vector<fs::path> outputs;
    std::string config_text;
    std::uint64_t seed = 0;
    int failed = 0;
};

void print_event(const char* message, void*) { std::cerr << "event: " << message << '\n'; }

ArCurveOutcome run_ar_curve(const ArCurveArgs& a, const fs::path& out_dir)
{
    if (!fs::exists(a.config)) {
        usage_error("config file not found: " + a.config);
    }
    rejopt_experiment_options opts;
    rejopt_experiment_options_init(&opts);
    opts.jobs = a.jobs;
    if (a.seed) {
        opts.override_seed = 1;
        opts.seed = *a.seed;
    }
    opts.on_event = print_event;
    Experiment exp;
    check(rejopt_experiment_run(a.config.c_str(), &opts, &exp.ptr), "ar-curve " + a.config);

    fs::create_directories(out_dir);
    ArCurveOutcome outcome;
    const fs::path runs = out_dir / "runs.csv";
    const fs::path agg = out_dir / "aggregate.csv";
    const fs::path confusion = out_dir / "confusion.csv";
    check(rejopt_experiment_write_runs(exp.ptr, runs.c_str()), "write runs");
    check(rejopt_experiment_write_aggregate(exp.ptr, agg.c_str()), "write aggregate");
    check(rejopt_experiment_write_confusion(exp.ptr, confusion.c_str()), "write confusion");
    outcome.outputs = {runs, agg, confusion};
    outcome.config_text = rejopt_experiment_config_text(exp.ptr);
    outcome.seed = rejopt_experiment_seed(exp.ptr);
    outcome.failed = rejopt_experiment_failed_repetitions(exp.ptr);
    std::cerr << "ar-curve: " << rejopt_experiment_row_count(exp.ptr) << " runs, "
              << rejopt_experiment_aggregate_count(exp.ptr) << " aggregate rows, " << outcome.failed
              << " failed repetitions; results in " << out_dir.string() << '\n';
    return outcome;
}

// ---------------------------------------------------------------------------
// Manifest

ordered_json output_digests(const std::vector<fs::path>& outputs)
{
    ordered_json list = ordered_json::array();
    for (const auto& p : outputs) {
        list.push_back({{"file", p.filename().string()}, {"sha256", sha256_file(p)}});
    }
    return list;
}

void write_manifest(const fs::path& path, ordered_json manifest)
{
    std::ofstream out(path);
    out << manifest.dump(2) << '\n';
    if (!out) {
        runtime_error("cannot write manifest " + path.string());
    }
}

ordered_json manifest_header(const std::string& command, std::uint64_t seed, double seconds)
{
    return {{"tool", "rejopt-cli"},
            {"version", rejopt_version()},
            {"command", command},
            {"seed", seed},
            {"timing", {{"seconds", seconds}}}};
}

double elapsed(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ordered_json to_json(const GenerateArgs& a) { return {{"name", a.name}, {"n", a.n}, {"seed", a.seed}}; }

ordered_json to_json(const TrainArgs& a)
{
    return {{"method", a.method},         {"data", a.data},   {"w_r", a.w_r},
            {"kernel", a.kernel},         {"C", a.C},         {"gamma", a.gamma},
            {"hidden", a.hidden},         {"lr", a.lr},       {"epochs", a.epochs},
            {"batch_size", a.batch_size}, {"h", a.h},         {"tol", a.tol},
            {"max_passes", a.max_passes}, {"seed", a.seed}};
}

ordered_json to_json(const ArCurveArgs& a, std::uint64_t effective_seed)
{
    return {{"config", a.config}, {"jobs", a.jobs}, {"seed", effective_seed}};
}

GenerateArgs generate_from_json(const ordered_json& j)
{
    GenerateArgs a;
    a.name = j.at("name").get<std::string>();
    a.n = j.at("n").get<std::size_t>();
    a.seed = j.at("seed").get<std::uint64_t>();
    return a;
}

TrainArgs train_from_json(const ordered_json& j)
{
    TrainArgs a;
    a.method = j.at("method").get<std::string>();
    a.data = j.at("data").get<std::string>();
    a.w_r = j.at("w_r").get<double>();
    a.kernel = j.at("kernel").get<std::string>();
    a.C = j.at("C").get<double>();
    a.gamma = j.at("gamma").get<double>();
    a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    a.lr = j.at("lr").get<double>();
    a.epochs = j.at("epochs").get<int>();
    a.batch_size = j.at("batch_size").get<std::size_t>();
    a.h = j.at("h").get<double>();
    a.tol = j.at("tol").get<double>();
    a.max_passes = j.at("max_passes").get<int>();
    a.seed = j.at("seed").get<std::uint64_t>();
    return a;
}

ArCurveArgs ar_curve_from_json(const ordered_json& j)
{
    ArCurveArgs a;
    a.config = j.at("config").get<std::string>();
    a.jobs = j.at("jobs").get<unsigned>();
    a.seed = j.at("seed").get<std::uint64_t>();
    return a;
}

ordered_json input_digests(const std::vector<std::string>& inputs)
{
    ordered_json list = ordered_json::array();
    for (const auto& p : inputs) {
        list.push_back({{"file", p}, {"sha256", sha256_file(p)}});
    }
    return list;
}

fs::path make_scratch_dir()
{
    std::string pattern = (fs::temp_directory_path() / "rejopt-verify-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) {
        runtime_error("cannot create a scratch directory for verification");
    }
    return pattern;
}

int verify_manifest(const fs::path& manifest_path)
{
    std::ifstream in(manifest_path);
    if (!in) {
        usage_error("manifest not found: " + manifest_path.string());
    }
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        usage_error("manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
    }

    bool ok = true;
    std::vector<fs::path> produced;
    const fs::path scratch = make_scratch_dir();
    try {
        const auto& command = manifest.at("command").get_ref<const std::string&>();
        const auto& args = manifest.at("args");
        for (const auto& input : manifest.value("inputs", ordered_json::array())) {
            const auto file = input.at("file").get<std::string>();
            if (!fs::exists(file) || sha256_file(file) != input.at("sha256").get<std::string>()) {
                std::cerr << "input changed or missing: " << file << '\n';
                ok = false;
            }
        }
        const auto& outputs = manifest.at("outputs");
        if (command == "generate") {
            produced = run_generate(generate_from_json(args),
                                    scratch / outputs.at(0).at("file").get<std::string>());
        } else if (command == "train") {
            produced = run_train(train_from_json(args), scratch / outputs.at(0).at("file").get<std::string>());
        } else if (command == "ar-curve") {
            produced = run_ar_curve(ar_curve_from_json(args), scratch).outputs;
        } else {
            usage_error("manifest names unknown command '" + command + "'");
        }
        for (const auto& expected : outputs) {
            const auto name = expected.at("file").get<std::string>();
            const fs::path file = scratch / name;
            const std::string digest = fs::exists(file) ? sha256_file(file) : "<missing>";
            const bool match = digest == expected.at("sha256").get<std::string>();
            std::cout << (match ? "match    " : "MISMATCH ") << name << ' ' << digest << '\n';
            ok = ok && match;
        }
    } catch (const nlohmann::json::exception& e) {
        fs::remove_all(scratch);
        usage_error("manifest " + manifest_path.string() + " is malformed: " + e.what());
    } catch (...) {
        fs::remove_all(scratch);
        throw;
    }
    fs::remove_all(scratch);
    std::cout << (ok ? "verified" : "verification failed") << '\n';
    return ok ? kExitOk : kExitRuntime;
}

std::optional<std::uint64_t> seed_from_env()
{
    const char* value = std::getenv("REJOPT_SEED");
    if (value == nullptr || *value == '\0') {
        return std::nullopt;
    }
    std::uint64_t seed = 0;
    const std::string text(value);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        usage_error("REJOPT_SEED must be a non-negative integer; got '" + text + "'");
    }
    return seed;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Classification with reject option by data replication"};
    // Plain --help only, so that the extension constant can be spelled --h.
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rejopt_version()));

    GenerateArgs gen;
    std::string gen_out;
    auto* generate = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
    generate->add_option("name", gen.name, "synthetic-i, synthetic-ii, synthetic-iii or synthetic-iv")
        ->required()
        ->check(CLI::IsMember({"synthetic-i", "synthetic-ii", "synthetic-iii", "synthetic-iv"}));
    generate->add_option("--n", gen.n, "Number of points")->required();
    generate->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    generate->add_option("--out", gen_out, "Output CSV path")->required();

    TrainArgs tr;
    std::string tr_out;
    std::string hidden_text = "8";
    auto* train = app.add_subcommand("train", "Train one model and save it");
    train->add_option("--method", tr.method, "rejoSVM, rejoNN, single-threshold, independent-pair or standard")
        ->capture_default_str()
        ->check(CLI::IsMember({"rejoSVM", "rejoNN", "single-threshold", "independent-pair", "standard"}));
    train->add_option("--data", tr.data, "Training CSV")->required();
    train->add_option("--w-r", tr.w_r, "Reject cost relative to an error, in [0, 0.5)")->capture_default_str();
    train->add_option("--kernel", tr.kernel, "linear or rbf")
        ->capture_default_str()
        ->check(CLI::IsMember({"linear", "rbf"}));
    train->add_option("--C", tr.C, "SVM trade-off constant")->capture_default_str();
    train->add_option("--gamma", tr.gamma, "RBF width")->capture_default_str();
    train->add_option("--hidden", hidden_text, "Hidden widths, comma separated; '-' for none")
        ->capture_default_str();
    train->add_option("--lr", tr.lr, "Network learning rate")->capture_default_str();
    train->add_option("--epochs", tr.epochs, "Network epochs")->capture_default_str();
    train->add_option("--batch-size", tr.batch_size, "Network mini-batch size")->capture_default_str();
    train->add_option("--h", tr.h, "Extension constant")->capture_default_str();
    train->add_option("--tol", tr.tol, "SMO tolerance")->capture_default_str();
    train->add_option("--max-passes", tr.max_passes, "SMO pass budget")->capture_default_str();
    train->add_option("--seed", tr.seed, "Training seed")->capture_default_str();
    train->add_option("--out", tr_out, "Model output path")->required();

    ArCurveArgs ar;
    std::string ar_out;
    std::optional<std::uint64_t> ar_seed;
    auto* ar_curve = app.add_subcommand("ar-curve", "Run the repeated-split accuracy-reject protocol");
    ar_curve->add_option("--config", ar.config, "Experiment config file")->required();
    ar_curve->add_option("--out-dir", ar_out, "Directory for result CSVs and manifest")->required();
    ar_curve->add_option("--jobs", ar.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    ar_curve->add_option("--seed", ar_seed, "Base seed; overrides REJOPT_SEED and the config");

    std::string manifest_path;
    auto* verify = app.add_subcommand("verify", "Rerun a manifest and compare output digests");
    verify->add_option("manifest", manifest_path, "Manifest JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        const auto start = std::chrono::steady_clock::now();
        if (*generate) {
            const auto outputs = run_generate(gen, gen_out);
            auto m = manifest_header("generate", gen.seed, elapsed(start));
            m["args"] = to_json(gen);
            m["outputs"] = output_digests(outputs);
            write_manifest(gen_out + ".manifest.json", m);
            return kExitOk;
        }
        if (*train) {
            tr.hidden.clear();
            if (hidden_text != "-") {
                std::stringstream ss(hidden_text);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    try {
                        std::size_t used = 0;
                        const long width = std::stol(item, &used);
                        if (used != item.size() || width <= 0) {
                            throw std::invalid_argument(item);
                        }
                        tr.hidden.push_back(static_cast<std::size_t>(width));
                    } catch (const std::exception&) {
                        usage_error("--hidden expects positive widths separated by commas; got '" + hidden_text + "'");
                    }
                }
            }
            tr.data = absolute(tr.data);
            const auto outputs = run_train(tr, tr_out);
            auto m = manifest_header("train", tr.seed, elapsed(start));
            m["args"] = to_json(tr);
            m["inputs"] = input_digests({tr.data});
            m["outputs"] = output_digests(outputs);
            write_manifest(tr_out + ".manifest.json", m);
            return kExitOk;
        }
        if (*ar_curve) {
            ar.seed = ar_seed ? ar_seed : seed_from_env();
            ar.config = absolute(ar.config);
            const auto outcome = run_ar_curve(ar, ar_out);
            auto m = manifest_header("ar-curve", outcome.seed, elapsed(start));
            m["args"] = to_json(ar, outcome.seed);
            m["config"] = outcome.config_text;
            m["inputs"] = input_digests({ar.config});
            m["outputs"] = output_digests(outcome.outputs);
            m["failed_repetitions"] = outcome.failed;
            write_manifest(fs::path(ar_out) / "manifest.json", m);
            if (outcome.failed > 0) {
                std::cerr << "error: " << outcome.failed << " repetitions could not be completed\n";
                return kExitRuntime;
            }
            return kExitOk;
        }
        return verify_manifest(manifest_path);
    } catch (const CommandError& e) {
        std::cerr << "error: " << e.message << '\n';
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
