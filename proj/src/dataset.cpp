#include "rejopt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rejopt/rng.hpp"

namespace rejopt {

LabeledDataset::LabeledDataset(Matrix features, std::vector<int> labels, int classes)
    : features_(std::move(features)), labels_(std::move(labels)), classes_(classes)
{
    require(classes_ >= 2, "K must be >= 2 (got " + std::to_string(classes_) + ")");
    require(!labels_.empty(), "dataset must contain at least one row");
    require(features_.cols() >= 1, "dataset must contain at least one feature");
    require(features_.rows() == labels_.size(), "feature rows and labels disagree in length");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        require(labels_[i] >= 1 && labels_[i] <= classes_,
                "label " + std::to_string(labels_[i]) + " at row " + std::to_string(i) + " outside 1.." +
                    std::to_string(classes_));
    }
    for (double v : features_.data()) {
        require(std::isfinite(v), "dataset contains a non-finite feature value");
    }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const
{
    Matrix x(indices.size(), dims());
    std::vector<int> y(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = features_.row(indices[r]);
        std::copy(src.begin(), src.end(), x.row(r).begin());
        y[r] = labels_[indices[r]];
    }
    return LabeledDataset(std::move(x), std::move(y), classes_);
}

std::vector<std::size_t> LabeledDataset::class_counts() const
{
    std::vector<std::size_t> counts(static_cast<std::size_t>(classes_), 0);
    for (int k : labels_) {
        ++counts[static_cast<std::size_t>(k - 1)];
    }
    return counts;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    for (auto& f : fields) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) {
            f.remove_prefix(1);
        }
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) {
            f.remove_suffix(1);
        }
    }
    return fields;
}

// Data rows are numbered from 1 after the header; the file line is given as well.
[[noreturn]] void parse_error(const std::string& source, std::size_t line_no, std::size_t data_row,
                              const std::string& what)
{
    std::string where = source + ": line " + std::to_string(line_no);
    if (data_row > 0) {
        where += " (data row " + std::to_string(data_row) + ")";
    }
    fail(ErrorCode::Parse, where + ": " + what);
}

}  // namespace

LabeledDataset parse_csv(std::istream& in, const std::string& source_name)
{
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) {
        parse_error(source_name, line_no, 0, "missing header");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const auto header = split_fields(line);
    const auto label_it = std::find(header.begin(), header.end(), "y");
    if (label_it == header.end()) {
        parse_error(source_name, line_no, 0, "header has no label column 'y'");
    }
    const auto label_col = static_cast<std::size_t>(label_it - header.begin());
    const std::size_t width = header.size();
    if (width < 2) {
        parse_error(source_name, line_no, 0, "header names no feature columns");
    }

    Matrix features;
    std::vector<int> labels;
    std::vector<double> row(width - 1);
    int max_label = 0;
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        ++data_row;
        const auto fields = split_fields(line);
        if (fields.size() != width) {
            parse_error(source_name, line_no, data_row,
                        "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
        }
        std::size_t out = 0;
        for (std::size_t c = 0; c < width; ++c) {
            const auto f = fields[c];
            if (c == label_col) {
                int label = 0;
                const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
                if (ec != std::errc{} || ptr != f.data() + f.size()) {
                    parse_error(source_name, line_no, data_row, "label '" + std::string(f) + "' is not an integer");
                }
                if (label < 1) {
                    parse_error(source_name, line_no, data_row, "label " + std::to_string(label) + " is < 1");
                }
                labels.push_back(label);
                max_label = std::max(max_label, label);
                continue;
            }
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
            if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(value)) {
                parse_error(source_name, line_no, data_row, "non-numeric cell '" + std::string(f) + "' in column " +
                                                      std::string(header[c]));
            }
            row[out++] = value;
        }
        features.append_row(row);
    }
    if (labels.empty()) {
        fail(ErrorCode::Parse, source_name + ": no data rows");
    }
    if (max_label < 2) {
        fail(ErrorCode::InvalidArgument, source_name + ": K must be >= 2 (largest label is " +
                                             std::to_string(max_label) + ")");
    }
    return LabeledDataset(std::move(features), std::move(labels), max_label);
}

LabeledDataset load_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::Io, "cannot open dataset file " + path.string());
    }
    return parse_csv(in, path.string());
}

std::string format_number(double value)
{
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

void write_csv(const LabeledDataset& data, std::ostream& out)
{
    for (std::size_t c = 0; c < data.dims(); ++c) {
        out << 'x' << (c + 1) << ',';
    }
    out << "y\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.x(i)) {
            out << format_number(v) << ',';
        }
        out << data.y(i) << '\n';
    }
}

void write_csv(const LabeledDataset& data, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + path.string());
    }
    write_csv(data, out);
    if (!out) {
        fail(ErrorCode::Io, "write failed for " + path.string());
    }
}

Split split_indices(std::size_t size, const SplitSpec& spec)
{
    require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0, "train fraction must lie in (0, 1)");
    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(order.begin(), order.end());
    auto n_train = static_cast<std::size_t>(std::ceil(spec.train_fraction * static_cast<double>(size) - 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, size);
    Split s;
    s.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return s;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, const SplitSpec& spec)
{
    const auto s = split_indices(data.size(), spec);
    require(!s.test_indices.empty(), "split leaves the test set empty");
    return {data.subset(s.train_indices), data.subset(s.test_indices)};
}

}  // namespace rejopt
