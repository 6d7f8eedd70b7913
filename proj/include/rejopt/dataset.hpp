#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rejopt/matrix.hpp"

namespace rejopt {

/// Feature matrix plus ordinal labels 1..K. Immutable once constructed.
class LabeledDataset {
public:
    LabeledDataset() = default;

    /// Validates that every label lies in 1..classes, every feature is finite,
    /// and that there is at least one row, one column and two classes.
    LabeledDataset(Matrix features, std::vector<int> labels, int classes);

    [[nodiscard]] const Matrix& features() const noexcept { return features_; }
    [[nodiscard]] const std::vector<int>& labels() const noexcept { return labels_; }
    [[nodiscard]] int classes() const noexcept { return classes_; }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t dims() const noexcept { return features_.cols(); }

    [[nodiscard]] std::span<const double> x(std::size_t i) const { return features_.row(i); }
    [[nodiscard]] int y(std::size_t i) const { return labels_[i]; }

    /// Rows `indices` in the given order; K is kept even if some classes vanish.
    [[nodiscard]] LabeledDataset subset(std::span<const std::size_t> indices) const;

    /// Number of rows of each class, index 0 holding class 1.
    [[nodiscard]] std::vector<std::size_t> class_counts() const;

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

private:
    Matrix features_;
    std::vector<int> labels_;
    int classes_ = 0;
};

/// Header `x1,...,xp,y`; the label column may sit anywhere but must be named `y`.
/// K is the largest observed label.
LabeledDataset load_csv(const std::filesystem::path& path);
LabeledDataset parse_csv(std::istream& in, const std::string& source_name = "<stream>");

/// Writes header `x1..xp,y` and values with 17 significant digits.
void write_csv(const LabeledDataset& data, const std::filesystem::path& path);
void write_csv(const LabeledDataset& data, std::ostream& out);

/// Shortest-exact-enough rendering used by every text writer in the library.
std::string format_number(double value);

struct SplitSpec {
    double train_fraction = 0.25;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

/// Seeded uniform permutation; the first ceil(fraction * size) rows go to train.
Split split_indices(std::size_t size, const SplitSpec& spec);
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, const SplitSpec& spec);

}  // namespace rejopt
