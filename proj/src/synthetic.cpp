#include "rejopt/synthetic.hpp"

#include <algorithm>

namespace rejopt {

double synthetic_score(double x1, double x2, double coefficient)
{
    return coefficient * (x1 - 0.5) * (x2 - 0.5);
}

int synthetic_i_label(double score, double score_noise, double zone_draw, const SyntheticIParams& params)
{
    const double v = score + score_noise;
    const auto& b = params.thresholds;  // b_-2, b_-1, b_0, b_1
    int t = +1;
    if (v < b[1]) {
        t = -1;
    } else if (v < b[2]) {
        t = 0;
    }
    if (t == 0) {
        t = zone_draw < score ? +1 : -1;
    }
    return t < 0 ? 1 : 2;
}

int synthetic_iii_interval(double value)
{
    const auto& b = kSyntheticIIIThresholds;
    const auto it = std::upper_bound(b.begin() + 1, b.end() - 1, value);
    return static_cast<int>(it - (b.begin() + 1));
}

int synthetic_iii_label(double score, double score_noise, double zone_uniform)
{
    const int interval = synthetic_iii_interval(score + score_noise);
    if (interval % 2 == 0) {
        return interval / 2 + 1;
    }
    const int zone = (interval + 1) / 2;
    const double lo = kSyntheticIIIThresholds[static_cast<std::size_t>(interval)];
    const double hi = kSyntheticIIIThresholds[static_cast<std::size_t>(interval) + 1];
    const double draw = lo + (hi - lo) * zone_uniform;
    return draw < score ? zone + 1 : zone;
}

int sample_synthetic_i_label(double x1, double x2, Rng& rng, const SyntheticIParams& params)
{
    const double score = synthetic_score(x1, x2, params.score_coefficient);
    const double noise = rng.normal(0.0, params.noise_sigma);
    const double zone = rng.uniform(params.thresholds[1], params.thresholds[2]);
    return synthetic_i_label(score, noise, zone, params);
}

int sample_synthetic_iii_label(double x1, double x2, Rng& rng)
{
    const SyntheticIParams params;
    const double score = synthetic_score(x1, x2, params.score_coefficient);
    const double noise = rng.normal(0.0, params.noise_sigma);
    return synthetic_iii_label(score, noise, rng.uniform());
}

LabeledDataset generate_synthetic_i(std::size_t n, std::uint64_t seed, const SyntheticIParams& params)
{
    require(n >= 1, "synthetic-i needs n >= 1");
    require(std::is_sorted(params.thresholds.begin(), params.thresholds.end()) &&
                std::adjacent_find(params.thresholds.begin(), params.thresholds.end()) == params.thresholds.end(),
            "synthetic-i thresholds must be strictly increasing");
    Rng rng(seed);
    Matrix x(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform();
        x(i, 1) = rng.uniform();
        y[i] = sample_synthetic_i_label(x(i, 0), x(i, 1), rng, params);
    }
    return LabeledDataset(std::move(x), std::move(y), 2);
}

LabeledDataset generate_synthetic_iii(std::size_t n, std::uint64_t seed)
{
    require(n >= 1, "synthetic-iii needs n >= 1");
    Rng rng(seed);
    Matrix x(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform();
        x(i, 1) = rng.uniform();
        y[i] = sample_synthetic_iii_label(x(i, 0), x(i, 1), rng);
    }
    return LabeledDataset(std::move(x), std::move(y), 5);
}

namespace {

struct GaussianClass {
    double mean;
    double stddev;
};

// Isotropic Gaussians in R^2 plus U[0.025, 0.25] noise on each coordinate,
// `per_class` points per class, written class by class.
LabeledDataset gaussian_mixture(std::span<const GaussianClass> classes, std::size_t per_class, std::uint64_t seed)
{
    Rng rng(seed);
    const std::size_t n = per_class * classes.size();
    Matrix x(n, 2);
    std::vector<int> y(n);
    std::size_t r = 0;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        for (std::size_t i = 0; i < per_class; ++i, ++r) {
            for (std::size_t c = 0; c < 2; ++c) {
                x(r, c) = rng.normal(classes[k].mean, classes[k].stddev) + rng.uniform(0.025, 0.25);
            }
            y[r] = static_cast<int>(k) + 1;
        }
    }
    return LabeledDataset(std::move(x), std::move(y), static_cast<int>(classes.size()));
}

}  // namespace

LabeledDataset generate_synthetic_ii(std::size_t n, std::uint64_t seed)
{
    require(n >= 2 && n % 2 == 0, "synthetic-ii needs an even n >= 2");
    const GaussianClass classes[] = {{-2.0, 3.0}, {2.0, 5.0}};
    return gaussian_mixture(classes, n / 2, seed);
}

LabeledDataset generate_synthetic_iv(std::size_t n, std::uint64_t seed)
{
    require(n >= 3 && n % 3 == 0, "synthetic-iv needs n >= 3 divisible by 3");
    const GaussianClass classes[] = {{-2.0, 3.0}, {2.0, 5.0}, {7.0, 2.0}};
    return gaussian_mixture(classes, n / 3, seed);
}

LabeledDataset generate_synthetic(std::string_view name, std::size_t n, std::uint64_t seed)
{
    if (name == "synthetic-i") {
        return generate_synthetic_i(n, seed);
    }
    if (name == "synthetic-ii") {
        return generate_synthetic_ii(n, seed);
    }
    if (name == "synthetic-iii") {
        return generate_synthetic_iii(n, seed);
    }
    if (name == "synthetic-iv") {
        return generate_synthetic_iv(n, seed);
    }
    fail(ErrorCode::InvalidArgument, "unknown synthetic dataset '" + std::string(name) + "'");
}

}  // namespace rejopt
