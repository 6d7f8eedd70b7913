#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

#include "rejopt/dataset.hpp"
#include "rejopt/rng.hpp"

namespace rejopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Parameters of the two-class hyperbolic benchmark on the unit square.
struct SyntheticIParams {
    std::array<double, 4> thresholds{-kInf, -0.5, 0.25, kInf};
    double noise_sigma = 0.125;
    double score_coefficient = 10.0;
};

/// Thresholds of the five-class variant: plateau, zone, plateau, ..., plateau.
inline constexpr std::array<double, 10> kSyntheticIIIThresholds{
    -kInf, -1.5, -1.25, -1.0, -0.5, -0.1, 0.1, 0.5, 1.1, kInf};

/// alpha = coefficient * (x1 - 0.5) * (x2 - 0.5)
double synthetic_score(double x1, double x2, double coefficient = 10.0);

/// Label of a SyntheticI point given its score and both noise draws.
/// `zone_draw` is the uniform variate on (b_-1, b_0) used only in the transition zone.
int synthetic_i_label(double score, double score_noise, double zone_draw,
                      const SyntheticIParams& params = {});

/// Index of the interval of `kSyntheticIIIThresholds` holding `value` (0..8).
int synthetic_iii_interval(double value);

/// Label of a SyntheticIII point. `zone_uniform` is a U(0,1) variate; it is
/// rescaled onto the transition zone the noisy score falls into.
int synthetic_iii_label(double score, double score_noise, double zone_uniform);

/// Draws the label of a SyntheticI point at fixed coordinates.
int sample_synthetic_i_label(double x1, double x2, Rng& rng, const SyntheticIParams& params = {});
int sample_synthetic_iii_label(double x1, double x2, Rng& rng);

LabeledDataset generate_synthetic_i(std::size_t n, std::uint64_t seed, const SyntheticIParams& params = {});
/// n must be even; n/2 points per class.
LabeledDataset generate_synthetic_ii(std::size_t n, std::uint64_t seed);
LabeledDataset generate_synthetic_iii(std::size_t n, std::uint64_t seed);
/// n must be divisible by 3; n/3 points per class.
LabeledDataset generate_synthetic_iv(std::size_t n, std::uint64_t seed);

/// Dispatch on "synthetic-i", "synthetic-ii", "synthetic-iii", "synthetic-iv".
LabeledDataset generate_synthetic(std::string_view name, std::size_t n, std::uint64_t seed);

}  // namespace rejopt
