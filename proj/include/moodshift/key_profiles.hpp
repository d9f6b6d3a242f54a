#pragma once

#include <array>

namespace moodshift {

// Krumhansl-Kessler probe-tone profiles, index 0 = tonic.
inline constexpr std::array<double, 12> kKkMajorProfile = {
    6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
inline constexpr std::array<double, 12> kKkMinorProfile = {
    6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

/// Pearson correlation between two 12-bin vectors; 0 when either side has
/// zero variance.
double pitch_class_correlation(const std::array<double, 12>& a,
                               const std::array<double, 12>& b);

}  // namespace moodshift
