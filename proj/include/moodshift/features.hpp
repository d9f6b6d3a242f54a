#pragma once

// Fixed-size audio descriptor for the emotion classifier. Frames of 1024
// samples, hop 512, Hann window. Layout:
//
//   0-1   RMS mean/std                10    low/high band energy ratio
//   2-3   spectral centroid mean/std  11    tempo estimate (BPM)
//   4-5   85% rolloff mean/std        12-23 normalized chroma (C..B)
//   6-7   zero-crossing rate mean/std 24    major-vs-minor profile margin
//   8-9   spectral flux mean/std
//
// Zero-energy fallbacks: centroid/rolloff/tempo/margin 0, band ratio 1,
// chroma uniform. Centroid, rolloff, ZCR, chroma, and tempo are exactly
// invariant to uniform amplitude scaling by powers of two.

#include <array>

#include "moodshift/synth.hpp"

namespace moodshift::emotion {

inline constexpr int kFeatureCount = 25;
inline constexpr int kFrameSize = 1024;
inline constexpr int kHopSize = 512;

using FeatureVector = std::array<double, kFeatureCount>;

/// Throws InputError when the clip is shorter than one frame.
FeatureVector extract_features(const synth::AudioClip& clip);

}  // namespace moodshift::emotion
