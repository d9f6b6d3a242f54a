#pragma once

// Seeded synthetic training data: short melodies whose tempo, mode, register,
// loudness, and timbre correlate with their quadrant label.
//
//   Q1 happy: fast, major, high register, loud, square-wave chiptune
//   Q2 angry: fast, minor, mid register, loud, square-wave chiptune
//   Q3 sad:   slow, minor, low register, quiet, piano-like
//   Q4 calm:  slow, major, mid register, quiet, strings-like

#include <cstdint>
#include <vector>

#include "moodshift/classifier.hpp"
#include "moodshift/midi.hpp"
#include "moodshift/synth.hpp"

namespace moodshift::emotion {

/// Melody with the quadrant's tempo/mode/register/velocity fingerprint.
/// Deterministic in (quadrant, seed).
midi::MidiSong make_synthetic_melody(Quadrant q, std::uint64_t seed);

/// The instrument profile used to render clips of the given quadrant.
const synth::InstrumentProfile& corpus_profile(Quadrant q);

/// 4 * n_per_quadrant in-memory labeled clips, ordered Q1..Q4 within each
/// repetition. Deterministic under seed.
std::vector<LabeledClip> generate_synthetic_corpus(int n_per_quadrant, std::uint64_t seed);

}  // namespace moodshift::emotion
