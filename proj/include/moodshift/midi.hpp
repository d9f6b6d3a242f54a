#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace moodshift::midi {

/// A single resolved note. 69 = A4, middle C (C4) = 60.
struct NoteEvent {
    std::int64_t onset_ticks = 0;
    std::int64_t duration_ticks = 1;
    int pitch = 60;
    int velocity = 64;
    int channel = 0;

    friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

/// Parsed symbolic music. Events within each track are sorted by onset.
/// Only the first tempo event of a file is honored; clips at this scale do
/// not need tempo maps.
struct MidiSong {
    int ticks_per_quarter = 480;
    std::int64_t tempo_us_per_quarter = 500000;
    std::vector<std::vector<NoteEvent>> tracks;

    std::size_t note_count() const {
        std::size_t n = 0;
        for (const auto& t : tracks) n += t.size();
        return n;
    }

    /// End of the last note in ticks (0 when empty).
    std::int64_t span_ticks() const;

    double seconds_per_tick() const {
        return static_cast<double>(tempo_us_per_quarter) * 1e-6 / ticks_per_quarter;
    }
};

enum class Mode { Major, Minor };

inline const char* mode_name(Mode m) { return m == Mode::Major ? "major" : "minor"; }

struct KeyEstimate {
    int tonic_pc = 0;  // 0 = C ... 11 = B
    Mode mode = Mode::Major;
    double confidence = 0.0;  // normalized correlation margin over the runner-up, in [0,1]
};

struct ParseStats {
    int dangling_note_ons = 0;  // note-ons paired with track end
};

/// Parse a Standard MIDI File (formats 0 and 1). Note-on/off pairs are
/// resolved FIFO per (channel, pitch); a dangling note-on is closed at track
/// end and counted in `stats`. Throws InputError on malformed chunks, SMPTE
/// divisions, and format 2 files.
MidiSong parse_midi(std::span<const std::uint8_t> bytes, ParseStats* stats = nullptr);

/// Serialize to SMF (format 0 for a single track, format 1 otherwise).
/// parse_midi(write_midi(s)) is event-equivalent to s provided no two notes
/// with the same (channel, pitch) overlap in time; overlapping identical
/// notes are inherently ambiguous in SMF note-on/off pairing.
std::vector<std::uint8_t> write_midi(const MidiSong& song);

struct TransposeResult {
    MidiSong song;
    int folded_notes = 0;  // notes folded back into [0,127] by whole octaves
};

/// Chromatic transposition. Pitches leaving [0,127] are folded back by whole
/// octaves and tallied, so full-range sweeps never abort.
TransposeResult transpose(const MidiSong& song, int semitones);

/// Krumhansl-Schmuckler key estimate: Pearson correlation of the
/// duration-weighted pitch-class histogram against the 24 rotated
/// Krumhansl-Kessler profiles. Throws InputError on an empty song.
KeyEstimate detect_key(const MidiSong& song);

struct TranspositionTarget {
    std::string tonic_name;  // e.g. "A3"
    int target_pitch = 0;
    int semitone_offset = 0;  // offset that moves the detected tonic (octave 4) to target
};

/// One entry per semitone target in [lowest_target, highest_target]. The
/// detected tonic is anchored in octave 4 (pitch 60 + tonic_pc); C0..B8
/// yields exactly 108 entries.
std::vector<TranspositionTarget> enumerate_transpositions(const MidiSong& song,
                                                          int lowest_target,
                                                          int highest_target);

/// Duration-weighted pitch-class histogram in raw tick units.
std::array<double, 12> pitch_class_histogram(const MidiSong& song);

/// "C4" -> 60, "F#2" -> 42, "Bb3" -> 58. Throws InputError on bad names.
int note_name_to_pitch(const std::string& name);

/// 60 -> "C4". Sharps are canonical.
std::string pitch_to_note_name(int pitch);

/// Event-content equality: same resolution, same tempo, and equal multisets
/// of note events (track boundaries are not compared).
bool events_equivalent(const MidiSong& a, const MidiSong& b);

}  // namespace moodshift::midi
