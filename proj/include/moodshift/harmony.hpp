#pragma once

// Deterministic accompaniment: per-bar chord detection against the diatonic
// triads of a key, phrase-template fitness scoring, and assembly of a backing
// track on a free MIDI channel. Assumes 4/4 meter throughout.

#include <cstdint>
#include <string>
#include <vector>

#include "moodshift/midi.hpp"

namespace moodshift::harmony {

inline constexpr int kBeatsPerBar = 4;
inline constexpr int kAccompanimentVelocity = 72;

enum class ChordQuality { Major, Minor, Diminished };

std::string quality_name(ChordQuality q);

struct ChordLabel {
    int bar_index = 0;
    int root_pc = 0;  // pitch class [0,11]
    ChordQuality quality = ChordQuality::Major;
    bool operator==(const ChordLabel&) const = default;
};

/// One onset within a one-bar phrase pattern. Voicing entries are scale-degree
/// offsets from the chord root (0 = root, 2 = third, 4 = fifth, 7 = octave).
struct TemplateEvent {
    double beat_offset = 0.0;
    std::vector<int> voicing;
    double duration_beats = 0.0;
    bool operator==(const TemplateEvent&) const = default;
};

struct PhraseTemplate {
    std::string id;
    std::vector<TemplateEvent> events;
    double rhythm_density = 0.0;  // events per beat
    bool operator==(const PhraseTemplate&) const = default;
};

struct Accompaniment {
    std::vector<midi::NoteEvent> events;
    int channel = 1;
};

/// Per-bar chord labels for the whole song span. Each bar's duration-weighted
/// pitch-class histogram is scored by dot product against the seven diatonic
/// triads of `key`; ties prefer roots closer to the tonic on the circle of
/// fifths, then the lower scale degree. A silent bar carries the previous
/// bar's label (the tonic triad when there is no previous bar).
std::vector<ChordLabel> detect_chords(const midi::MidiSong& song, const midi::KeyEstimate& key);

/// Template suitability for a bar, in [0,1]: equal parts rhythm-density match
/// and chord-tone fraction of the template's voicing tones.
double fitness(const PhraseTemplate& tpl, const ChordLabel& chord, double melody_bar_density);

/// Accompaniment for `song` using the given template library. Per bar the
/// fitness-argmax template (ties by id) is realized on the detected chord in
/// the register just below the melody's duration-weighted mean pitch. Runs of
/// consecutive bars sharing a template keep one voicing inversion, chosen from
/// `seed`. Identical inputs always produce identical output.
Accompaniment harmonize(const midi::MidiSong& song, const midi::KeyEstimate& key,
                        std::uint64_t seed, const std::vector<PhraseTemplate>& templates);

/// Same, with the built-in template library.
Accompaniment harmonize(const midi::MidiSong& song, const midi::KeyEstimate& key,
                        std::uint64_t seed);

/// Built-in library: ten patterns from whole-note pads to sixteenth-note
/// arpeggios (rhythm densities 0.25 through 4 events per beat).
const std::vector<PhraseTemplate>& builtin_templates();

/// Parses the plain-text template format. One template per non-empty,
/// non-comment line:
///
///   id beat:deg[,deg...]:dur [beat:deg[,deg...]:dur ...]
///
/// e.g. "pad-whole 0:0,2,4:4". Beats and durations may be fractional;
/// degrees are integers. Lines starting with '#' are ignored.
std::vector<PhraseTemplate> parse_templates(const std::string& text);

}  // namespace moodshift::harmony
