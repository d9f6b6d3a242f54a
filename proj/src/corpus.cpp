#include "moodshift/corpus.hpp"

#include <algorithm>
#include <array>

#include "moodshift/errors.hpp"
#include "moodshift/rng.hpp"

namespace moodshift::emotion {

namespace {

struct QuadrantRecipe {
    double bpm_lo, bpm_hi;
    bool major;
    int base_pitch;  // tonic register before the random tonic offset
    int vel_lo, vel_hi;
    bool eighth_notes;
    const char* profile;
};

const QuadrantRecipe& recipe_for(Quadrant q) {
    static const std::array<QuadrantRecipe, 4> recipes{{
        {150.0, 180.0, true, 72, 100, 118, true, "chiptune"},      // Q1
        {140.0, 170.0, false, 60, 100, 120, true, "chiptune"},     // Q2
        {60.0, 80.0, false, 48, 45, 65, false, "piano-like"},      // Q3
        {65.0, 85.0, true, 60, 50, 70, false, "strings-like"},     // Q4
    }};
    return recipes[static_cast<int>(q)];
}

const std::array<int, 7>& scale_of(bool major) {
    static const std::array<int, 7> major_scale{0, 2, 4, 5, 7, 9, 11};
    static const std::array<int, 7> minor_scale{0, 2, 3, 5, 7, 8, 10};
    return major ? major_scale : minor_scale;
}

}  // namespace

midi::MidiSong make_synthetic_melody(Quadrant q, std::uint64_t seed) {
    const QuadrantRecipe& r = recipe_for(q);
    SplitMix64 rng{hash_mix(seed, static_cast<std::uint64_t>(q) + 1)};

    midi::MidiSong song;
    song.ticks_per_quarter = 480;
    const double bpm = rng.uniform(r.bpm_lo, r.bpm_hi);
    song.tempo_us_per_quarter = static_cast<std::int64_t>(std::llround(60.0e6 / bpm));

    const int tonic_pc = static_cast<int>(rng.uniform_int(0, 11));
    const int base = r.base_pitch + tonic_pc;
    const auto& scale = scale_of(r.major);
    const int velocity =
        r.vel_lo + static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(r.vel_hi - r.vel_lo)));

    const int notes = r.eighth_notes ? 16 : 8;
    const std::int64_t dur = r.eighth_notes ? 240 : 480;
    std::vector<midi::NoteEvent> track;
    int degree = 0;
    std::int64_t cursor = 0;
    for (int i = 0; i < notes; ++i) {
        const int step = static_cast<int>(rng.uniform_int(0, 4)) - 2;
        degree = std::clamp(degree + step, 0, 9);
        const int pitch = base + 12 * (degree / 7) + scale[degree % 7];
        const int vel = std::clamp(velocity + static_cast<int>(rng.uniform_int(0, 6)) - 3, 1, 127);
        track.push_back({cursor, dur, pitch, vel, 0});
        cursor += dur;
    }
    song.tracks.push_back(std::move(track));
    return song;
}

const synth::InstrumentProfile& corpus_profile(Quadrant q) {
    return synth::profile_by_name(recipe_for(q).profile);
}

std::vector<LabeledClip> generate_synthetic_corpus(int n_per_quadrant, std::uint64_t seed) {
    if (n_per_quadrant < 1)
        throw std::invalid_argument("generate_synthetic_corpus: n_per_quadrant must be >= 1");
    std::vector<LabeledClip> out;
    out.reserve(static_cast<std::size_t>(n_per_quadrant) * 4);
    for (int i = 0; i < n_per_quadrant; ++i) {
        for (int qi = 0; qi < 4; ++qi) {
            const Quadrant q = static_cast<Quadrant>(qi);
            const auto melody = make_synthetic_melody(q, hash_mix(seed, static_cast<std::uint64_t>(i)));
            const auto& profile = corpus_profile(q);
            LabeledClip clip;
            clip.audio = synth::render(melody, nullptr, profile, profile);
            clip.quadrant = q;
            out.push_back(std::move(clip));
        }
    }
    return out;
}

}  // namespace moodshift::emotion
