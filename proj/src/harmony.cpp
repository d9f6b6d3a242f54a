#include "moodshift/harmony.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "moodshift/errors.hpp"
#include "moodshift/rng.hpp"

namespace moodshift::harmony {

namespace {

const std::array<int, 7>& scale_for(midi::Mode mode) {
    static const std::array<int, 7> major{0, 2, 4, 5, 7, 9, 11};
    static const std::array<int, 7> minor{0, 2, 3, 5, 7, 8, 10};
    return mode == midi::Mode::Major ? major : minor;
}

int euclid_mod(int a, int m) {
    int r = a % m;
    return r < 0 ? r + m : r;
}

int floor_div(int a, int b) {
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

/// Steps between two pitch classes around the circle of fifths (0..6).
int fifths_distance(int a, int b) {
    const int k = euclid_mod(7 * (b - a), 12);
    return std::min(k, 12 - k);
}

struct Triad {
    int degree;
    int root_pc;
    ChordQuality quality;
    std::array<int, 3> pcs;
};

std::array<Triad, 7> diatonic_triads(const midi::KeyEstimate& key) {
    const auto& scale = scale_for(key.mode);
    std::array<Triad, 7> out;
    for (int d = 0; d < 7; ++d) {
        const int root = (key.tonic_pc + scale[d]) % 12;
        const int third = (key.tonic_pc + scale[(d + 2) % 7]) % 12;
        const int fifth = (key.tonic_pc + scale[(d + 4) % 7]) % 12;
        ChordQuality q;
        if (euclid_mod(third - root, 12) == 4)
            q = ChordQuality::Major;
        else if (euclid_mod(fifth - root, 12) == 6)
            q = ChordQuality::Diminished;
        else
            q = ChordQuality::Minor;
        out[d] = {d, root, q, {root, third, fifth}};
    }
    return out;
}

std::vector<int> apply_inversion(const std::vector<int>& voicing, int inversion) {
    std::vector<int> v = voicing;
    if (v.size() < 2) return v;
    for (int k = 0; k < inversion; ++k) {
        auto lowest = std::min_element(v.begin(), v.end());
        *lowest += 7;
    }
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

std::string quality_name(ChordQuality q) {
    switch (q) {
        case ChordQuality::Major: return "major";
        case ChordQuality::Minor: return "minor";
        case ChordQuality::Diminished: return "diminished";
    }
    return "?";
}

std::vector<ChordLabel> detect_chords(const midi::MidiSong& song, const midi::KeyEstimate& key) {
    if (song.note_count() == 0) throw InputError("detect_chords: song has no notes");
    const std::int64_t bar_ticks =
        static_cast<std::int64_t>(kBeatsPerBar) * song.ticks_per_quarter;
    const std::int64_t span = song.span_ticks();
    const int bars = static_cast<int>(std::max<std::int64_t>(1, (span + bar_ticks - 1) / bar_ticks));
    const auto triads = diatonic_triads(key);

    std::vector<ChordLabel> labels;
    labels.reserve(bars);
    for (int bar = 0; bar < bars; ++bar) {
        const std::int64_t lo = bar * bar_ticks;
        const std::int64_t hi = lo + bar_ticks;
        std::array<double, 12> hist{};
        double total = 0.0;
        for (const auto& track : song.tracks) {
            for (const auto& e : track) {
                const std::int64_t overlap = std::min(hi, e.onset_ticks + e.duration_ticks) -
                                             std::max(lo, e.onset_ticks);
                if (overlap <= 0) continue;
                hist[euclid_mod(e.pitch, 12)] += static_cast<double>(overlap);
                total += static_cast<double>(overlap);
            }
        }
        if (total <= 0.0) {
            ChordLabel carried = labels.empty()
                                     ? ChordLabel{bar, triads[0].root_pc, triads[0].quality}
                                     : labels.back();
            carried.bar_index = bar;
            labels.push_back(carried);
            continue;
        }
        const Triad* best = nullptr;
        double best_dot = -1.0;
        for (const Triad& t : triads) {
            const double dot = hist[t.pcs[0]] + hist[t.pcs[1]] + hist[t.pcs[2]];
            if (best == nullptr || dot > best_dot) {
                best = &t;
                best_dot = dot;
                continue;
            }
            if (dot == best_dot) {
                const int df_new = fifths_distance(key.tonic_pc, t.root_pc);
                const int df_best = fifths_distance(key.tonic_pc, best->root_pc);
                // secondary tie-break on the tonic-relative pitch class keeps
                // the labeling stable under transposition of the whole song
                const int rel_new = euclid_mod(t.root_pc - key.tonic_pc, 12);
                const int rel_best = euclid_mod(best->root_pc - key.tonic_pc, 12);
                if (df_new < df_best || (df_new == df_best && rel_new < rel_best)) {
                    best = &t;
                    best_dot = dot;
                }
            }
        }
        labels.push_back({bar, best->root_pc, best->quality});
    }
    return labels;
}

double fitness(const PhraseTemplate& tpl, const ChordLabel&, double melody_bar_density) {
    if (melody_bar_density < 0.0)
        throw std::invalid_argument("fitness: melody_bar_density must be >= 0");
    const double td = tpl.rhythm_density;
    const double md = melody_bar_density;
    const double denom = std::max({td, md, 1e-9});
    const double rhythm = 1.0 - std::abs(td - md) / denom;
    int tones = 0;
    int chordal = 0;
    for (const TemplateEvent& e : tpl.events) {
        for (int offset : e.voicing) {
            ++tones;
            const int step = euclid_mod(offset, 7);
            if (step == 0 || step == 2 || step == 4) ++chordal;
        }
    }
    const double chord_term = tones > 0 ? static_cast<double>(chordal) / tones : 0.0;
    return 0.5 * rhythm + 0.5 * chord_term;
}

Accompaniment harmonize(const midi::MidiSong& song, const midi::KeyEstimate& key,
                        std::uint64_t seed, const std::vector<PhraseTemplate>& templates) {
    if (song.note_count() == 0) throw InputError("harmonize: song has no notes");
    if (templates.empty()) throw std::invalid_argument("harmonize: empty template library");

    const auto chords = detect_chords(song, key);
    const std::int64_t bar_ticks =
        static_cast<std::int64_t>(kBeatsPerBar) * song.ticks_per_quarter;
    const std::int64_t span = song.span_ticks();
    const int bars = static_cast<int>(chords.size());

    std::int64_t weighted = 0;
    std::int64_t total_dur = 0;
    std::array<bool, 16> channel_used{};
    std::vector<int> onsets_per_bar(bars, 0);
    for (const auto& track : song.tracks) {
        for (const auto& e : track) {
            weighted += static_cast<std::int64_t>(e.pitch) * e.duration_ticks;
            total_dur += e.duration_ticks;
            channel_used[e.channel & 0x0f] = true;
            const int bar = static_cast<int>(e.onset_ticks / bar_ticks);
            if (bar >= 0 && bar < bars) ++onsets_per_bar[bar];
        }
    }
    const int anchor = static_cast<int>(weighted / total_dur);

    int channel = -1;
    for (int c = 0; c < 16; ++c) {
        if (c == 9) continue;  // GM percussion
        if (!channel_used[c]) {
            channel = c;
            break;
        }
    }
    if (channel < 0 && !channel_used[9]) channel = 9;
    if (channel < 0) throw InputError("harmonize: melody occupies all sixteen channels");

    // one template per bar: fitness argmax, ties to the lexicographically
    // smallest id, then library order
    std::vector<const PhraseTemplate*> chosen(bars, nullptr);
    for (int bar = 0; bar < bars; ++bar) {
        const double density = static_cast<double>(onsets_per_bar[bar]) / kBeatsPerBar;
        const PhraseTemplate* best = nullptr;
        double best_fit = -1.0;
        for (const PhraseTemplate& tpl : templates) {
            const double f = fitness(tpl, chords[bar], density);
            if (best == nullptr || f > best_fit || (f == best_fit && tpl.id < best->id)) {
                best = &tpl;
                best_fit = f;
            }
        }
        chosen[bar] = best;
    }

    const auto& scale = scale_for(key.mode);
    Accompaniment accomp;
    accomp.channel = channel;
    int inversion = 0;
    for (int bar = 0; bar < bars; ++bar) {
        const PhraseTemplate& tpl = *chosen[bar];
        const bool new_run = bar == 0 || chosen[bar - 1]->id != tpl.id;
        if (new_run) {
            const std::uint64_t h =
                hash_mix(hash_mix(seed, tpl.id), static_cast<std::uint64_t>(bar));
            inversion = static_cast<int>(h % 3);
        }

        const ChordLabel& chord = chords[bar];
        int degree = 0;
        for (int d = 0; d < 7; ++d)
            if ((key.tonic_pc + scale[d]) % 12 == chord.root_pc) {
                degree = d;
                break;
            }
        const int base = anchor - 12;
        int root_pitch = base - euclid_mod(base - chord.root_pc, 12);
        while (root_pitch < 0) root_pitch += 12;
        const int tonic_ref = root_pitch - scale[degree];

        for (const TemplateEvent& ev : tpl.events) {
            const std::int64_t onset =
                bar * bar_ticks + std::llround(ev.beat_offset * song.ticks_per_quarter);
            if (onset >= span) continue;
            std::int64_t dur = std::llround(ev.duration_beats * song.ticks_per_quarter);
            if (dur <= 0) continue;
            if (onset + dur > span) dur = span - onset;
            for (int offset : apply_inversion(ev.voicing, inversion)) {
                const int a = degree + offset;
                int pitch = tonic_ref + 12 * floor_div(a, 7) + scale[euclid_mod(a, 7)];
                while (pitch < 0) pitch += 12;
                while (pitch > 127) pitch -= 12;
                accomp.events.push_back({onset, dur, pitch, kAccompanimentVelocity, channel});
            }
        }
    }
    std::stable_sort(accomp.events.begin(), accomp.events.end(),
                     [](const midi::NoteEvent& a, const midi::NoteEvent& b) {
                         return a.onset_ticks < b.onset_ticks;
                     });
    return accomp;
}

Accompaniment harmonize(const midi::MidiSong& song, const midi::KeyEstimate& key,
                        std::uint64_t seed) {
    return harmonize(song, key, seed, builtin_templates());
}

const std::vector<PhraseTemplate>& builtin_templates() {
    static const std::vector<PhraseTemplate> library = parse_templates(R"(
# id  beat:degrees:duration ...
pad-whole        0:0,2,4:4
pad-halves       0:0,2,4:2 2:0,2,4:2
drone-fifth      0:0,4:2 2:0,4:2
swell-pad        0:0,2,4:1.5 1.5:0,2,4:1.5 3:0,2,4:1
quarter-chords   0:0,2,4:1 1:0,2,4:1 2:0,2,4:1 3:0,2,4:1
boom-chick       0:0:1 1:2,4:1 2:0:1 3:2,4:1
octave-pulse     0:0:0.5 0.5:7:0.5 1:0:0.5 1.5:7:0.5 2:0:0.5 2.5:7:0.5 3:0:0.5 3.5:7:0.5
alberti-eighths  0:0:0.5 0.5:4:0.5 1:2:0.5 1.5:4:0.5 2:0:0.5 2.5:4:0.5 3:2:0.5 3.5:4:0.5
arp-up-eighths   0:0:0.5 0.5:2:0.5 1:4:0.5 1.5:7:0.5 2:0:0.5 2.5:2:0.5 3:4:0.5 3.5:7:0.5
arp-sixteenths   0:0:0.25 0.25:2:0.25 0.5:4:0.25 0.75:7:0.25 1:0:0.25 1.25:2:0.25 1.5:4:0.25 1.75:7:0.25 2:0:0.25 2.25:2:0.25 2.5:4:0.25 2.75:7:0.25 3:0:0.25 3.25:2:0.25 3.5:4:0.25 3.75:7:0.25
)");
    return library;
}

std::vector<PhraseTemplate> parse_templates(const std::string& text) {
    std::vector<PhraseTemplate> out;
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        PhraseTemplate tpl;
        fields >> tpl.id;
        std::string token;
        while (fields >> token) {
            TemplateEvent ev;
            std::size_t c1 = token.find(':');
            std::size_t c2 = token.rfind(':');
            if (c1 == std::string::npos || c2 == c1)
                throw InputError("templates: line " + std::to_string(lineno) +
                                 ": event must be beat:degrees:duration");
            try {
                ev.beat_offset = std::stod(token.substr(0, c1));
                ev.duration_beats = std::stod(token.substr(c2 + 1));
                std::istringstream degrees(token.substr(c1 + 1, c2 - c1 - 1));
                std::string deg;
                while (std::getline(degrees, deg, ',')) ev.voicing.push_back(std::stoi(deg));
            } catch (const std::exception&) {
                throw InputError("templates: line " + std::to_string(lineno) + ": bad number");
            }
            if (ev.voicing.empty() || ev.beat_offset < 0.0 ||
                ev.beat_offset >= static_cast<double>(kBeatsPerBar) || ev.duration_beats <= 0.0)
                throw InputError("templates: line " + std::to_string(lineno) +
                                 ": event outside a 4/4 bar");
            tpl.events.push_back(std::move(ev));
        }
        if (tpl.id.empty() || tpl.events.empty())
            throw InputError("templates: line " + std::to_string(lineno) +
                             ": need an id and at least one event");
        tpl.rhythm_density = static_cast<double>(tpl.events.size()) / kBeatsPerBar;
        out.push_back(std::move(tpl));
    }
    return out;
}

}  // namespace moodshift::harmony
