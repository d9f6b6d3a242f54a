#include "moodshift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "moodshift/errors.hpp"

namespace moodshift::synth {

namespace {

constexpr double kPi = std::numbers::pi;

struct Partial {
    double freq_hz;
    double amplitude;  // signed; series sign folded in
};

/// Band-limited partial stack for one note: the waveform's Fourier series at
/// each profile harmonic k·f0, truncated strictly below Nyquist.
std::vector<Partial> partials_for(const InstrumentProfile& profile, double f0, double nyquist) {
    std::vector<Partial> out;
    for (std::size_t k = 1; k <= profile.harmonic_amplitudes.size(); ++k) {
        const double base = profile.harmonic_amplitudes[k - 1];
        if (base <= 0.0) continue;
        const double fk = static_cast<double>(k) * f0;
        switch (profile.waveform) {
            case Waveform::Sine:
                if (fk < nyquist) out.push_back({fk, base});
                break;
            case Waveform::Square:
                for (int m = 1; m * fk < nyquist; m += 2)
                    out.push_back({m * fk, base * (4.0 / kPi) / m});
                break;
            case Waveform::Sawtooth:
                for (int m = 1; m * fk < nyquist; ++m)
                    out.push_back({m * fk, base * (2.0 / kPi) * (m % 2 ? 1.0 : -1.0) / m});
                break;
            case Waveform::Triangle:
                for (int m = 1; m * fk < nyquist; m += 2)
                    out.push_back(
                        {m * fk, base * (8.0 / (kPi * kPi)) * (((m - 1) / 2) % 2 ? -1.0 : 1.0) /
                                     (static_cast<double>(m) * m)});
                break;
        }
    }
    return out;
}

double envelope_before_release(const Adsr& a, double t) {
    if (t < a.attack_s) return t / a.attack_s;
    t -= a.attack_s;
    if (t < a.decay_s) return 1.0 + (a.sustain_level - 1.0) * (t / a.decay_s);
    return a.sustain_level;
}

void mix_note(std::vector<double>& mix, const midi::NoteEvent& note,
              const InstrumentProfile& profile, double seconds_per_tick, int sample_rate) {
    const double f0 = pitch_to_freq(note.pitch);
    const double onset_s = static_cast<double>(note.onset_ticks) * seconds_per_tick;
    const double hold_s = static_cast<double>(note.duration_ticks) * seconds_per_tick;
    const auto partials = partials_for(profile, f0, sample_rate / 2.0);
    if (partials.empty()) return;

    const double level_at_off = envelope_before_release(profile.adsr, hold_s);
    const std::int64_t start = std::llround(onset_s * sample_rate);
    const std::int64_t hold = std::llround(hold_s * sample_rate);
    const std::int64_t total = std::llround((hold_s + profile.adsr.release_s) * sample_rate);
    if (start + total > static_cast<std::int64_t>(mix.size())) return;  // caller sized the buffer

    const double amp_scale = profile.gain * (static_cast<double>(note.velocity) / 127.0);

    // rotation oscillators: sin/cos advanced by a fixed complex rotation
    const std::size_t n = partials.size();
    std::vector<double> s(n, 0.0), c(n, 1.0), cs(n), sn(n), amp(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = 2.0 * kPi * partials[i].freq_hz / sample_rate;
        cs[i] = std::cos(theta);
        sn[i] = std::sin(theta);
        amp[i] = partials[i].amplitude * amp_scale;
    }

    for (std::int64_t j = 0; j < total; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += amp[i] * s[i];
            const double s1 = s[i] * cs[i] + c[i] * sn[i];
            c[i] = c[i] * cs[i] - s[i] * sn[i];
            s[i] = s1;
        }
        double env;
        if (j < hold) {
            env = envelope_before_release(profile.adsr, static_cast<double>(j) / sample_rate);
        } else {
            const double tr = static_cast<double>(j - hold) / sample_rate;
            env = profile.adsr.release_s > 0.0
                      ? level_at_off * (1.0 - tr / profile.adsr.release_s)
                      : 0.0;
            if (env < 0.0) env = 0.0;
        }
        mix[start + j] += env * sum;
    }
}

}  // namespace

std::string waveform_name(Waveform w) {
    switch (w) {
        case Waveform::Sine: return "sine";
        case Waveform::Square: return "square";
        case Waveform::Sawtooth: return "sawtooth";
        case Waveform::Triangle: return "triangle";
    }
    return "?";
}

Waveform waveform_from_name(const std::string& name) {
    if (name == "sine") return Waveform::Sine;
    if (name == "square") return Waveform::Square;
    if (name == "sawtooth") return Waveform::Sawtooth;
    if (name == "triangle") return Waveform::Triangle;
    throw InputError("unknown waveform '" + name + "'");
}

void validate_profile(const InstrumentProfile& p) {
    if (p.harmonic_amplitudes.empty())
        throw std::invalid_argument("profile '" + p.name + "': no harmonic amplitudes");
    for (double a : p.harmonic_amplitudes)
        if (!std::isfinite(a) || a < 0.0)
            throw std::invalid_argument("profile '" + p.name + "': bad harmonic amplitude");
    if (!(p.gain > 0.0 && p.gain <= 1.0))
        throw std::invalid_argument("profile '" + p.name + "': gain must be in (0,1]");
    if (p.adsr.attack_s < 0.0 || p.adsr.decay_s < 0.0 || p.adsr.release_s < 0.0)
        throw std::invalid_argument("profile '" + p.name + "': negative ADSR time");
    if (p.adsr.sustain_level < 0.0 || p.adsr.sustain_level > 1.0)
        throw std::invalid_argument("profile '" + p.name + "': sustain outside [0,1]");
}

double pitch_to_freq(int pitch) {
    if (pitch < 0 || pitch > 127) throw std::invalid_argument("pitch_to_freq: out of range");
    return 440.0 * std::pow(2.0, (pitch - 69) / 12.0);
}

AudioClip render(const midi::MidiSong& song, const harmony::Accompaniment* accompaniment,
                 const InstrumentProfile& melody_profile,
                 const InstrumentProfile& accomp_profile, int sample_rate_hz) {
    if (sample_rate_hz < 8000) throw std::invalid_argument("render: sample rate below 8 kHz");
    validate_profile(melody_profile);
    validate_profile(accomp_profile);

    const double spt = song.seconds_per_tick();
    std::int64_t total_samples = 0;
    auto note_end = [&](const midi::NoteEvent& e, const InstrumentProfile& p) -> std::int64_t {
        const double onset_s = static_cast<double>(e.onset_ticks) * spt;
        const double hold_s = static_cast<double>(e.duration_ticks) * spt;
        return std::llround(onset_s * sample_rate_hz) +
               std::llround((hold_s + p.adsr.release_s) * sample_rate_hz);
    };
    for (const auto& track : song.tracks)
        for (const auto& e : track) total_samples = std::max(total_samples, note_end(e, melody_profile));
    if (accompaniment)
        for (const auto& e : accompaniment->events)
            total_samples = std::max(total_samples, note_end(e, accomp_profile));

    AudioClip clip;
    clip.sample_rate_hz = sample_rate_hz;
    if (total_samples == 0) return clip;

    std::vector<double> mix(static_cast<std::size_t>(total_samples), 0.0);
    for (const auto& track : song.tracks)
        for (const auto& e : track) mix_note(mix, e, melody_profile, spt, sample_rate_hz);
    if (accompaniment)
        for (const auto& e : accompaniment->events)
            mix_note(mix, e, accomp_profile, spt, sample_rate_hz);

    double peak = 0.0;
    for (double v : mix) peak = std::max(peak, std::abs(v));
    const double scale = peak > 0.9 ? 0.9 / peak : 1.0;

    clip.samples.resize(mix.size());
    for (std::size_t i = 0; i < mix.size(); ++i)
        clip.samples[i] = static_cast<float>(mix[i] * scale);
    return clip;
}

const std::vector<InstrumentProfile>& builtin_profiles() {
    static const std::vector<InstrumentProfile> profiles = parse_profiles(R"(
# name        waveform  gain  attack decay sustain release  harmonic amplitudes
piano-like    sine      0.80  0.005  0.30  0.30    0.15     1 0.55 0.33 0.22 0.14 0.08 0.05 0.03
strings-like  sawtooth  0.70  0.120  0.10  0.80    0.30     1 0.60 0.40 0.25
organ-like    sine      0.75  0.010  0.00  1.00    0.05     1 0.80 0.60 0.50 0.40 0.30
chiptune      square    0.65  0.000  0.00  1.00    0.02     1
)");
    return profiles;
}

const InstrumentProfile& profile_by_name(const std::string& name) {
    for (const auto& p : builtin_profiles())
        if (p.name == name) return p;
    throw InputError("unknown instrument profile '" + name + "'");
}

std::vector<InstrumentProfile> parse_profiles(const std::string& text) {
    std::vector<InstrumentProfile> out;
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        InstrumentProfile p;
        std::string wave;
        fields >> p.name >> wave >> p.gain >> p.adsr.attack_s >> p.adsr.decay_s >>
            p.adsr.sustain_level >> p.adsr.release_s;
        if (!fields)
            throw InputError("profiles: line " + std::to_string(lineno) +
                             ": expected name, waveform, gain, ADSR, amplitudes");
        p.waveform = waveform_from_name(wave);
        double amp;
        while (fields >> amp) p.harmonic_amplitudes.push_back(amp);
        try {
            validate_profile(p);
        } catch (const std::invalid_argument& e) {
            throw InputError("profiles: line " + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace moodshift::synth
