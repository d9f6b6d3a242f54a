#pragma once

// Additive synthesis of songs through small instrument profiles, plus
// PCM-16 WAV reading and writing. Rendering is band-limited: no partial at or
// above the Nyquist frequency is ever emitted.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moodshift/harmony.hpp"
#include "moodshift/midi.hpp"

namespace moodshift::synth {

inline constexpr int kDefaultSampleRateHz = 16000;

enum class Waveform { Sine, Square, Sawtooth, Triangle };

std::string waveform_name(Waveform w);
Waveform waveform_from_name(const std::string& name);

struct Adsr {
    double attack_s = 0.0;
    double decay_s = 0.0;
    double sustain_level = 1.0;
    double release_s = 0.0;
};

struct InstrumentProfile {
    std::string name;
    Waveform waveform = Waveform::Sine;
    std::vector<double> harmonic_amplitudes;  // partial k (1-based) at k * f0
    Adsr adsr;
    double gain = 1.0;  // (0,1]
};

/// Throws std::invalid_argument when a profile violates its invariants.
void validate_profile(const InstrumentProfile& profile);

struct AudioClip {
    std::vector<float> samples;
    int sample_rate_hz = kDefaultSampleRateHz;

    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

/// Equal-tempered frequency, A4 (pitch 69) = 440 Hz.
double pitch_to_freq(int pitch);

/// Renders melody plus optional accompaniment into a mono clip. Each note is
/// the profile's waveform series stacked over harmonic_amplitudes, shaped by
/// a linear ADSR envelope and scaled by velocity/127 and the profile gain.
/// The clip ends at the last release tail; the mix is peak-normalized to 0.9
/// only when it exceeds 0.9. Bit-identical output for identical inputs.
AudioClip render(const midi::MidiSong& song, const harmony::Accompaniment* accompaniment,
                 const InstrumentProfile& melody_profile,
                 const InstrumentProfile& accomp_profile,
                 int sample_rate_hz = kDefaultSampleRateHz);

std::vector<std::uint8_t> write_wav(const AudioClip& clip);

/// Parses PCM-16 RIFF/WAVE (mono, or stereo averaged to mono) and linearly
/// resamples to `target_rate_hz` when the file's rate differs.
AudioClip read_wav(std::span<const std::uint8_t> bytes, int target_rate_hz = kDefaultSampleRateHz);

void save_wav(const std::string& path, const AudioClip& clip);
AudioClip load_wav(const std::string& path, int target_rate_hz = kDefaultSampleRateHz);

/// Built-ins: piano-like, strings-like, organ-like, chiptune.
const std::vector<InstrumentProfile>& builtin_profiles();

/// Built-in or parsed profile by name; throws InputError when unknown.
const InstrumentProfile& profile_by_name(const std::string& name);

/// Plain-text profile format, one per non-comment line:
///
///   name waveform gain attack decay sustain release amp1 [amp2 ...]
///
/// e.g. "chiptune square 0.65 0 0 1 0.02 1".
std::vector<InstrumentProfile> parse_profiles(const std::string& text);

}  // namespace moodshift::synth
