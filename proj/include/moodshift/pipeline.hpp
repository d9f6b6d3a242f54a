#pragma once

// End-to-end orchestration: baseline emotion analysis of a melody, the
// transposition-by-instrument candidate sweep, best-candidate selection, and
// report serialization (JSON + CSV).

#include <cstdint>
#include <string>
#include <vector>

#include "moodshift/circumplex.hpp"
#include "moodshift/classifier.hpp"
#include "moodshift/harmony.hpp"
#include "moodshift/midi.hpp"
#include "moodshift/synth.hpp"

namespace moodshift::pipeline {

/// One sweep entry. `status` is "ok" on success, otherwise the error text;
/// failed rows keep zeroed probabilities and a NaN distance.
struct TransformationCandidate {
    int semitone_offset = 0;
    std::string target_tonic;  // e.g. "A3"
    std::string profile_name;
    emotion::QuadrantProbs probs_before;
    emotion::QuadrantProbs probs_after;
    circumplex::CircumplexPoint point_after;
    double distance_to_target = 0.0;
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
};

struct SweepReport {
    std::string input_name;
    midi::KeyEstimate input_key;
    int range_low = 0;    // lowest target tonic pitch
    int range_high = 0;   // highest target tonic pitch
    std::vector<std::string> profile_names;  // in swept (name-sorted) order
    double radius = 1.0;
    std::uint64_t seed = 0;
    circumplex::EmotionTarget target;
    std::vector<TransformationCandidate> candidates;  // canonical order: offset, then profile
    int best_index = -1;                              // -1 when every candidate failed
};

/// Probabilities of the untouched melody rendered with `profile`.
emotion::QuadrantProbs baseline(const midi::MidiSong& melody,
                                const synth::InstrumentProfile& profile,
                                const emotion::ClassifierModel& model,
                                int sample_rate_hz = synth::kDefaultSampleRateHz);

struct TransformResult {
    emotion::QuadrantProbs probs;
    synth::AudioClip audio;
    midi::MidiSong combined;  // transposed melody plus the accompaniment track
    midi::KeyEstimate key;    // detected on the transposed melody
    int folded_notes = 0;
};

/// Transpose, re-detect the key, harmonize in it, render melody plus
/// accompaniment with the same profile, and classify. With accompaniment
/// disabled and offset 0 the probabilities equal the baseline's.
TransformResult transform_once(const midi::MidiSong& melody, int semitone_offset,
                               const synth::InstrumentProfile& profile,
                               const emotion::ClassifierModel& model, std::uint64_t seed,
                               bool with_accompaniment = true,
                               int sample_rate_hz = synth::kDefaultSampleRateHz);

/// Evaluates every (transposition target, profile) pair concurrently. The
/// report is identical for any worker count: candidates sit in canonical
/// order and each is a pure function of the inputs. Per-candidate failures
/// are recorded in `status` rather than aborting the sweep. Baseline
/// probabilities are computed once per profile.
SweepReport sweep(const midi::MidiSong& melody, int range_low, int range_high,
                  const std::vector<synth::InstrumentProfile>& profiles,
                  const emotion::ClassifierModel& model, const circumplex::EmotionTarget& target,
                  std::uint64_t seed, int workers, double radius = 1.0,
                  const std::string& input_name = "melody",
                  int sample_rate_hz = synth::kDefaultSampleRateHz);

/// Smallest distance wins; exact ties fall to the smaller |offset|, then to
/// the lexicographically smaller profile name. Throws DataError when every
/// candidate failed.
const TransformationCandidate& select_best(const SweepReport& report);

/// Human-readable key, e.g. "B minor".
std::string key_name(const midi::KeyEstimate& key);

/// Versioned JSON document: input metadata, config echo (radius, range,
/// profiles, seed, never the worker count), target, candidates, best_index.
std::string report_to_json(const SweepReport& report);

/// Flat table: offset,target_tonic,profile,p1_before..p4_before,
/// p1_after..p4_after,x,y,distance,status.
std::string report_to_csv(const SweepReport& report);

}  // namespace moodshift::pipeline
