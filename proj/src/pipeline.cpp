#include "moodshift/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include <json.hpp>

#include "moodshift/errors.hpp"
#include "moodshift/features.hpp"

namespace moodshift::pipeline {

namespace {

const char* kPcNames[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                            "F#", "G",  "G#", "A",  "A#", "B"};

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

nlohmann::ordered_json probs_json(const emotion::QuadrantProbs& p) {
    return nlohmann::ordered_json::array({p.p1, p.p2, p.p3, p.p4});
}

/// Argmin with the tie rule; -1 when nothing succeeded.
int best_candidate_index(const std::vector<TransformationCandidate>& candidates) {
    int best = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& cand = candidates[i];
        if (!cand.ok()) continue;
        if (best < 0) {
            best = static_cast<int>(i);
            continue;
        }
        const auto& lead = candidates[best];
        const bool wins =
            cand.distance_to_target < lead.distance_to_target ||
            (cand.distance_to_target == lead.distance_to_target &&
             (std::abs(cand.semitone_offset) < std::abs(lead.semitone_offset) ||
              (std::abs(cand.semitone_offset) == std::abs(lead.semitone_offset) &&
               cand.profile_name < lead.profile_name)));
        if (wins) best = static_cast<int>(i);
    }
    return best;
}

}  // namespace

std::string key_name(const midi::KeyEstimate& key) {
    return std::string(kPcNames[key.tonic_pc]) + " " + midi::mode_name(key.mode);
}

emotion::QuadrantProbs baseline(const midi::MidiSong& melody,
                                const synth::InstrumentProfile& profile,
                                const emotion::ClassifierModel& model, int sample_rate_hz) {
    const synth::AudioClip clip = synth::render(melody, nullptr, profile, profile, sample_rate_hz);
    return emotion::classify(model, emotion::extract_features(clip));
}

TransformResult transform_once(const midi::MidiSong& melody, int semitone_offset,
                               const synth::InstrumentProfile& profile,
                               const emotion::ClassifierModel& model, std::uint64_t seed,
                               bool with_accompaniment, int sample_rate_hz) {
    const midi::TransposeResult shifted = midi::transpose(melody, semitone_offset);

    TransformResult out;
    out.folded_notes = shifted.folded_notes;
    out.key = midi::detect_key(shifted.song);
    out.combined = shifted.song;

    if (with_accompaniment) {
        const harmony::Accompaniment accomp = harmony::harmonize(shifted.song, out.key, seed);
        out.combined.tracks.push_back(accomp.events);
        const synth::AudioClip clip =
            synth::render(shifted.song, &accomp, profile, profile, sample_rate_hz);
        out.audio = clip;
    } else {
        out.audio = synth::render(shifted.song, nullptr, profile, profile, sample_rate_hz);
    }
    out.probs = emotion::classify(model, emotion::extract_features(out.audio));
    return out;
}

SweepReport sweep(const midi::MidiSong& melody, int range_low, int range_high,
                  const std::vector<synth::InstrumentProfile>& profiles,
                  const emotion::ClassifierModel& model, const circumplex::EmotionTarget& target,
                  std::uint64_t seed, int workers, double radius, const std::string& input_name,
                  int sample_rate_hz) {
    if (profiles.empty()) throw InputError("sweep: need at least one instrument profile");
    if (range_low > range_high)
        throw InputError("sweep: lowest target above highest (" +
                         midi::pitch_to_note_name(range_low) + " > " +
                         midi::pitch_to_note_name(range_high) + ")");
    if (workers < 1) throw std::invalid_argument("sweep: worker count must be positive");
    if (!(radius > 0.0)) throw std::invalid_argument("sweep: radius must be positive");
    if (!target.quadrant && !target.point)
        throw std::invalid_argument("sweep: target is unset");
    if (target.point && target.point->r != radius)
        throw std::invalid_argument("sweep: target radius differs from the sweep radius");

    SweepReport report;
    report.input_name = input_name;
    report.input_key = midi::detect_key(melody);
    report.range_low = range_low;
    report.range_high = range_high;
    report.radius = radius;
    report.seed = seed;
    report.target = target;

    std::vector<const synth::InstrumentProfile*> order;
    order.reserve(profiles.size());
    for (const auto& p : profiles) order.push_back(&p);
    std::sort(order.begin(), order.end(),
              [](const synth::InstrumentProfile* a, const synth::InstrumentProfile* b) {
                  return a->name < b->name;
              });
    for (const auto* p : order) report.profile_names.push_back(p->name);

    // one baseline per profile; a failure here marks the profile's rows
    const std::size_t n_profiles = order.size();
    std::vector<emotion::QuadrantProbs> base_probs(n_profiles);
    std::vector<std::string> base_status(n_profiles, "ok");
    for (std::size_t p = 0; p < n_profiles; ++p) {
        try {
            base_probs[p] = baseline(melody, *order[p], model, sample_rate_hz);
        } catch (const std::exception& e) {
            base_status[p] = std::string("baseline failed: ") + e.what();
        }
    }

    const auto targets = midi::enumerate_transpositions(melody, range_low, range_high);
    const std::size_t total = targets.size() * n_profiles;
    report.candidates.resize(total);

    std::atomic<std::size_t> cursor{0};
    auto evaluate_one = [&](std::size_t i) {
        const auto& tt = targets[i / n_profiles];
        const std::size_t p = i % n_profiles;
        TransformationCandidate& cand = report.candidates[i];
        cand.semitone_offset = tt.semitone_offset;
        cand.target_tonic = tt.tonic_name;
        cand.profile_name = order[p]->name;
        cand.point_after = circumplex::CircumplexPoint{0.0, 0.0, radius};
        cand.distance_to_target = std::numeric_limits<double>::quiet_NaN();
        if (base_status[p] != "ok") {
            cand.probs_before = {0.0, 0.0, 0.0, 0.0};
            cand.probs_after = {0.0, 0.0, 0.0, 0.0};
            cand.status = base_status[p];
            return;
        }
        cand.probs_before = base_probs[p];
        try {
            const TransformResult result = transform_once(melody, tt.semitone_offset, *order[p],
                                                          model, seed, true, sample_rate_hz);
            cand.probs_after = result.probs;
            cand.point_after = circumplex::map_to_plane(result.probs, radius);
            cand.distance_to_target = circumplex::distance(cand.point_after, target);
            cand.status = "ok";
        } catch (const std::exception& e) {
            cand.probs_after = {0.0, 0.0, 0.0, 0.0};
            cand.status = e.what();
        }
    };

    const int pool = static_cast<int>(std::min<std::size_t>(workers, total));
    if (pool <= 1) {
        for (std::size_t i = 0; i < total; ++i) evaluate_one(i);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (int w = 0; w < pool; ++w)
            threads.emplace_back([&] {
                for (std::size_t i = cursor.fetch_add(1); i < total; i = cursor.fetch_add(1))
                    evaluate_one(i);
            });
        for (auto& t : threads) t.join();
    }

    report.best_index = best_candidate_index(report.candidates);
    return report;
}

const TransformationCandidate& select_best(const SweepReport& report) {
    const int best = best_candidate_index(report.candidates);
    if (best < 0) throw DataError("select_best: no successful candidate in the report");
    return report.candidates[best];
}

std::string report_to_json(const SweepReport& report) {
    nlohmann::ordered_json doc;
    doc["format"] = "moodshift-report";
    doc["version"] = 1;
    doc["input"] = {{"name", report.input_name},
                    {"detected_key", key_name(report.input_key)},
                    {"key_confidence", report.input_key.confidence}};
    doc["config"] = {{"range_low", midi::pitch_to_note_name(report.range_low)},
                     {"range_high", midi::pitch_to_note_name(report.range_high)},
                     {"profiles", report.profile_names},
                     {"radius", report.radius},
                     {"seed", report.seed}};
    if (report.target.quadrant) {
        doc["target"] = {{"kind", "quadrant"},
                         {"name", emotion::quadrant_name(*report.target.quadrant)},
                         {"emotion", emotion::quadrant_emotion(*report.target.quadrant)}};
    } else if (report.target.point) {
        doc["target"] = {{"kind", "point"},
                         {"valence", report.target.point->x},
                         {"arousal", report.target.point->y}};
    }

    doc["candidates"] = nlohmann::ordered_json::array();
    for (const auto& c : report.candidates) {
        nlohmann::ordered_json row;
        row["offset"] = c.semitone_offset;
        row["target_tonic"] = c.target_tonic;
        row["profile"] = c.profile_name;
        row["before"] = probs_json(c.probs_before);
        row["after"] = probs_json(c.probs_after);
        row["x"] = c.point_after.x;
        row["y"] = c.point_after.y;
        row["distance"] = c.distance_to_target;  // NaN serializes as null
        row["status"] = c.status;
        doc["candidates"].push_back(std::move(row));
    }
    doc["best_index"] = report.best_index;
    return doc.dump(2) + "\n";
}

std::string report_to_csv(const SweepReport& report) {
    std::string out =
        "offset,target_tonic,profile,"
        "p1_before,p2_before,p3_before,p4_before,"
        "p1_after,p2_after,p3_after,p4_after,x,y,distance,status\n";
    for (const auto& c : report.candidates) {
        out += std::to_string(c.semitone_offset) + ',' + c.target_tonic + ',' +
               csv_escape(c.profile_name) + ',';
        for (int i = 0; i < 4; ++i) out += fmt9(c.probs_before[i]) + ',';
        for (int i = 0; i < 4; ++i) out += fmt9(c.probs_after[i]) + ',';
        out += fmt9(c.point_after.x) + ',' + fmt9(c.point_after.y) + ',' +
               fmt9(c.distance_to_target) + ',' + csv_escape(c.status) + '\n';
    }
    return out;
}

}  // namespace moodshift::pipeline
