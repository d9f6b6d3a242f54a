// moodshift: shift the emotional color of a MIDI melody toward a target
// mood by sweeping key transpositions and instrument timbres, scoring each
// candidate with a trained four-quadrant emotion classifier.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "moodshift/circumplex.hpp"
#include "moodshift/classifier.hpp"
#include "moodshift/corpus.hpp"
#include "moodshift/errors.hpp"
#include "moodshift/features.hpp"
#include "moodshift/harmony.hpp"
#include "moodshift/midi.hpp"
#include "moodshift/pipeline.hpp"
#include "moodshift/synth.hpp"

namespace fs = std::filesystem;
using namespace moodshift;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("failed writing " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("failed writing " + path.string());
}

fs::path ensure_out_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

bool looks_like_midi(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 4 && bytes[0] == 'M' && bytes[1] == 'T' && bytes[2] == 'h' &&
           bytes[3] == 'd';
}

bool looks_like_wav(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 4 && bytes[0] == 'R' && bytes[1] == 'I' && bytes[2] == 'F' &&
           bytes[3] == 'F';
}

midi::MidiSong load_midi_file(const std::string& path) {
    const auto bytes = read_bytes(path);
    if (!looks_like_midi(bytes)) throw InputError(path + " is not a MIDI file");
    try {
        return midi::parse_midi(bytes);
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

std::vector<synth::InstrumentProfile> resolve_profiles(const std::string& spec) {
    std::vector<synth::InstrumentProfile> profiles;
    std::string token;
    std::istringstream stream(spec);
    while (std::getline(stream, token, ',')) {
        const auto begin = token.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        const auto end = token.find_last_not_of(" \t");
        profiles.push_back(synth::profile_by_name(token.substr(begin, end - begin + 1)));
    }
    if (profiles.empty()) throw InputError("no instrument profiles given");
    return profiles;
}

std::string default_profiles_spec() {
    std::string spec;
    for (const auto& p : synth::builtin_profiles()) {
        if (!spec.empty()) spec += ',';
        spec += p.name;
    }
    return spec;
}

int default_workers() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

void print_probs(const emotion::QuadrantProbs& probs) {
    for (int q = 0; q < 4; ++q)
        std::printf("  %s (%s): %.4f\n", emotion::quadrant_name(emotion::quadrant_from_index(q)),
                    emotion::quadrant_emotion(emotion::quadrant_from_index(q)), probs[q]);
}

void print_confusion(const emotion::EvalResult& result) {
    std::printf("            predicted\n");
    std::printf("  truth     Q1    Q2    Q3    Q4\n");
    for (int t = 0; t < 4; ++t) {
        std::printf("  %s  ", emotion::quadrant_name(emotion::quadrant_from_index(t)));
        for (int p = 0; p < 4; ++p) std::printf("%6d", result.confusion[t][p]);
        std::printf("\n");
    }
}

std::string confusion_csv(const emotion::EvalResult& result) {
    std::string csv = "truth,Q1,Q2,Q3,Q4\n";
    for (int t = 0; t < 4; ++t) {
        csv += emotion::quadrant_name(emotion::quadrant_from_index(t));
        for (int p = 0; p < 4; ++p) csv += "," + std::to_string(result.confusion[t][p]);
        csv += "\n";
    }
    return csv;
}

struct RangeFlags {
    std::string low = "C0";
    std::string high = "B8";
};

struct SweepFlags {
    RangeFlags range;
    std::string profiles_spec = default_profiles_spec();
    std::string target_text;
    double radius = 1.0;
    std::uint64_t seed = 42;
    int workers = default_workers();
    int sample_rate = synth::kDefaultSampleRateHz;
};

void add_sweep_flags(CLI::App* cmd, SweepFlags& flags) {
    cmd->add_option("--target", flags.target_text,
                    "target emotion: quadrant (q1/happy, q2/angry, q3/sad, q4/calm) or "
                    "explicit \"valence,arousal\" point")
        ->required();
    cmd->add_option("--range-low", flags.range.low,
                    "lowest target tonic note (default C0)");
    cmd->add_option("--range-high", flags.range.high,
                    "highest target tonic note (default B8)");
    cmd->add_option("--profiles", flags.profiles_spec,
                    "comma-separated instrument profiles (default: all built in)");
    cmd->add_option("--radius", flags.radius, "circumplex radius (default 1)");
    cmd->add_option("--seed", flags.seed, "accompaniment seed (default 42)");
    cmd->add_option("--workers", flags.workers, "worker threads (default: CPU count)");
    cmd->add_option("--sample-rate", flags.sample_rate, "render sample rate in Hz");
}

pipeline::SweepReport run_sweep(const midi::MidiSong& melody, const SweepFlags& flags,
                                const emotion::ClassifierModel& model,
                                const std::string& input_name) {
    const auto target = circumplex::parse_target(flags.target_text, flags.radius);
    const auto profiles = resolve_profiles(flags.profiles_spec);
    const int low = midi::note_name_to_pitch(flags.range.low);
    const int high = midi::note_name_to_pitch(flags.range.high);
    return pipeline::sweep(melody, low, high, profiles, model, target, flags.seed, flags.workers,
                           flags.radius, input_name, flags.sample_rate);
}

void write_report_files(const pipeline::SweepReport& report, const fs::path& json_path,
                        const fs::path& csv_path) {
    write_text(json_path, pipeline::report_to_json(report));
    write_text(csv_path, pipeline::report_to_csv(report));
}

// ---- subcommand bodies ----

struct TrainArgs {
    std::string manifest;
    std::string out_dir;
    emotion::TrainingConfig config;
    double v_threshold = emotion::kDefaultVaThreshold;
    double a_threshold = emotion::kDefaultVaThreshold;
};

int cmd_train(const TrainArgs& args) {
    const auto corpus = emotion::load_manifest(args.manifest);
    const auto model = emotion::train(corpus, args.config, args.v_threshold, args.a_threshold);
    const fs::path out = ensure_out_dir(args.out_dir);
    emotion::save_model(model, (out / "model.txt").string());
    emotion::write_loss_csv(model, (out / "loss.csv").string());
    std::printf("trained on %zu clips: %d epochs, %zu steps\n", corpus.size(), model.epochs,
                model.train_loss.size());
    std::printf("final train loss %.6f, final validation loss %.6f\n", model.train_loss.back(),
                model.val_loss.back());
    std::printf("wrote %s and %s\n", (out / "model.txt").string().c_str(),
                (out / "loss.csv").string().c_str());
    return 0;
}

struct EvalArgs {
    std::string manifest;
    std::string model_path;
    std::string out_dir;
    double v_threshold = emotion::kDefaultVaThreshold;
    double a_threshold = emotion::kDefaultVaThreshold;
};

int cmd_eval(const EvalArgs& args) {
    const auto model = emotion::load_model(args.model_path);
    const auto corpus = emotion::load_manifest(args.manifest);
    const auto result = emotion::evaluate(model, corpus, args.v_threshold, args.a_threshold);
    std::printf("clips: %zu\n", corpus.size());
    std::printf("accuracy: %.4f\n", result.accuracy);
    print_confusion(result);
    if (!args.out_dir.empty()) {
        const fs::path out = ensure_out_dir(args.out_dir);
        write_text(out / "confusion.csv", confusion_csv(result));
        std::printf("wrote %s\n", (out / "confusion.csv").string().c_str());
    }
    return 0;
}

struct AnalyzeArgs {
    std::string input;
    std::string model_path;
    std::string out_dir;
    std::string profile = "piano-like";
    double radius = 1.0;
    int sample_rate = synth::kDefaultSampleRateHz;
};

int cmd_analyze(const AnalyzeArgs& args) {
    const auto model = emotion::load_model(args.model_path);
    const auto bytes = read_bytes(args.input);

    synth::AudioClip clip;
    if (looks_like_midi(bytes)) {
        const auto song = midi::parse_midi(bytes);
        const auto& profile = synth::profile_by_name(args.profile);
        clip = synth::render(song, nullptr, profile, profile, args.sample_rate);
    } else if (looks_like_wav(bytes)) {
        clip = synth::read_wav(bytes, args.sample_rate);
    } else {
        throw InputError(args.input + " is neither a MIDI nor a WAV file");
    }

    const auto probs = emotion::classify(model, emotion::extract_features(clip));
    const auto point = circumplex::map_to_plane(probs, args.radius);
    const auto quadrant = emotion::predict_quadrant(probs);

    std::printf("input: %s (%.2f s)\n", args.input.c_str(), clip.duration_s());
    print_probs(probs);
    std::printf("quadrant: %s (%s)\n", emotion::quadrant_name(quadrant),
                emotion::quadrant_emotion(quadrant));
    std::printf("plane: valence %.4f, arousal %.4f\n", point.x, point.y);

    if (!args.out_dir.empty()) {
        const fs::path out = ensure_out_dir(args.out_dir);
        const std::string label = fs::path(args.input).stem().string();
        const std::string svg = circumplex::plot_svg({{label, point, {}}});
        write_text(out / "analysis.svg", svg);
        std::printf("wrote %s\n", (out / "analysis.svg").string().c_str());
    }
    return 0;
}

struct TransformArgs {
    std::string input;
    std::string model_path;
    std::string out_dir;
    SweepFlags sweep;
};

int cmd_transform(const TransformArgs& args) {
    const auto model = emotion::load_model(args.model_path);
    const auto melody = load_midi_file(args.input);
    const std::string name = fs::path(args.input).filename().string();

    const auto report = run_sweep(melody, args.sweep, model, name);
    const auto& best = pipeline::select_best(report);

    // re-run the winning candidate to recover its audio and combined song
    const auto& profile = synth::profile_by_name(best.profile_name);
    const auto result = pipeline::transform_once(melody, best.semitone_offset, profile, model,
                                                 args.sweep.seed, true, args.sweep.sample_rate);

    const fs::path out = ensure_out_dir(args.out_dir);
    write_bytes(out / "best.mid", midi::write_midi(result.combined));
    synth::save_wav((out / "best.wav").string(), result.audio);
    write_report_files(report, out / "report.json", out / "report.csv");

    const auto target = circumplex::parse_target(args.sweep.target_text, args.sweep.radius);
    const auto before = circumplex::map_to_plane(best.probs_before, args.sweep.radius);
    circumplex::PlotStyle after_style;
    after_style.color = "#e8710a";
    after_style.marker = circumplex::MarkerShape::Diamond;
    const std::string svg = circumplex::plot_svg(
        {{"before", before, {}}, {"after", best.point_after, after_style}}, &target);
    write_text(out / "before_after.svg", svg);

    std::printf("input key: %s (confidence %.3f)\n",
                pipeline::key_name(report.input_key).c_str(), report.input_key.confidence);
    std::printf("best candidate: offset %+d to %s, profile %s\n", best.semitone_offset,
                best.target_tonic.c_str(), best.profile_name.c_str());
    std::printf("distance to %s: %.4f before, %.4f after\n",
                circumplex::describe_target(target).c_str(),
                circumplex::distance(before, target), best.distance_to_target);
    if (result.folded_notes > 0)
        std::printf("note: %d notes folded back into range\n", result.folded_notes);
    std::printf("wrote best.mid, best.wav, before_after.svg, report.json, report.csv under %s\n",
                out.string().c_str());
    return 0;
}

struct SweepArgs {
    std::vector<std::string> inputs;
    std::string model_path;
    std::string out_dir;
    SweepFlags sweep;
};

int cmd_sweep(const SweepArgs& args) {
    const auto model = emotion::load_model(args.model_path);
    const fs::path out = ensure_out_dir(args.out_dir);

    std::map<std::string, int> used;
    for (const auto& input : args.inputs) {
        const auto melody = load_midi_file(input);
        const std::string name = fs::path(input).filename().string();
        std::string stem = fs::path(input).stem().string();
        const int copies = ++used[stem];
        if (copies > 1) stem += "_" + std::to_string(copies);

        const auto report = run_sweep(melody, args.sweep, model, name);
        write_report_files(report, out / (stem + ".report.json"), out / (stem + ".report.csv"));

        std::printf("%s: %zu candidates", name.c_str(), report.candidates.size());
        if (report.best_index >= 0) {
            const auto& best = report.candidates[static_cast<std::size_t>(report.best_index)];
            std::printf(", best offset %+d to %s with %s (distance %.4f)\n", best.semitone_offset,
                        best.target_tonic.c_str(), best.profile_name.c_str(),
                        best.distance_to_target);
        } else {
            std::printf(", no candidate succeeded\n");
        }
    }
    std::printf("wrote reports under %s\n", out.string().c_str());
    return 0;
}

struct SynthCorpusArgs {
    std::string out_dir;
    int per_quadrant = 50;
    std::uint64_t seed = 42;
};

int cmd_synth_corpus(const SynthCorpusArgs& args) {
    if (args.per_quadrant <= 0) throw InputError("--per-quadrant must be positive");
    const auto corpus = emotion::generate_synthetic_corpus(args.per_quadrant, args.seed);
    const fs::path out = ensure_out_dir(args.out_dir);

    std::vector<std::pair<std::string, emotion::Quadrant>> rows;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto quadrant = *corpus[i].quadrant;
        char name[48];
        std::snprintf(name, sizeof(name), "clip_q%d_%03zu.wav",
                      static_cast<int>(quadrant) + 1, i / 4);
        synth::save_wav((out / name).string(), *corpus[i].audio);
        rows.emplace_back(name, quadrant);
    }
    emotion::write_quadrant_manifest((out / "manifest.csv").string(), rows);
    std::printf("wrote %zu clips and manifest.csv under %s\n", corpus.size(),
                out.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"moodshift: steer a MIDI melody toward a target emotion by sweeping\n"
                 "key transpositions and instrument timbres against a trained\n"
                 "four-quadrant emotion classifier."};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train the emotion classifier from a manifest");
    train->add_option("--manifest", train_args.manifest, "CSV manifest of labeled clips")
        ->required();
    train->add_option("--out-dir", train_args.out_dir, "directory for model.txt and loss.csv")
        ->required();
    train->add_option("--epochs", train_args.config.epochs, "training epochs (default 10)");
    train->add_option("--batch-size", train_args.config.batch_size, "minibatch size (default 8)");
    train->add_option("--learning-rate", train_args.config.learning_rate,
                      "SGD learning rate (default 0.01)");
    train->add_option("--seed", train_args.config.seed, "shuffle/init seed (default 42)");
    train->add_option("--val-fraction", train_args.config.validation_fraction,
                      "validation split fraction (default 0.2)");
    train->add_option("--valence-threshold", train_args.v_threshold,
                      "valence cut for valence/arousal manifests (default 5)");
    train->add_option("--arousal-threshold", train_args.a_threshold,
                      "arousal cut for valence/arousal manifests (default 5)");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "evaluate a model on a labeled manifest");
    eval->add_option("--manifest", eval_args.manifest, "CSV manifest of labeled clips")
        ->required();
    eval->add_option("--model", eval_args.model_path, "trained model file")->required();
    eval->add_option("--out-dir", eval_args.out_dir, "optional directory for confusion.csv");
    eval->add_option("--valence-threshold", eval_args.v_threshold,
                     "valence cut for valence/arousal manifests (default 5)");
    eval->add_option("--arousal-threshold", eval_args.a_threshold,
                     "arousal cut for valence/arousal manifests (default 5)");

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "classify one WAV or MIDI file");
    analyze->add_option("--input", analyze_args.input, "WAV or MIDI file")->required();
    analyze->add_option("--model", analyze_args.model_path, "trained model file")->required();
    analyze->add_option("--out-dir", analyze_args.out_dir, "optional directory for analysis.svg");
    analyze->add_option("--profile", analyze_args.profile,
                        "instrument profile for rendering MIDI input (default piano-like)");
    analyze->add_option("--radius", analyze_args.radius, "circumplex radius (default 1)");
    analyze->add_option("--sample-rate", analyze_args.sample_rate, "analysis sample rate in Hz");

    TransformArgs transform_args;
    auto* transform =
        app.add_subcommand("transform", "shift a melody toward a target emotion");
    transform->add_option("--input", transform_args.input, "input MIDI file")->required();
    transform->add_option("--model", transform_args.model_path, "trained model file")->required();
    transform->add_option("--out-dir", transform_args.out_dir, "output directory")->required();
    add_sweep_flags(transform, transform_args.sweep);

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand(
        "sweep", "score every transposition/profile candidate for one or more melodies");
    sweep->add_option("--input", sweep_args.inputs, "input MIDI file(s)")
        ->required()
        ->take_all();
    sweep->add_option("--model", sweep_args.model_path, "trained model file")->required();
    sweep->add_option("--out-dir", sweep_args.out_dir, "output directory")->required();
    add_sweep_flags(sweep, sweep_args.sweep);

    SynthCorpusArgs corpus_args;
    auto* synth_corpus = app.add_subcommand(
        "synth-corpus", "generate a labeled synthetic training corpus as WAV files");
    synth_corpus->add_option("--out-dir", corpus_args.out_dir, "output directory")->required();
    synth_corpus->add_option("--per-quadrant", corpus_args.per_quadrant,
                             "clips per quadrant (default 50)");
    synth_corpus->add_option("--seed", corpus_args.seed, "corpus seed (default 42)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }

    try {
        if (train->parsed()) return cmd_train(train_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (analyze->parsed()) return cmd_analyze(analyze_args);
        if (transform->parsed()) return cmd_transform(transform_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (synth_corpus->parsed()) return cmd_synth_corpus(corpus_args);
        std::fprintf(stderr, "error: no subcommand\n");
        return kExitUsage;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return kExitData;
    }
}
