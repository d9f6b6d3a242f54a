#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "moodshift/classifier.hpp"
#include "moodshift/corpus.hpp"
#include "moodshift/errors.hpp"
#include "moodshift/features.hpp"
#include "moodshift/midi.hpp"
#include "moodshift/rng.hpp"
#include "moodshift/synth.hpp"
#include "testutil.hpp"

using namespace moodshift;
using namespace moodshift::emotion;
namespace fs = std::filesystem;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

synth::AudioClip tone(double freq_hz, double amp, int n = 8192, int rate = 16000,
                      double phase = 0.0) {
    synth::AudioClip clip;
    clip.sample_rate_hz = rate;
    clip.samples.resize(n);
    for (int i = 0; i < n; ++i)
        clip.samples[i] = static_cast<float>(amp * std::sin(kTau * freq_hz * i / rate + phase));
    return clip;
}

synth::AudioClip mix_tones(const std::vector<double>& freqs, int n = 16384) {
    synth::AudioClip clip;
    clip.sample_rate_hz = 16000;
    clip.samples.assign(n, 0.0f);
    for (double f : freqs) {
        const auto t = tone(f, 0.25, n);
        for (int i = 0; i < n; ++i) clip.samples[i] += t.samples[i];
    }
    return clip;
}

/// Two tight tone clusters, alternating Q1 (low) and Q3 (high).
std::vector<LabeledClip> tone_corpus(int count, std::uint64_t seed) {
    SplitMix64 rng{seed};
    std::vector<LabeledClip> corpus;
    for (int i = 0; i < count; ++i) {
        const bool high = (i % 2) == 1;
        const double freq = high ? rng.uniform(2900.0, 3100.0) : rng.uniform(410.0, 470.0);
        LabeledClip clip;
        clip.audio = tone(freq, rng.uniform(0.2, 0.8), 8192, 16000, rng.uniform(0.0, kTau));
        clip.quadrant = high ? Quadrant::Q3 : Quadrant::Q1;
        corpus.push_back(std::move(clip));
    }
    return corpus;
}

FeatureVector random_features(SplitMix64& rng, double scale = 2.0) {
    FeatureVector f{};
    for (double& x : f) x = rng.normal() * scale;
    return f;
}

ClassifierModel random_model(SplitMix64& rng, double scale = 0.3) {
    ClassifierModel m = zero_model();
    for (double& x : m.norm_mean) x = rng.normal();
    for (double& x : m.norm_std) x = rng.uniform(0.5, 2.0);
    for (double& w : m.w1) w = rng.normal() * scale;
    for (double& w : m.b1) w = rng.normal() * 0.1;
    for (double& w : m.w2) w = rng.normal() * scale;
    for (double& w : m.b2) w = rng.normal() * 0.1;
    return m;
}

constexpr int kParamCount = 32 * 25 + 32 + 4 * 32 + 4;

double& model_param(ClassifierModel& m, int idx) {
    if (idx < 800) return m.w1[idx];
    idx -= 800;
    if (idx < 32) return m.b1[idx];
    idx -= 32;
    if (idx < 128) return m.w2[idx];
    return m.b2[idx - 128];
}

double grad_param(const Gradients& g, int idx) {
    if (idx < 800) return g.w1[idx];
    idx -= 800;
    if (idx < 32) return g.b1[idx];
    idx -= 32;
    if (idx < 128) return g.w2[idx];
    return g.b2[idx - 128];
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("moodshift_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(bool(f));
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Independent check that two labeled feature sets are linearly separable:
/// plain logistic regression, full-batch gradient descent.
double logistic_accuracy(const std::vector<FeatureVector>& xs, const std::vector<int>& ys) {
    const int n = static_cast<int>(xs.size());
    const int d = kFeatureCount;
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (const auto& x : xs)
        for (int i = 0; i < d; ++i) mean[i] += x[i] / n;
    for (const auto& x : xs)
        for (int i = 0; i < d; ++i) sd[i] += (x[i] - mean[i]) * (x[i] - mean[i]) / n;
    for (int i = 0; i < d; ++i) sd[i] = std::max(std::sqrt(sd[i]), 1e-12);

    std::vector<double> w(d, 0.0);
    double b = 0.0;
    for (int it = 0; it < 400; ++it) {
        std::vector<double> gw(d, 0.0);
        double gb = 0.0;
        for (int s = 0; s < n; ++s) {
            double a = b;
            for (int i = 0; i < d; ++i) a += w[i] * (xs[s][i] - mean[i]) / sd[i];
            const double p = 1.0 / (1.0 + std::exp(-a));
            const double err = (p - ys[s]) / n;
            for (int i = 0; i < d; ++i) gw[i] += err * (xs[s][i] - mean[i]) / sd[i];
            gb += err;
        }
        for (int i = 0; i < d; ++i) w[i] -= 0.5 * gw[i];
        b -= 0.5 * gb;
    }
    int correct = 0;
    for (int s = 0; s < n; ++s) {
        double a = b;
        for (int i = 0; i < d; ++i) a += w[i] * (xs[s][i] - mean[i]) / sd[i];
        if ((a >= 0.0) == (ys[s] == 1)) ++correct;
    }
    return static_cast<double>(correct) / n;
}

}  // namespace

TEST_CASE("silent audio produces the documented fallback features") {
    synth::AudioClip clip;
    clip.sample_rate_hz = 16000;
    clip.samples.assign(4096, 0.0f);
    const FeatureVector f = extract_features(clip);

    CHECK(f[0] == 0.0);   // rms
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.0);   // centroid
    CHECK(f[3] == 0.0);
    CHECK(f[4] == 0.0);   // rolloff
    CHECK(f[5] == 0.0);
    CHECK(f[6] == 0.0);   // zcr
    CHECK(f[7] == 0.0);
    CHECK(f[8] == 0.0);   // flux
    CHECK(f[9] == 0.0);
    CHECK(f[10] == 1.0);  // band ratio falls back to neutral
    CHECK(f[11] == 0.0);  // tempo
    for (int i = 0; i < 12; ++i) CHECK(f[12 + i] == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
    CHECK(f[24] == 0.0);  // mode margin of a uniform chroma
}

TEST_CASE("a pure A440 tone is described faithfully") {
    const auto clip = tone(440.0, 0.5, 16384);
    const FeatureVector f = extract_features(clip);

    CHECK(f[0] == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(0.02));
    CHECK(std::abs(f[2] - 440.0) < 30.0);   // centroid
    CHECK(std::abs(f[4] - 440.0) < 32.0);   // rolloff within two bins
    CHECK(f[6] == doctest::Approx(2.0 * 440.0 / 16000.0).epsilon(0.05));
    CHECK(f[10] > 100.0);  // almost all energy below 500 Hz
    // at 16 kHz a bin spans over half a semitone near 440, so the pitch
    // class dominates without absorbing every sidelobe
    CHECK(f[12 + 9] > 0.5);
    for (int i = 0; i < 12; ++i)
        if (i != 9) CHECK(f[12 + i] < f[12 + 9]);
    double chroma_sum = 0.0;
    for (int i = 0; i < 12; ++i) chroma_sum += f[12 + i];
    CHECK(chroma_sum == doctest::Approx(1.0).epsilon(1e-9));

    // an octave up the bins resolve finer than a semitone and the mass locks in
    const FeatureVector a5 = extract_features(tone(880.0, 0.5, 16384));
    CHECK(a5[12 + 9] > 0.9);

    const auto high = tone(3000.0, 0.5, 16384);
    const FeatureVector g = extract_features(high);
    CHECK(std::abs(g[2] - 3000.0) < 60.0);
    CHECK(g[10] < 1.0);  // energy sits above 2 kHz
    CHECK(g[6] > f[6]);  // more zero crossings per frame
}

TEST_CASE("octave-separated tones land on the same pitch class") {
    const FeatureVector lo = extract_features(tone(523.25, 0.5, 16384));
    const FeatureVector hi = extract_features(tone(1046.50, 0.5, 16384));
    CHECK(lo[12 + 0] > 0.8);
    CHECK(hi[12 + 0] > 0.8);
}

TEST_CASE("major and minor triads push the mode margin apart") {
    // C5-E5-G5 against C5-Eb5-G5
    const FeatureVector maj = extract_features(mix_tones({523.25, 659.26, 783.99}));
    const FeatureVector min = extract_features(mix_tones({523.25, 622.25, 783.99}));
    CHECK(maj[24] > 0.0);
    CHECK(min[24] < 0.0);
    CHECK(maj[24] > min[24]);
}

TEST_CASE("halving the amplitude leaves the scale-invariant features untouched") {
    const midi::MidiSong song = testutil::random_song(20250801);
    const auto& chiptune = synth::profile_by_name("chiptune");
    synth::AudioClip clip = synth::render(song, nullptr, chiptune, chiptune);
    REQUIRE(clip.samples.size() >= 4096);

    synth::AudioClip half = clip;
    for (float& s : half.samples) s *= 0.5f;

    const FeatureVector a = extract_features(clip);
    const FeatureVector b = extract_features(half);

    // invariant exactly: centroid, rolloff, zcr, tempo, chroma, mode margin
    for (int i : {2, 3, 4, 5, 6, 7, 11, 24}) CHECK(a[i] == b[i]);
    for (int i = 12; i < 24; ++i) CHECK(a[i] == b[i]);
    // linear exactly: rms and flux statistics
    for (int i : {0, 1, 8, 9}) CHECK(b[i] == 0.5 * a[i]);
    // band ratio only drifts by its tiny stabilizer epsilon
    CHECK(b[10] == doctest::Approx(a[10]).epsilon(1e-9));

    const FeatureVector again = extract_features(clip);
    for (int i = 0; i < kFeatureCount; ++i) CHECK(a[i] == again[i]);
}

TEST_CASE("features stay finite and within bounds on random material") {
    for (std::uint64_t seed : {11u, 22u, 33u, 44u, 55u}) {
        const midi::MidiSong song = testutil::random_song(seed);
        const auto& profile = synth::builtin_profiles()[seed % 4];
        const synth::AudioClip clip = synth::render(song, nullptr, profile, profile);
        if (clip.samples.size() < static_cast<std::size_t>(kFrameSize)) continue;
        const FeatureVector f = extract_features(clip);
        for (double x : f) CHECK(std::isfinite(x));
        CHECK(f[0] >= 0.0);
        CHECK((f[11] == 0.0 || (f[11] >= 29.0 && f[11] <= 321.0)));
        for (int i = 12; i < 24; ++i) {
            CHECK(f[i] >= 0.0);
            CHECK(f[i] <= 1.0);
        }
    }
}

TEST_CASE("clips shorter than one analysis frame are rejected") {
    synth::AudioClip clip;
    clip.sample_rate_hz = 16000;
    clip.samples.assign(1023, 0.1f);
    CHECK_THROWS_AS(extract_features(clip), InputError);
    clip.samples.push_back(0.1f);
    CHECK_NOTHROW(extract_features(clip));
}

TEST_CASE("the zero model is maximally uncertain") {
    SplitMix64 rng{404};
    const ClassifierModel m = zero_model();
    for (int i = 0; i < 10; ++i) {
        const QuadrantProbs p = classify(m, random_features(rng));
        CHECK(p.p1 == 0.25);
        CHECK(p.p2 == 0.25);
        CHECK(p.p3 == 0.25);
        CHECK(p.p4 == 0.25);
    }
}

TEST_CASE("classifier outputs always form a probability distribution") {
    SplitMix64 rng{808};
    for (int draw = 0; draw < 500; ++draw) {
        const ClassifierModel m = random_model(rng, rng.uniform(0.05, 1.5));
        const QuadrantProbs p = classify(m, random_features(rng, 3.0));
        for (int i = 0; i < 4; ++i) {
            CHECK(p[i] >= 0.0);
            CHECK(p[i] <= 1.0);
            CHECK(std::isfinite(p[i]));
        }
        CHECK(std::abs(p.sum() - 1.0) <= 1e-6);
    }

    // extreme logits must not overflow
    ClassifierModel m = zero_model();
    m.b2 = {1000.0, 0.0, -1000.0, 0.0};
    const QuadrantProbs p = classify(m, FeatureVector{});
    CHECK(p.p1 == doctest::Approx(1.0));
    CHECK(std::abs(p.sum() - 1.0) <= 1e-6);
}

TEST_CASE("classification rejects malformed inputs") {
    FeatureVector f{};
    f[3] = std::nan("");
    CHECK_THROWS_AS(classify(zero_model(), f), std::invalid_argument);
    f[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(classify(zero_model(), f), std::invalid_argument);
    CHECK_THROWS_AS(classify(ClassifierModel{}, FeatureVector{}), std::invalid_argument);
    ClassifierModel bad = zero_model();
    bad.norm_std[4] = 0.0;
    CHECK_THROWS_AS(classify(bad, FeatureVector{}), std::invalid_argument);
}

TEST_CASE("argmax prediction breaks exact ties toward the first quadrant") {
    CHECK(predict_quadrant({0.1, 0.6, 0.2, 0.1}) == Quadrant::Q2);
    CHECK(predict_quadrant({0.25, 0.25, 0.25, 0.25}) == Quadrant::Q1);
    CHECK(predict_quadrant({0.0, 0.0, 1.0, 0.0}) == Quadrant::Q3);
    CHECK(predict_quadrant({0.3, 0.3, 0.2, 0.2}) == Quadrant::Q1);
    CHECK(predict_quadrant({0.2, 0.2, 0.3, 0.3}) == Quadrant::Q3);
    CHECK(predict_quadrant({0.1, 0.2, 0.3, 0.4}) == Quadrant::Q4);
}

TEST_CASE("prediction depends only on the ordering of the outputs") {
    SplitMix64 rng{1717};
    for (int draw = 0; draw < 200; ++draw) {
        // positive affine maps of the logits preserve their order
        std::array<double, 4> v;
        for (double& x : v) x = rng.normal() * 2.0;
        ClassifierModel a = zero_model(), b = zero_model();
        a.b2.assign(v.begin(), v.end());
        for (int i = 0; i < 4; ++i) b.b2[i] = 1.7 * v[i] + 0.3;
        const FeatureVector f{};
        CHECK(predict_quadrant(classify(a, f)) == predict_quadrant(classify(b, f)));

        // cubing the probabilities preserves their order too
        const QuadrantProbs p = classify(a, f);
        double cube_sum = 0.0;
        for (int i = 0; i < 4; ++i) cube_sum += p[i] * p[i] * p[i];
        const QuadrantProbs q{p.p1 * p.p1 * p.p1 / cube_sum, p.p2 * p.p2 * p.p2 / cube_sum,
                              p.p3 * p.p3 * p.p3 / cube_sum, p.p4 * p.p4 * p.p4 / cube_sum};
        CHECK(predict_quadrant(p) == predict_quadrant(q));
    }
}

TEST_CASE("engineered labels split the valence-arousal plane at the thresholds") {
    CHECK(engineer_labels(7, 7, 5, 5) == Quadrant::Q1);
    CHECK(engineer_labels(3, 7, 5, 5) == Quadrant::Q2);
    CHECK(engineer_labels(3, 3, 5, 5) == Quadrant::Q3);
    CHECK(engineer_labels(7, 3, 5, 5) == Quadrant::Q4);
    // values on a threshold count as high
    CHECK(engineer_labels(5, 5, 5, 5) == Quadrant::Q1);
    CHECK(engineer_labels(5, 3, 5, 5) == Quadrant::Q4);
    CHECK(engineer_labels(3, 5, 5, 5) == Quadrant::Q2);
    // custom thresholds
    CHECK(engineer_labels(0.6, 0.4, 0.5, 0.5) == Quadrant::Q4);

    LabeledClip clip;
    CHECK_THROWS_AS(resolve_label(clip), DataError);
    clip.va = ValenceArousal{8.0, 2.0};
    CHECK(resolve_label(clip) == Quadrant::Q4);
    clip.quadrant = Quadrant::Q2;  // explicit quadrant wins over valence/arousal
    CHECK(resolve_label(clip) == Quadrant::Q2);
}

TEST_CASE("quadrant names and aliases round-trip") {
    CHECK(std::string(quadrant_name(Quadrant::Q2)) == "Q2");
    CHECK(std::string(quadrant_emotion(Quadrant::Q4)) == "calm");
    CHECK(quadrant_from_index(2) == Quadrant::Q3);
    CHECK_THROWS_AS(quadrant_from_index(4), std::invalid_argument);
    CHECK(parse_quadrant("HAPPY") == Quadrant::Q1);
    CHECK(parse_quadrant("q3") == Quadrant::Q3);
    CHECK(parse_quadrant("2") == Quadrant::Q2);
    CHECK(parse_quadrant("Calm") == Quadrant::Q4);
    CHECK_THROWS_AS(parse_quadrant("joyful"), InputError);
    CHECK_THROWS_AS(parse_quadrant(""), InputError);
}

TEST_CASE("analytic gradients agree with finite differences") {
    SplitMix64 rng{31337};
    int checked = 0;
    for (int draw = 0; draw < 100; ++draw) {
        ClassifierModel m = random_model(rng, 0.4);
        std::vector<FeatureVector> xs;
        std::vector<Quadrant> ys;
        for (int s = 0; s < 3; ++s) {
            xs.push_back(random_features(rng, 1.5));
            ys.push_back(static_cast<Quadrant>(rng.uniform_int(0, 3)));
        }

        Gradients g;
        const double loss = loss_and_gradient(m, xs, ys, &g);
        CHECK(g.w1.size() == 800);
        CHECK(g.b1.size() == 32);
        CHECK(g.w2.size() == 128);
        CHECK(g.b2.size() == 4);

        // the loss itself must match an independent forward computation
        double oracle = 0.0;
        for (std::size_t s = 0; s < xs.size(); ++s)
            oracle -= std::log(classify(m, xs[s])[static_cast<int>(ys[s])]);
        oracle /= static_cast<double>(xs.size());
        CHECK(loss == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(loss_and_gradient(m, xs, ys, nullptr) == loss);

        const double h = 1e-5;
        for (int probe = 0; probe < 12; ++probe) {
            const int idx = static_cast<int>(rng.uniform_int(0, kParamCount - 1));
            const double saved = model_param(m, idx);
            model_param(m, idx) = saved + h;
            const double up = loss_and_gradient(m, xs, ys, nullptr);
            model_param(m, idx) = saved - h;
            const double down = loss_and_gradient(m, xs, ys, nullptr);
            model_param(m, idx) = saved;

            const double fd = (up - down) / (2.0 * h);
            const double an = grad_param(g, idx);
            const double mag = std::max(std::abs(fd), std::abs(an));
            if (mag < 1e-7) continue;  // both effectively zero
            CHECK(std::abs(fd - an) / mag <= 1e-4);
            ++checked;
        }
    }
    CHECK(checked >= 800);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const auto corpus = tone_corpus(24, 99);
    TrainingConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.seed = 7;

    const std::string a = serialize_model(train(corpus, cfg));
    const std::string b = serialize_model(train(corpus, cfg));
    CHECK(a == b);

    cfg.seed = 8;
    CHECK(serialize_model(train(corpus, cfg)) != a);
}

TEST_CASE("a zero learning rate leaves the parameters at their initialization") {
    const auto corpus = tone_corpus(24, 99);
    TrainingConfig cfg;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.0;
    cfg.seed = 5;

    cfg.epochs = 1;
    const ClassifierModel one = train(corpus, cfg);
    cfg.epochs = 3;
    const ClassifierModel three = train(corpus, cfg);

    CHECK(one.w1 == three.w1);
    CHECK(one.b1 == three.b1);
    CHECK(one.w2 == three.w2);
    CHECK(one.b2 == three.b2);
    REQUIRE(three.val_loss.size() == 3);
    CHECK(three.val_loss[0] == three.val_loss[1]);
    CHECK(three.val_loss[1] == three.val_loss[2]);
    CHECK(one.val_loss[0] == three.val_loss[0]);
}

TEST_CASE("degenerate corpora and configurations are rejected") {
    TrainingConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 2;

    auto single_class = tone_corpus(16, 3);
    for (auto& clip : single_class) clip.quadrant = Quadrant::Q1;
    CHECK_THROWS_AS(train(single_class, cfg), DataError);

    const auto tiny = tone_corpus(7, 3);
    CHECK_THROWS_AS(train(tiny, cfg), DataError);

    auto unlabeled = tone_corpus(16, 3);
    unlabeled[5].quadrant.reset();
    CHECK_THROWS_AS(train(unlabeled, cfg), DataError);

    auto missing_file = tone_corpus(16, 3);
    missing_file[2].audio.reset();
    missing_file[2].path = "/nonexistent/clip.wav";
    CHECK_THROWS_AS(train(missing_file, cfg), InputError);

    const auto ok = tone_corpus(16, 3);
    TrainingConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(train(ok, bad), std::invalid_argument);
    bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(train(ok, bad), std::invalid_argument);
    bad = cfg;
    bad.learning_rate = -1.0;
    CHECK_THROWS_AS(train(ok, bad), std::invalid_argument);
    bad = cfg;
    bad.validation_fraction = 0.0;
    CHECK_THROWS_AS(train(ok, bad), std::invalid_argument);
    bad = cfg;
    bad.validation_fraction = 1.0;
    CHECK_THROWS_AS(train(ok, bad), std::invalid_argument);
}

TEST_CASE("two tones the features separate are learned almost perfectly") {
    const auto corpus = tone_corpus(60, 2024);

    // independent confirmation that the feature space separates the classes
    std::vector<FeatureVector> xs;
    std::vector<int> ys;
    for (const auto& clip : corpus) {
        xs.push_back(extract_features(*clip.audio));
        ys.push_back(clip.quadrant == Quadrant::Q3 ? 1 : 0);
    }
    CHECK(logistic_accuracy(xs, ys) >= 0.95);

    TrainingConfig cfg;
    cfg.epochs = 30;
    const ClassifierModel model = train(corpus, cfg);
    const EvalResult result = evaluate(model, corpus);
    CHECK(result.accuracy >= 0.95);

    // confusion rows account for every clip
    int total = 0;
    for (const auto& row : result.confusion)
        for (int c : row) total += c;
    CHECK(total == 60);
}

TEST_CASE("training on the synthetic corpus halves the loss with default settings") {
    const auto corpus = generate_synthetic_corpus(25, 7);
    REQUIRE(corpus.size() == 100);

    const TrainingConfig cfg;  // defaults throughout
    const ClassifierModel model = train(corpus, cfg);

    // 100 clips, validation 20, batches of 8 -> 10 steps per epoch
    REQUIRE(model.train_loss.size() == 100);
    REQUIRE(model.val_loss.size() == 10);
    for (double s : model.norm_std) CHECK(s > 0.0);

    double first_epoch = 0.0, last_epoch = 0.0;
    for (int i = 0; i < 10; ++i) {
        first_epoch += model.train_loss[i] / 10.0;
        last_epoch += model.train_loss[90 + i] / 10.0;
    }
    CHECK(last_epoch < 0.5 * first_epoch);

    const EvalResult result = evaluate(model, corpus);
    CHECK(result.accuracy >= 0.8);
}

TEST_CASE("evaluation summarizes the confusion between true and predicted labels") {
    using Q = Quadrant;
    const std::vector<Q> truth{Q::Q1, Q::Q2, Q::Q3, Q::Q4, Q::Q1};
    const std::vector<Q> pred{Q::Q1, Q::Q3, Q::Q3, Q::Q4, Q::Q2};
    const EvalResult r = evaluate_predictions(truth, pred);
    CHECK(r.accuracy == doctest::Approx(0.6));
    CHECK(r.confusion[0][0] == 1);
    CHECK(r.confusion[0][1] == 1);
    CHECK(r.confusion[1][2] == 1);
    CHECK(r.confusion[2][2] == 1);
    CHECK(r.confusion[3][3] == 1);

    CHECK_THROWS_AS(evaluate_predictions({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_predictions(truth, {Q::Q1}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate(zero_model(), {}), InputError);

    // random guessing on balanced labels sits near one quarter
    SplitMix64 rng{123};
    std::vector<Q> t2, p2;
    for (int i = 0; i < 4000; ++i) {
        t2.push_back(static_cast<Q>(i % 4));
        p2.push_back(static_cast<Q>(rng.uniform_int(0, 3)));
    }
    const EvalResult r2 = evaluate_predictions(t2, p2);
    CHECK(std::abs(r2.accuracy - 0.25) < 0.03);
}

TEST_CASE("the zero model predicts the first quadrant for everything") {
    std::vector<LabeledClip> corpus;
    for (int q = 0; q < 4; ++q) {
        LabeledClip clip;
        clip.audio = tone(300.0 + 200.0 * q, 0.4);
        clip.quadrant = static_cast<Quadrant>(q);
        corpus.push_back(std::move(clip));
    }
    const EvalResult r = evaluate(zero_model(), corpus);
    CHECK(r.accuracy == doctest::Approx(0.25));
    for (int q = 0; q < 4; ++q) {
        CHECK(r.confusion[q][0] == 1);
        CHECK(r.confusion[q][1] + r.confusion[q][2] + r.confusion[q][3] == 0);
    }
}

TEST_CASE("models survive a serialize-parse round trip bit for bit") {
    const auto corpus = tone_corpus(24, 4);
    TrainingConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    const ClassifierModel model = train(corpus, cfg);

    const std::string text = serialize_model(model);
    const ClassifierModel back = parse_model(text);
    CHECK(back.norm_mean == model.norm_mean);
    CHECK(back.norm_std == model.norm_std);
    CHECK(back.w1 == model.w1);
    CHECK(back.b1 == model.b1);
    CHECK(back.w2 == model.w2);
    CHECK(back.b2 == model.b2);
    CHECK(back.seed == model.seed);
    CHECK(back.epochs == model.epochs);
    CHECK(back.train_loss == model.train_loss);
    CHECK(back.val_loss == model.val_loss);
    CHECK(serialize_model(back) == text);

    const fs::path dir = scratch_dir("model_io");
    const std::string path = (dir / "model.txt").string();
    save_model(model, path);
    const ClassifierModel loaded = load_model(path);
    CHECK(serialize_model(loaded) == text);
    fs::remove_all(dir);
}

TEST_CASE("malformed model files are rejected") {
    CHECK_THROWS_AS(parse_model(""), InputError);
    CHECK_THROWS_AS(parse_model("BOGUS v9\n"), InputError);
    // a recognizable header with the wrong version is a model problem, not a parse problem
    CHECK_THROWS_AS(parse_model("MOODSHIFT-MODEL v999\n"), DataError);
    CHECK_THROWS_AS(parse_model(std::string(kModelMagic) + "\n"), InputError);
    CHECK_THROWS_AS(parse_model(std::string(kModelMagic) + "\nfeatures 99\n"), InputError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.txt"), InputError);

    const std::string good = serialize_model(zero_model());
    CHECK_NOTHROW(parse_model(good));

    // drop the last line
    std::string truncated = good;
    truncated.erase(truncated.find_last_of('\n', truncated.size() - 2) + 1);
    CHECK_THROWS_AS(parse_model(truncated), InputError);

    // shorten a weight row
    std::string short_row = good;
    const auto b2_at = short_row.find("\nb2 ");
    REQUIRE(b2_at != std::string::npos);
    const auto line_end = short_row.find('\n', b2_at + 1);
    const auto last_space = short_row.rfind(' ', line_end);
    short_row.erase(last_space, line_end - last_space);
    CHECK_THROWS_AS(parse_model(short_row), InputError);

    // non-positive normalization is meaningless
    ClassifierModel bad = zero_model();
    bad.norm_std[0] = 1.0;
    std::string zeroed = serialize_model(bad);
    const auto std_at = zeroed.find("norm_std 1 ");
    REQUIRE(std_at != std::string::npos);
    zeroed.replace(std_at, 11, "norm_std 0 ");
    CHECK_THROWS_AS(parse_model(zeroed), InputError);
}

TEST_CASE("manifests resolve paths relative to their own directory") {
    const fs::path dir = scratch_dir("manifest");
    fs::create_directories(dir / "sub");
    synth::save_wav((dir / "a.wav").string(), tone(440.0, 0.5));
    synth::save_wav((dir / "sub" / "b.wav").string(), tone(3000.0, 0.5));

    {
        std::ofstream f(dir / "clips.csv");
        f << "path,quadrant\n"
          << "a.wav,q1\n"
          << "sub/b.wav,SAD\n";
    }
    const auto clips = load_manifest((dir / "clips.csv").string());
    REQUIRE(clips.size() == 2);
    CHECK(clips[0].path == (dir / "a.wav").string());
    CHECK(clips[1].path == (dir / "sub" / "b.wav").string());
    CHECK(clips[0].quadrant == Quadrant::Q1);
    CHECK(clips[1].quadrant == Quadrant::Q3);
    CHECK_FALSE(clips[0].audio.has_value());

    // evaluation pulls the audio off disk through those paths
    const EvalResult r = evaluate(zero_model(), clips);
    CHECK(r.accuracy == doctest::Approx(0.5));

    {
        std::ofstream f(dir / "va.csv");
        f << "path,valence,arousal\n"
          << "a.wav,7.5,8.0\n"
          << "sub/b.wav,2.0,3.0\n";
    }
    const auto va_clips = load_manifest((dir / "va.csv").string());
    REQUIRE(va_clips.size() == 2);
    CHECK(resolve_label(va_clips[0]) == Quadrant::Q1);
    CHECK(resolve_label(va_clips[1]) == Quadrant::Q3);
    CHECK(resolve_label(va_clips[1], 1.5, 1.5) == Quadrant::Q1);

    fs::remove_all(dir);
}

TEST_CASE("broken manifests are rejected with the offending line") {
    const fs::path dir = scratch_dir("manifest_bad");
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream f(dir / name);
        f << body;
        return (dir / name).string();
    };

    CHECK_THROWS_AS(load_manifest((dir / "missing.csv").string()), InputError);
    CHECK_THROWS_AS(load_manifest(write("empty.csv", "")), InputError);
    CHECK_THROWS_AS(load_manifest(write("hdr.csv", "path,label\na.wav,q1\n")), InputError);
    CHECK_THROWS_AS(load_manifest(write("only_hdr.csv", "path,quadrant\n")), InputError);
    CHECK_THROWS_AS(load_manifest(write("cols.csv", "path,quadrant\na.wav\n")), InputError);
    CHECK_THROWS_AS(load_manifest(write("quad.csv", "path,quadrant\na.wav,q9\n")), InputError);
    CHECK_THROWS_AS(load_manifest(write("va.csv", "path,valence,arousal\na.wav,x,2\n")),
                    InputError);

    try {
        load_manifest(write("lineno.csv", "path,quadrant\na.wav,q1\nb.wav,nope\n"));
        FAIL("expected a manifest error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    // CRLF endings and case-insensitive headers are tolerated
    const auto crlf = write("crlf.csv", "Path,Quadrant\r\na.wav,q1\r\n");
    const auto clips = load_manifest(crlf);
    REQUIRE(clips.size() == 1);
    CHECK(clips[0].quadrant == Quadrant::Q1);

    fs::remove_all(dir);
}

TEST_CASE("written manifests read back unchanged") {
    const fs::path dir = scratch_dir("manifest_rt");
    const std::string path = (dir / "m.csv").string();
    write_quadrant_manifest(path, {{"a.wav", Quadrant::Q1}, {"sub/b.wav", Quadrant::Q3}});
    const auto clips = load_manifest(path);
    REQUIRE(clips.size() == 2);
    CHECK(clips[0].quadrant == Quadrant::Q1);
    CHECK(clips[1].quadrant == Quadrant::Q3);
    CHECK(clips[0].path == (dir / "a.wav").string());
    CHECK(clips[1].path == (dir / "sub" / "b.wav").string());
    fs::remove_all(dir);
}

TEST_CASE("loss curves export with validation entries at epoch boundaries") {
    ClassifierModel m = zero_model();
    m.train_loss = {1, 2, 3, 4, 5, 6};
    m.val_loss = {10, 20};
    m.epochs = 2;

    const fs::path dir = scratch_dir("loss_csv");
    const std::string path = (dir / "loss.csv").string();
    write_loss_csv(m, path);
    CHECK(slurp(path) ==
          "step,train_loss,val_loss\n"
          "1,1,\n"
          "2,2,\n"
          "3,3,10\n"
          "4,4,\n"
          "5,5,\n"
          "6,6,20\n");
    fs::remove_all(dir);
}

TEST_CASE("the synthetic corpus is deterministic, balanced, and labeled in order") {
    const auto a = generate_synthetic_corpus(2, 1234);
    const auto b = generate_synthetic_corpus(2, 1234);
    REQUIRE(a.size() == 8);
    REQUIRE(b.size() == 8);
    for (int i = 0; i < 8; ++i) {
        CHECK(a[i].quadrant == static_cast<Quadrant>(i % 4));
        REQUIRE(a[i].audio.has_value());
        CHECK(a[i].audio->sample_rate_hz == 16000);
        CHECK(a[i].audio->samples.size() >= static_cast<std::size_t>(kFrameSize));
        REQUIRE(b[i].audio.has_value());
        CHECK(a[i].audio->samples == b[i].audio->samples);
    }

    const auto other = generate_synthetic_corpus(2, 4321);
    bool any_difference = false;
    for (int i = 0; i < 8; ++i)
        if (other[i].audio->samples != a[i].audio->samples) any_difference = true;
    CHECK(any_difference);

    CHECK_THROWS_AS(generate_synthetic_corpus(0, 1), std::invalid_argument);
}

TEST_CASE("synthetic melodies carry their quadrant's musical fingerprint") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const midi::MidiSong fast = make_synthetic_melody(Quadrant::Q1, seed);
        const midi::MidiSong slow = make_synthetic_melody(Quadrant::Q3, seed);

        REQUIRE(fast.tracks.size() == 1);
        REQUIRE(slow.tracks.size() == 1);
        CHECK(fast.tracks[0].size() == 16);
        CHECK(slow.tracks[0].size() == 8);
        CHECK(fast.tempo_us_per_quarter >= 333333);
        CHECK(fast.tempo_us_per_quarter <= 400000);
        CHECK(slow.tempo_us_per_quarter >= 750000);
        CHECK(slow.tempo_us_per_quarter <= 1000000);

        for (std::size_t i = 0; i < fast.tracks[0].size(); ++i) {
            const auto& n = fast.tracks[0][i];
            CHECK(n.onset_ticks == static_cast<std::int64_t>(i) * 240);
            CHECK(n.duration_ticks == 240);
            CHECK(n.velocity >= 97);
            CHECK(n.velocity <= 121);
        }
        for (std::size_t i = 0; i < slow.tracks[0].size(); ++i) {
            const auto& n = slow.tracks[0][i];
            CHECK(n.onset_ticks == static_cast<std::int64_t>(i) * 480);
            CHECK(n.duration_ticks == 480);
            CHECK(n.velocity >= 42);
            CHECK(n.velocity <= 68);
        }

        // every melody fits a diatonic set (minor walks land in the relative major)
        for (Quadrant q : {Quadrant::Q1, Quadrant::Q2, Quadrant::Q3, Quadrant::Q4}) {
            const midi::MidiSong song = make_synthetic_melody(q, seed);
            std::set<int> pcs;
            for (const auto& n : song.tracks[0]) pcs.insert(((n.pitch % 12) + 12) % 12);
            static const int major[7] = {0, 2, 4, 5, 7, 9, 11};
            bool fits = false;
            for (int tonic = 0; tonic < 12 && !fits; ++tonic) {
                bool all = true;
                for (int pc : pcs) {
                    bool in_scale = false;
                    for (int d : major)
                        if (pc == (tonic + d) % 12) in_scale = true;
                    all = all && in_scale;
                }
                fits = all;
            }
            CHECK(fits);
        }
    }

    // happy melodies read as major more often than angry ones
    int q1_major = 0, q2_major = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        if (midi::detect_key(make_synthetic_melody(Quadrant::Q1, seed)).mode == midi::Mode::Major)
            ++q1_major;
        if (midi::detect_key(make_synthetic_melody(Quadrant::Q2, seed)).mode == midi::Mode::Major)
            ++q2_major;
    }
    CHECK(q1_major > q2_major);

    CHECK(corpus_profile(Quadrant::Q1).waveform == synth::Waveform::Square);
    CHECK(corpus_profile(Quadrant::Q2).waveform == synth::Waveform::Square);
    CHECK(corpus_profile(Quadrant::Q3).name == "piano-like");
    CHECK(corpus_profile(Quadrant::Q4).name == "strings-like");
}
