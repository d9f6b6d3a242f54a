#pragma once

// Four-quadrant emotion classifier: z-normalized features through one tanh
// hidden layer into a softmax, trained with minibatch gradient descent on
// cross-entropy. Quadrants follow the Circumplex convention:
// Q1 happy (+v,+a), Q2 angry (-v,+a), Q3 sad (-v,-a), Q4 calm (+v,-a).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "moodshift/features.hpp"
#include "moodshift/synth.hpp"

namespace moodshift::emotion {

inline constexpr int kHiddenWidth = 32;
inline constexpr int kQuadrantCount = 4;
inline constexpr const char* kModelMagic = "MOODSHIFT-MODEL v1";

/// Midpoint of the 1..9 annotation scale used by common VA datasets.
inline constexpr double kDefaultVaThreshold = 5.0;

enum class Quadrant { Q1 = 0, Q2 = 1, Q3 = 2, Q4 = 3 };

const char* quadrant_name(Quadrant q);     // "Q1".."Q4"
const char* quadrant_emotion(Quadrant q);  // "happy".."calm"
Quadrant quadrant_from_index(int index);   // 0..3

/// Accepts "Q1".."Q4", "1".."4", or happy/angry/sad/calm, case-insensitively.
Quadrant parse_quadrant(const std::string& text);

struct QuadrantProbs {
    double p1 = 0.25, p2 = 0.25, p3 = 0.25, p4 = 0.25;

    double sum() const { return p1 + p2 + p3 + p4; }
    double operator[](int i) const { return i == 0 ? p1 : i == 1 ? p2 : i == 2 ? p3 : p4; }
    bool operator==(const QuadrantProbs&) const = default;
};

/// Argmax; exact ties go to the lowest quadrant index.
Quadrant predict_quadrant(const QuadrantProbs& probs);

struct ValenceArousal {
    double valence = 0.0;
    double arousal = 0.0;
};

/// Threshold rule: high valence keeps the right half (Q1/Q4), high arousal
/// the top half (Q1/Q2); values equal to a threshold count as high.
Quadrant engineer_labels(double valence, double arousal, double v_threshold, double a_threshold);

/// One corpus entry: audio by path or in memory, labeled either directly by
/// quadrant or by a valence/arousal pair.
struct LabeledClip {
    std::string path;
    std::optional<synth::AudioClip> audio;
    std::optional<Quadrant> quadrant;
    std::optional<ValenceArousal> va;
};

/// The clip's quadrant, engineering it from valence/arousal when needed.
/// Throws DataError when the clip carries no label.
Quadrant resolve_label(const LabeledClip& clip, double v_threshold = kDefaultVaThreshold,
                       double a_threshold = kDefaultVaThreshold);

struct TrainingConfig {
    int epochs = 10;
    int batch_size = 8;
    double learning_rate = 1e-2;  // raised from 1e-4; see README on the small feature model
    std::uint64_t seed = 42;
    double validation_fraction = 0.2;
};

struct ClassifierModel {
    std::array<double, kFeatureCount> norm_mean{};
    std::array<double, kFeatureCount> norm_std{};  // never below 1e-12; degenerate stds become 1
    std::vector<double> w1;                        // kHiddenWidth x kFeatureCount, row-major
    std::vector<double> b1;                        // kHiddenWidth
    std::vector<double> w2;                        // kQuadrantCount x kHiddenWidth
    std::vector<double> b2;                        // kQuadrantCount
    std::uint64_t seed = 0;
    int epochs = 0;
    std::vector<double> train_loss;  // one entry per optimizer step
    std::vector<double> val_loss;    // one entry per epoch
};

/// All-zero weights, unit normalization: classifies everything as uniform.
ClassifierModel zero_model();

/// Softmax probabilities for one feature vector. Throws std::invalid_argument
/// on non-finite features.
QuadrantProbs classify(const ClassifierModel& model, const FeatureVector& features);

/// Minibatch SGD on cross-entropy. Deterministic under config.seed: shuffle,
/// split, init, and batch order all derive from it. Normalization is fitted
/// on the training split only. Throws DataError on a single-class corpus,
/// a corpus smaller than two batches, or a non-finite loss.
ClassifierModel train(const std::vector<LabeledClip>& corpus, const TrainingConfig& config,
                      double v_threshold = kDefaultVaThreshold,
                      double a_threshold = kDefaultVaThreshold);

struct EvalResult {
    double accuracy = 0.0;
    std::array<std::array<int, 4>, 4> confusion{};  // [true][predicted]
};

EvalResult evaluate(const ClassifierModel& model, const std::vector<LabeledClip>& corpus,
                    double v_threshold = kDefaultVaThreshold,
                    double a_threshold = kDefaultVaThreshold);

/// Confusion/accuracy from already-computed predictions.
EvalResult evaluate_predictions(const std::vector<Quadrant>& truth,
                                const std::vector<Quadrant>& predicted);

struct Gradients {
    std::vector<double> w1, b1, w2, b2;
};

/// Mean cross-entropy over the batch; analytic gradients written to `grads`
/// when non-null. Exposed so tests can check against finite differences.
double loss_and_gradient(const ClassifierModel& model, const std::vector<FeatureVector>& features,
                         const std::vector<Quadrant>& labels, Gradients* grads);

std::string serialize_model(const ClassifierModel& model);
ClassifierModel parse_model(const std::string& text);
void save_model(const ClassifierModel& model, const std::string& path);
ClassifierModel load_model(const std::string& path);

/// CSV manifest: header `path,quadrant` or `path,valence,arousal`, paths
/// resolved relative to the manifest's directory.
std::vector<LabeledClip> load_manifest(const std::string& path);
void write_quadrant_manifest(const std::string& path,
                             const std::vector<std::pair<std::string, Quadrant>>& rows);

/// Loss curves as `step,train_loss,val_loss`; the validation column is
/// filled on each epoch's final step.
void write_loss_csv(const ClassifierModel& model, const std::string& path);

}  // namespace moodshift::emotion
