#include "moodshift/classifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "moodshift/errors.hpp"
#include "moodshift/rng.hpp"

namespace moodshift::emotion {

namespace {

constexpr int kF = kFeatureCount;
constexpr int kH = kHiddenWidth;
constexpr int kQ = kQuadrantCount;

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

synth::AudioClip clip_audio(const LabeledClip& clip) {
    if (clip.audio) return *clip.audio;
    if (clip.path.empty()) throw DataError("labeled clip has neither audio nor a path");
    return synth::load_wav(clip.path);
}

struct Forward {
    std::array<double, kF> z;
    std::array<double, kH> h;
    std::array<double, kQ> probs;
};

Forward forward_pass(const ClassifierModel& m, const FeatureVector& x) {
    Forward f;
    for (int i = 0; i < kF; ++i) f.z[i] = (x[i] - m.norm_mean[i]) / m.norm_std[i];
    for (int j = 0; j < kH; ++j) {
        double a = m.b1[j];
        const double* row = &m.w1[static_cast<std::size_t>(j) * kF];
        for (int i = 0; i < kF; ++i) a += row[i] * f.z[i];
        f.h[j] = std::tanh(a);
    }
    std::array<double, kQ> logits;
    for (int q = 0; q < kQ; ++q) {
        double a = m.b2[q];
        const double* row = &m.w2[static_cast<std::size_t>(q) * kH];
        for (int j = 0; j < kH; ++j) a += row[j] * f.h[j];
        logits[q] = a;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (int q = 0; q < kQ; ++q) {
        f.probs[q] = std::exp(logits[q] - peak);
        denom += f.probs[q];
    }
    for (int q = 0; q < kQ; ++q) f.probs[q] /= denom;
    return f;
}

void check_model_shape(const ClassifierModel& m, const char* where) {
    if (m.w1.size() != static_cast<std::size_t>(kH) * kF || m.b1.size() != kH ||
        m.w2.size() != static_cast<std::size_t>(kQ) * kH || m.b2.size() != kQ)
        throw std::invalid_argument(std::string(where) + ": model has wrong shape");
    for (double s : m.norm_std)
        if (!(s > 0.0)) throw std::invalid_argument(std::string(where) + ": bad normalization");
}

void append_numbers(std::string& out, const char* key, const double* xs, std::size_t n) {
    out += key;
    char buf[40];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, " %.17g", xs[i]);
        out += buf;
    }
    out += '\n';
}

}  // namespace

const char* quadrant_name(Quadrant q) {
    static const char* names[] = {"Q1", "Q2", "Q3", "Q4"};
    return names[static_cast<int>(q)];
}

const char* quadrant_emotion(Quadrant q) {
    static const char* names[] = {"happy", "angry", "sad", "calm"};
    return names[static_cast<int>(q)];
}

Quadrant quadrant_from_index(int index) {
    if (index < 0 || index > 3) throw std::invalid_argument("quadrant index out of range");
    return static_cast<Quadrant>(index);
}

Quadrant parse_quadrant(const std::string& text) {
    const std::string t = lower(text);
    if (t == "q1" || t == "1" || t == "happy") return Quadrant::Q1;
    if (t == "q2" || t == "2" || t == "angry") return Quadrant::Q2;
    if (t == "q3" || t == "3" || t == "sad") return Quadrant::Q3;
    if (t == "q4" || t == "4" || t == "calm") return Quadrant::Q4;
    throw InputError("unknown quadrant '" + text + "'");
}

Quadrant predict_quadrant(const QuadrantProbs& probs) {
    int best = 0;
    for (int i = 1; i < kQ; ++i)
        if (probs[i] > probs[best]) best = i;
    return static_cast<Quadrant>(best);
}

Quadrant engineer_labels(double valence, double arousal, double v_threshold, double a_threshold) {
    const bool high_v = valence >= v_threshold;
    const bool high_a = arousal >= a_threshold;
    if (high_v && high_a) return Quadrant::Q1;
    if (!high_v && high_a) return Quadrant::Q2;
    if (!high_v && !high_a) return Quadrant::Q3;
    return Quadrant::Q4;
}

Quadrant resolve_label(const LabeledClip& clip, double v_threshold, double a_threshold) {
    if (clip.quadrant) return *clip.quadrant;
    if (clip.va) return engineer_labels(clip.va->valence, clip.va->arousal, v_threshold, a_threshold);
    throw DataError("clip '" + clip.path + "' has no label");
}

ClassifierModel zero_model() {
    ClassifierModel m;
    m.norm_std.fill(1.0);
    m.w1.assign(static_cast<std::size_t>(kH) * kF, 0.0);
    m.b1.assign(kH, 0.0);
    m.w2.assign(static_cast<std::size_t>(kQ) * kH, 0.0);
    m.b2.assign(kQ, 0.0);
    return m;
}

QuadrantProbs classify(const ClassifierModel& model, const FeatureVector& features) {
    check_model_shape(model, "classify");
    for (double x : features)
        if (!std::isfinite(x)) throw std::invalid_argument("classify: non-finite feature");
    const Forward f = forward_pass(model, features);
    return {f.probs[0], f.probs[1], f.probs[2], f.probs[3]};
}

double loss_and_gradient(const ClassifierModel& model, const std::vector<FeatureVector>& features,
                         const std::vector<Quadrant>& labels, Gradients* grads) {
    check_model_shape(model, "loss_and_gradient");
    if (features.empty() || features.size() != labels.size())
        throw std::invalid_argument("loss_and_gradient: empty or mismatched batch");

    if (grads) {
        grads->w1.assign(model.w1.size(), 0.0);
        grads->b1.assign(model.b1.size(), 0.0);
        grads->w2.assign(model.w2.size(), 0.0);
        grads->b2.assign(model.b2.size(), 0.0);
    }

    const double inv_n = 1.0 / static_cast<double>(features.size());
    double loss = 0.0;
    for (std::size_t s = 0; s < features.size(); ++s) {
        const Forward f = forward_pass(model, features[s]);
        const int y = static_cast<int>(labels[s]);
        loss -= std::log(std::max(f.probs[y], 1e-300));
        if (!grads) continue;

        std::array<double, kQ> dlogits;
        for (int q = 0; q < kQ; ++q) dlogits[q] = (f.probs[q] - (q == y ? 1.0 : 0.0)) * inv_n;

        std::array<double, kH> dh{};
        for (int q = 0; q < kQ; ++q) {
            const std::size_t row = static_cast<std::size_t>(q) * kH;
            for (int j = 0; j < kH; ++j) {
                grads->w2[row + j] += dlogits[q] * f.h[j];
                dh[j] += model.w2[row + j] * dlogits[q];
            }
            grads->b2[q] += dlogits[q];
        }
        for (int j = 0; j < kH; ++j) {
            const double da = dh[j] * (1.0 - f.h[j] * f.h[j]);
            const std::size_t row = static_cast<std::size_t>(j) * kF;
            for (int i = 0; i < kF; ++i) grads->w1[row + i] += da * f.z[i];
            grads->b1[j] += da;
        }
    }
    return loss * inv_n;
}

ClassifierModel train(const std::vector<LabeledClip>& corpus, const TrainingConfig& config,
                      double v_threshold, double a_threshold) {
    if (config.epochs <= 0 || config.batch_size <= 0 || config.learning_rate < 0.0 ||
        config.validation_fraction <= 0.0 || config.validation_fraction >= 1.0)
        throw std::invalid_argument("train: bad training config");
    const int n = static_cast<int>(corpus.size());
    if (n < 2 * config.batch_size)
        throw DataError("train: corpus smaller than two batches (" + std::to_string(n) + " clips)");

    std::vector<FeatureVector> features(n);
    std::vector<Quadrant> labels(n);
    bool seen[4] = {};
    for (int i = 0; i < n; ++i) {
        features[i] = extract_features(clip_audio(corpus[i]));
        labels[i] = resolve_label(corpus[i], v_threshold, a_threshold);
        seen[static_cast<int>(labels[i])] = true;
    }
    if (seen[0] + seen[1] + seen[2] + seen[3] < 2)
        throw DataError("train: corpus holds a single class");

    SplitMix64 rng{config.seed};
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(0, static_cast<std::uint64_t>(i))]);

    int n_val = static_cast<int>(std::lround(n * config.validation_fraction));
    n_val = std::clamp(n_val, 1, n - config.batch_size);
    const std::vector<int> val_idx(order.end() - n_val, order.end());
    std::vector<int> train_idx(order.begin(), order.end() - n_val);

    ClassifierModel model = zero_model();
    model.seed = config.seed;
    model.epochs = config.epochs;
    for (int i = 0; i < kF; ++i) {
        double mean = 0.0;
        for (int t : train_idx) mean += features[t][i];
        mean /= static_cast<double>(train_idx.size());
        double var = 0.0;
        for (int t : train_idx) var += (features[t][i] - mean) * (features[t][i] - mean);
        const double sd = std::sqrt(var / static_cast<double>(train_idx.size()));
        model.norm_mean[i] = mean;
        model.norm_std[i] = sd < 1e-12 ? 1.0 : sd;
    }
    const double s1 = std::sqrt(1.0 / kF);
    for (double& w : model.w1) w = rng.normal() * s1;
    const double s2 = std::sqrt(1.0 / kH);
    for (double& w : model.w2) w = rng.normal() * s2;

    auto batch_of = [&](const std::vector<int>& idx, int from, int count,
                        std::vector<FeatureVector>& bx, std::vector<Quadrant>& by) {
        bx.clear();
        by.clear();
        for (int k = 0; k < count; ++k) {
            bx.push_back(features[idx[from + k]]);
            by.push_back(labels[idx[from + k]]);
        }
    };

    const int steps_per_epoch = static_cast<int>(train_idx.size()) / config.batch_size;
    std::vector<FeatureVector> bx;
    std::vector<Quadrant> by;
    Gradients g;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int i = static_cast<int>(train_idx.size()) - 1; i > 0; --i)
            std::swap(train_idx[i], train_idx[rng.uniform_int(0, static_cast<std::uint64_t>(i))]);
        for (int step = 0; step < steps_per_epoch; ++step) {
            batch_of(train_idx, step * config.batch_size, config.batch_size, bx, by);
            const double loss = loss_and_gradient(model, bx, by, &g);
            if (!std::isfinite(loss))
                throw DataError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                " step " + std::to_string(step));
            model.train_loss.push_back(loss);
            const double lr = config.learning_rate;
            for (std::size_t i = 0; i < model.w1.size(); ++i) model.w1[i] -= lr * g.w1[i];
            for (std::size_t i = 0; i < model.b1.size(); ++i) model.b1[i] -= lr * g.b1[i];
            for (std::size_t i = 0; i < model.w2.size(); ++i) model.w2[i] -= lr * g.w2[i];
            for (std::size_t i = 0; i < model.b2.size(); ++i) model.b2[i] -= lr * g.b2[i];
        }
        batch_of(val_idx, 0, static_cast<int>(val_idx.size()), bx, by);
        model.val_loss.push_back(loss_and_gradient(model, bx, by, nullptr));
    }
    return model;
}

EvalResult evaluate(const ClassifierModel& model, const std::vector<LabeledClip>& corpus,
                    double v_threshold, double a_threshold) {
    if (corpus.empty()) throw InputError("evaluate: empty corpus");
    std::vector<Quadrant> truth, predicted;
    truth.reserve(corpus.size());
    predicted.reserve(corpus.size());
    for (const auto& clip : corpus) {
        truth.push_back(resolve_label(clip, v_threshold, a_threshold));
        predicted.push_back(predict_quadrant(classify(model, extract_features(clip_audio(clip)))));
    }
    return evaluate_predictions(truth, predicted);
}

EvalResult evaluate_predictions(const std::vector<Quadrant>& truth,
                                const std::vector<Quadrant>& predicted) {
    if (truth.empty() || truth.size() != predicted.size())
        throw std::invalid_argument("evaluate_predictions: empty or mismatched inputs");
    EvalResult r;
    int correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++r.confusion[static_cast<int>(truth[i])][static_cast<int>(predicted[i])];
        if (truth[i] == predicted[i]) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    return r;
}

std::string serialize_model(const ClassifierModel& model) {
    check_model_shape(model, "serialize_model");
    std::string out;
    out += kModelMagic;
    out += '\n';
    out += "features " + std::to_string(kF) + "\n";
    out += "hidden " + std::to_string(kH) + "\n";
    out += "classes " + std::to_string(kQ) + "\n";
    out += "seed " + std::to_string(model.seed) + "\n";
    out += "epochs " + std::to_string(model.epochs) + "\n";
    append_numbers(out, "norm_mean", model.norm_mean.data(), kF);
    append_numbers(out, "norm_std", model.norm_std.data(), kF);
    append_numbers(out, "w1", model.w1.data(), model.w1.size());
    append_numbers(out, "b1", model.b1.data(), model.b1.size());
    append_numbers(out, "w2", model.w2.data(), model.w2.size());
    append_numbers(out, "b2", model.b2.data(), model.b2.size());
    append_numbers(out, "train_loss", model.train_loss.data(), model.train_loss.size());
    append_numbers(out, "val_loss", model.val_loss.data(), model.val_loss.size());
    return out;
}

ClassifierModel parse_model(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kModelMagic) {
        if (line.rfind("MOODSHIFT-MODEL ", 0) == 0)
            throw DataError("model: unsupported version '" + line + "'");
        throw InputError("model: missing or unsupported magic line");
    }

    ClassifierModel m = zero_model();
    auto expect_int = [&](const char* key) -> long long {
        std::string k;
        long long v = 0;
        if (!std::getline(in, line)) throw InputError("model: truncated file");
        std::istringstream ls(line);
        if (!(ls >> k >> v) || k != key)
            throw InputError(std::string("model: expected '") + key + "' line");
        return v;
    };
    if (expect_int("features") != kF) throw InputError("model: feature count mismatch");
    if (expect_int("hidden") != kH) throw InputError("model: hidden width mismatch");
    if (expect_int("classes") != kQ) throw InputError("model: class count mismatch");
    m.seed = static_cast<std::uint64_t>(expect_int("seed"));
    m.epochs = static_cast<int>(expect_int("epochs"));

    auto read_row = [&](const char* key, double* xs, std::size_t want, bool sized) {
        if (!std::getline(in, line)) throw InputError("model: truncated file");
        std::istringstream ls(line);
        std::string k;
        ls >> k;
        if (k != key) throw InputError(std::string("model: expected '") + key + "' row");
        std::vector<double> vals;
        double v;
        while (ls >> v) vals.push_back(v);
        if (sized && vals.size() != want)
            throw InputError(std::string("model: wrong length for '") + key + "'");
        std::copy(vals.begin(), vals.end(), xs);
        return vals;
    };
    read_row("norm_mean", m.norm_mean.data(), kF, true);
    read_row("norm_std", m.norm_std.data(), kF, true);
    read_row("w1", m.w1.data(), m.w1.size(), true);
    read_row("b1", m.b1.data(), m.b1.size(), true);
    read_row("w2", m.w2.data(), m.w2.size(), true);
    read_row("b2", m.b2.data(), m.b2.size(), true);

    auto read_list = [&](const char* key) {
        if (!std::getline(in, line)) throw InputError("model: truncated file");
        std::istringstream ls(line);
        std::string k;
        ls >> k;
        if (k != key) throw InputError(std::string("model: expected '") + key + "' row");
        std::vector<double> vals;
        double v;
        while (ls >> v) vals.push_back(v);
        return vals;
    };
    m.train_loss = read_list("train_loss");
    m.val_loss = read_list("val_loss");

    for (double s : m.norm_std)
        if (!(s > 0.0)) throw InputError("model: non-positive normalization std");
    return m;
}

void save_model(const ClassifierModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    const std::string text = serialize_model(model);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw InputError("failed writing '" + path + "'");
}

ClassifierModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open model file '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_model(buf.str());
}

std::vector<LabeledClip> load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open manifest '" + path + "'");
    const auto base = std::filesystem::path(path).parent_path();

    std::string line;
    if (!std::getline(f, line)) throw InputError("manifest: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string header = lower(line);
    bool va_form;
    if (header == "path,quadrant")
        va_form = false;
    else if (header == "path,valence,arousal")
        va_form = true;
    else
        throw InputError("manifest: header must be 'path,quadrant' or 'path,valence,arousal'");

    std::vector<LabeledClip> out;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        LabeledClip clip;
        try {
            if (!va_form) {
                if (cells.size() != 2) throw InputError("expected 2 columns");
                clip.quadrant = parse_quadrant(cells[1]);
            } else {
                if (cells.size() != 3) throw InputError("expected 3 columns");
                clip.va = ValenceArousal{std::stod(cells[1]), std::stod(cells[2])};
            }
        } catch (const std::exception& e) {
            throw InputError("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        clip.path = (base / cells[0]).string();
        out.push_back(std::move(clip));
    }
    if (out.empty()) throw InputError("manifest: no entries");
    return out;
}

void write_quadrant_manifest(const std::string& path,
                             const std::vector<std::pair<std::string, Quadrant>>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    f << "path,quadrant\n";
    for (const auto& [rel, q] : rows) f << rel << ',' << quadrant_name(q) << '\n';
    if (!f) throw InputError("failed writing '" + path + "'");
}

void write_loss_csv(const ClassifierModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    f << "step,train_loss,val_loss\n";
    const std::size_t steps = model.train_loss.size();
    const std::size_t epochs = model.val_loss.size();
    const std::size_t per_epoch = epochs > 0 ? steps / epochs : 0;
    char buf[40];
    for (std::size_t s = 0; s < steps; ++s) {
        std::snprintf(buf, sizeof buf, "%.9g", model.train_loss[s]);
        f << (s + 1) << ',' << buf;
        if (per_epoch > 0 && (s + 1) % per_epoch == 0 && (s + 1) / per_epoch <= epochs) {
            std::snprintf(buf, sizeof buf, "%.9g", model.val_loss[(s + 1) / per_epoch - 1]);
            f << ',' << buf;
        } else {
            f << ',';
        }
        f << '\n';
    }
    if (!f) throw InputError("failed writing '" + path + "'");
}

}  // namespace moodshift::emotion
