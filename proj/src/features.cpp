#include "moodshift/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "moodshift/errors.hpp"
#include "moodshift/key_profiles.hpp"

namespace moodshift::emotion {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kBins = kFrameSize / 2 + 1;

void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

double mean_of(const std::vector<double>& xs) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs, double mean) {
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return xs.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(xs.size()));
}

}  // namespace

FeatureVector extract_features(const synth::AudioClip& clip) {
    const auto n = static_cast<std::int64_t>(clip.samples.size());
    if (n < kFrameSize) throw InputError("extract_features: clip shorter than one frame");
    const double sr = static_cast<double>(clip.sample_rate_hz);
    const double bin_hz = sr / kFrameSize;

    std::array<double, kFrameSize> window;
    for (int j = 0; j < kFrameSize; ++j)
        window[j] = 0.5 - 0.5 * std::cos(2.0 * kPi * j / kFrameSize);

    std::vector<double> rms, centroid, rolloff, zcr, flux;
    std::array<double, 12> chroma_acc{};
    double low_energy = 0.0, high_energy = 0.0;
    std::vector<double> prev_mags;

    // precomputed pitch class per bin (-1 = ignore)
    std::array<int, kBins> bin_pc;
    for (int k = 0; k < kBins; ++k) {
        const double f = k * bin_hz;
        if (f < 20.0) {
            bin_pc[k] = -1;
            continue;
        }
        const int pitch = static_cast<int>(std::lround(69.0 + 12.0 * std::log2(f / 440.0)));
        bin_pc[k] = ((pitch % 12) + 12) % 12;
    }

    std::vector<std::complex<double>> frame(kFrameSize);
    std::vector<double> mags(kBins);
    for (std::int64_t start = 0; start + kFrameSize <= n; start += kHopSize) {
        int crossings = 0;
        for (int j = 0; j < kFrameSize; ++j) {
            const double x = static_cast<double>(clip.samples[start + j]);
            frame[j] = {window[j] * x, 0.0};
            if (j > 0) {
                const double prev = static_cast<double>(clip.samples[start + j - 1]);
                if ((x > 0.0 && prev <= 0.0) || (x <= 0.0 && prev > 0.0)) ++crossings;
            }
        }
        zcr.push_back(static_cast<double>(crossings) / kFrameSize);

        double sq = 0.0;
        for (int j = 0; j < kFrameSize; ++j) {
            const double x = static_cast<double>(clip.samples[start + j]);
            sq += x * x;
        }
        rms.push_back(std::sqrt(sq / kFrameSize));

        fft_radix2(frame);
        double mag_total = 0.0, energy_total = 0.0, weighted = 0.0;
        for (int k = 0; k < kBins; ++k) {
            mags[k] = std::abs(frame[k]);
            mag_total += mags[k];
            energy_total += mags[k] * mags[k];
            weighted += k * bin_hz * mags[k];
        }
        centroid.push_back(mag_total > 0.0 ? weighted / mag_total : 0.0);

        if (energy_total > 0.0) {
            const double threshold = 0.85 * energy_total;
            double cum = 0.0;
            int k = 0;
            for (; k < kBins; ++k) {
                cum += mags[k] * mags[k];
                if (cum >= threshold) break;
            }
            rolloff.push_back(std::min(k, kBins - 1) * bin_hz);
        } else {
            rolloff.push_back(0.0);
        }

        double fl = 0.0;
        if (!prev_mags.empty())
            for (int k = 0; k < kBins; ++k) fl += std::max(0.0, mags[k] - prev_mags[k]);
        flux.push_back(fl / kBins);
        prev_mags = mags;

        for (int k = 0; k < kBins; ++k) {
            const double e = mags[k] * mags[k];
            const double f = k * bin_hz;
            if (f < 500.0) low_energy += e;
            if (f > 2000.0) high_energy += e;
            if (bin_pc[k] >= 0) chroma_acc[bin_pc[k]] += e;
        }
    }

    std::array<double, 12> chroma;
    double chroma_total = 0.0;
    for (double c : chroma_acc) chroma_total += c;
    if (chroma_total > 0.0)
        for (int i = 0; i < 12; ++i) chroma[i] = chroma_acc[i] / chroma_total;
    else
        chroma.fill(1.0 / 12.0);

    // best key-profile correlation per mode, any tonic
    double best_major = -2.0, best_minor = -2.0;
    for (int tonic = 0; tonic < 12; ++tonic) {
        std::array<double, 12> maj, min;
        for (int i = 0; i < 12; ++i) {
            maj[i] = kKkMajorProfile[(i - tonic + 12) % 12];
            min[i] = kKkMinorProfile[(i - tonic + 12) % 12];
        }
        best_major = std::max(best_major, pitch_class_correlation(chroma, maj));
        best_minor = std::max(best_minor, pitch_class_correlation(chroma, min));
    }

    // tempo from the flux envelope: strongest autocorrelation lag, scored
    // per-sample so short lags get no length advantage
    double tempo_bpm = 0.0;
    {
        const int frames = static_cast<int>(flux.size());
        const double frame_rate = sr / kHopSize;
        const int lag_lo = std::max(2, static_cast<int>(std::ceil(frame_rate * 60.0 / 320.0)));
        const int lag_hi = static_cast<int>(std::floor(frame_rate * 60.0 / 30.0));
        double env_energy = 0.0;
        for (double v : flux) env_energy += v * v;
        if (env_energy > 0.0) {
            int best_lag = 0;
            double best_score = 0.0;
            for (int lag = lag_lo; lag <= lag_hi && lag < frames - 1; ++lag) {
                double acc = 0.0;
                for (int t = lag; t < frames; ++t) acc += flux[t] * flux[t - lag];
                const double score = acc / static_cast<double>(frames - lag);
                if (score > best_score) {
                    best_score = score;
                    best_lag = lag;
                }
            }
            if (best_lag > 0) tempo_bpm = 60.0 * frame_rate / best_lag;
        }
    }

    FeatureVector out{};
    const double rms_mean = mean_of(rms);
    const double centroid_mean = mean_of(centroid);
    const double rolloff_mean = mean_of(rolloff);
    const double zcr_mean = mean_of(zcr);
    const double flux_mean = mean_of(flux);
    out[0] = rms_mean;
    out[1] = std_of(rms, rms_mean);
    out[2] = centroid_mean;
    out[3] = std_of(centroid, centroid_mean);
    out[4] = rolloff_mean;
    out[5] = std_of(rolloff, rolloff_mean);
    out[6] = zcr_mean;
    out[7] = std_of(zcr, zcr_mean);
    out[8] = flux_mean;
    out[9] = std_of(flux, flux_mean);
    out[10] = (low_energy + 1e-12) / (high_energy + 1e-12);
    out[11] = tempo_bpm;
    for (int i = 0; i < 12; ++i) out[12 + i] = chroma[i];
    out[24] = best_major - best_minor;
    return out;
}

}  // namespace moodshift::emotion
