#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "moodshift/errors.hpp"
#include "moodshift/synth.hpp"

namespace moodshift::synth {

namespace {

void push_u16le(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(x & 0xff);
    v.push_back((x >> 8) & 0xff);
}

void push_u32le(std::vector<std::uint8_t>& v, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back((x >> (8 * i)) & 0xff);
}

std::uint32_t read_u32le(std::span<const std::uint8_t> b, std::size_t at) {
    if (at + 4 > b.size()) throw InputError("wav: truncated file");
    return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) |
           (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint32_t read_u16le(std::span<const std::uint8_t> b, std::size_t at) {
    if (at + 2 > b.size()) throw InputError("wav: truncated file");
    return b[at] | (b[at + 1] << 8);
}

}  // namespace

std::vector<std::uint8_t> write_wav(const AudioClip& clip) {
    if (clip.sample_rate_hz <= 0) throw std::invalid_argument("write_wav: bad sample rate");
    const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
    const std::uint32_t data_bytes = n * 2;
    const std::uint32_t rate = static_cast<std::uint32_t>(clip.sample_rate_hz);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    push_u32le(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    push_u32le(out, 16);       // fmt chunk size
    push_u16le(out, 1);        // PCM
    push_u16le(out, 1);        // mono
    push_u32le(out, rate);
    push_u32le(out, rate * 2); // byte rate
    push_u16le(out, 2);        // block align
    push_u16le(out, 16);       // bits per sample
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    push_u32le(out, data_bytes);
    for (float s : clip.samples) {
        const double x = std::clamp(static_cast<double>(s), -1.0, 1.0);
        const int v = static_cast<int>(std::lround(x * 32767.0));
        push_u16le(out, static_cast<std::uint16_t>(v));
    }
    return out;
}

AudioClip read_wav(std::span<const std::uint8_t> bytes, int target_rate_hz) {
    if (target_rate_hz <= 0) throw std::invalid_argument("read_wav: bad target rate");
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw InputError("wav: not a RIFF/WAVE file");

    int channels = 0;
    int src_rate = 0;
    int bits = 0;
    bool have_fmt = false;
    std::span<const std::uint8_t> data;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t len = read_u32le(bytes, pos + 4);
        pos += 8;
        if (pos + len > bytes.size()) throw InputError("wav: truncated chunk");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (len < 16) throw InputError("wav: malformed fmt chunk");
            const std::uint32_t format = read_u16le(bytes, pos);
            channels = static_cast<int>(read_u16le(bytes, pos + 2));
            src_rate = static_cast<int>(read_u32le(bytes, pos + 4));
            bits = static_cast<int>(read_u16le(bytes, pos + 14));
            if (format != 1) throw InputError("wav: only PCM encoding is supported");
            if (bits != 16) throw InputError("wav: only 16-bit samples are supported");
            if (channels != 1 && channels != 2)
                throw InputError("wav: only mono or stereo supported");
            if (src_rate <= 0) throw InputError("wav: bad sample rate");
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.subspan(pos, len);
            have_data = true;
        }
        pos += len + (len & 1);  // chunks are word-aligned
    }
    if (!have_fmt) throw InputError("wav: missing fmt chunk");
    if (!have_data) throw InputError("wav: missing data chunk");

    const std::size_t frame_bytes = static_cast<std::size_t>(channels) * 2;
    const std::size_t frames = data.size() / frame_bytes;
    std::vector<float> mono(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int ch = 0; ch < channels; ++ch) {
            const std::size_t at = i * frame_bytes + ch * 2;
            const std::int16_t v =
                static_cast<std::int16_t>(data[at] | (data[at + 1] << 8));
            acc += static_cast<double>(v) / 32767.0;
        }
        mono[i] = static_cast<float>(std::clamp(acc / channels, -1.0, 1.0));
    }

    AudioClip clip;
    clip.sample_rate_hz = target_rate_hz;
    if (src_rate == target_rate_hz || mono.empty()) {
        clip.samples = std::move(mono);
        return clip;
    }

    const double ratio = static_cast<double>(src_rate) / target_rate_hz;
    const std::size_t out_n = static_cast<std::size_t>(
        std::max<double>(1.0, std::floor((frames - 1) / ratio) + 1.0));
    clip.samples.resize(out_n);
    for (std::size_t i = 0; i < out_n; ++i) {
        const double src_pos = i * ratio;
        const std::size_t i0 = std::min(static_cast<std::size_t>(src_pos), frames - 1);
        const std::size_t i1 = std::min(i0 + 1, frames - 1);
        const double frac = src_pos - static_cast<double>(i0);
        clip.samples[i] = static_cast<float>((1.0 - frac) * mono[i0] + frac * mono[i1]);
    }
    return clip;
}

void save_wav(const std::string& path, const AudioClip& clip) {
    const auto bytes = write_wav(clip);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw InputError("failed writing '" + path + "'");
}

AudioClip load_wav(const std::string& path, int target_rate_hz) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return read_wav(bytes, target_rate_hz);
}

}  // namespace moodshift::synth
