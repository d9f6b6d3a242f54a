#include "moodshift/midi.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <tuple>

#include "moodshift/errors.hpp"
#include "moodshift/key_profiles.hpp"

namespace moodshift::midi {

namespace {

constexpr const char* kNoteNames[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                                        "F#", "G",  "G#", "A",  "A#", "B"};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    bool eof() const { return pos_ >= data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

    std::uint8_t u8() {
        if (pos_ >= data_.size()) throw InputError("midi: unexpected end of file");
        return data_[pos_++];
    }

    std::uint32_t u16be() {
        std::uint32_t hi = u8();
        return (hi << 8) | u8();
    }

    std::uint32_t u32be() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
        return v;
    }

    /// Variable-length quantity, at most 4 bytes per the SMF spec.
    std::uint32_t vlq() {
        std::uint32_t value = 0;
        for (int i = 0; i < 4; ++i) {
            std::uint8_t b = u8();
            value = (value << 7) | (b & 0x7f);
            if (!(b & 0x80)) return value;
        }
        throw InputError("midi: variable-length quantity longer than 4 bytes");
    }

    void skip(std::size_t n) {
        if (remaining() < n) throw InputError("midi: truncated chunk");
        pos_ += n;
    }

    std::span<const std::uint8_t> take(std::size_t n) {
        if (remaining() < n) throw InputError("midi: truncated chunk");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

struct OpenNote {
    std::int64_t onset = 0;
    int velocity = 0;
};

void parse_track(std::span<const std::uint8_t> data, std::vector<NoteEvent>& out,
                 std::int64_t* first_tempo, ParseStats& stats) {
    ByteReader r(data);
    // FIFO queues per (channel, pitch) so back-to-back repeats pair correctly.
    std::vector<std::deque<OpenNote>> open(16 * 128);
    std::int64_t tick = 0;
    std::int64_t end_tick = 0;
    std::uint8_t running_status = 0;
    bool done = false;

    auto close_note = [&](int channel, int pitch, std::int64_t off_tick) {
        auto& q = open[channel * 128 + pitch];
        if (q.empty()) return;  // unmatched note-off, ignore
        OpenNote n = q.front();
        q.pop_front();
        std::int64_t dur = off_tick - n.onset;
        if (dur <= 0) dur = 1;
        out.push_back({n.onset, dur, pitch, n.velocity, channel});
    };

    while (!r.eof() && !done) {
        tick += r.vlq();
        end_tick = std::max(end_tick, tick);
        std::uint8_t status = r.u8();
        std::uint8_t pre_d1 = 0;
        bool have_d1 = false;
        if (status < 0x80) {
            // running status: the byte just read is already the first data byte
            if (running_status < 0x80) throw InputError("midi: data byte without status");
            pre_d1 = status;
            have_d1 = true;
            status = running_status;
        } else if (status < 0xf0) {
            running_status = status;
        }

        if (status >= 0xf0) {
            if (status == 0xff) {
                std::uint8_t type = r.u8();
                std::uint32_t len = r.vlq();
                auto payload = r.take(len);
                if (type == 0x51 && len == 3) {
                    std::int64_t tempo =
                        (std::int64_t(payload[0]) << 16) | (payload[1] << 8) | payload[2];
                    if (*first_tempo < 0 && tempo > 0) *first_tempo = tempo;
                } else if (type == 0x2f) {
                    done = true;
                }
            } else if (status == 0xf0 || status == 0xf7) {
                r.skip(r.vlq());
            } else {
                throw InputError("midi: unexpected system status byte in track");
            }
            continue;
        }

        const int channel = status & 0x0f;
        const int kind = status & 0xf0;
        const std::uint8_t d1 = have_d1 ? (pre_d1 & 0x7f) : (r.u8() & 0x7f);
        switch (kind) {
            case 0x80: {
                r.u8();  // release velocity
                close_note(channel, d1, tick);
                break;
            }
            case 0x90: {
                std::uint8_t vel = r.u8() & 0x7f;
                if (vel == 0) {
                    close_note(channel, d1, tick);
                } else {
                    open[channel * 128 + d1].push_back({tick, vel});
                }
                break;
            }
            case 0xa0:
            case 0xb0:
            case 0xe0:
                r.u8();
                break;
            case 0xc0:
            case 0xd0:
                break;  // one data byte, already consumed
            default:
                throw InputError("midi: unknown channel message");
        }
    }

    for (auto& q : open) {
        while (!q.empty()) {
            OpenNote n = q.front();
            q.pop_front();
            std::int64_t dur = end_tick - n.onset;
            if (dur <= 0) dur = 1;
            const int idx = static_cast<int>(&q - open.data());
            out.push_back({n.onset, dur, idx % 128, n.velocity, idx / 128});
            ++stats.dangling_note_ons;
        }
    }

    std::stable_sort(out.begin(), out.end(), [](const NoteEvent& a, const NoteEvent& b) {
        return a.onset_ticks < b.onset_ticks;
    });
}

void push_u16be(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back((x >> 8) & 0xff);
    v.push_back(x & 0xff);
}

void push_u32be(std::vector<std::uint8_t>& v, std::uint32_t x) {
    for (int i = 3; i >= 0; --i) v.push_back((x >> (8 * i)) & 0xff);
}

void push_vlq(std::vector<std::uint8_t>& v, std::int64_t value) {
    std::uint8_t bytes[5];
    int n = 0;
    std::uint64_t x = static_cast<std::uint64_t>(value);
    do {
        bytes[n++] = x & 0x7f;
        x >>= 7;
    } while (x != 0);
    for (int i = n - 1; i > 0; --i) v.push_back(bytes[i] | 0x80);
    v.push_back(bytes[0]);
}

struct TrackItem {
    std::int64_t tick;
    int rank;  // tempo meta < note-off < note-on at equal ticks
    std::array<std::uint8_t, 3> bytes;
    int nbytes;
};

std::vector<std::uint8_t> encode_track(const std::vector<NoteEvent>& events, bool with_tempo,
                                       std::int64_t tempo) {
    std::vector<TrackItem> items;
    items.reserve(events.size() * 2 + 1);
    for (const NoteEvent& e : events) {
        const std::uint8_t on = static_cast<std::uint8_t>(0x90 | (e.channel & 0x0f));
        const std::uint8_t off = static_cast<std::uint8_t>(0x80 | (e.channel & 0x0f));
        const std::uint8_t pitch = static_cast<std::uint8_t>(e.pitch & 0x7f);
        items.push_back({e.onset_ticks, 1, {on, pitch, static_cast<std::uint8_t>(e.velocity & 0x7f)}, 3});
        items.push_back({e.onset_ticks + e.duration_ticks, 0, {off, pitch, 0x40}, 3});
    }
    std::stable_sort(items.begin(), items.end(), [](const TrackItem& a, const TrackItem& b) {
        return std::tie(a.tick, a.rank) < std::tie(b.tick, b.rank);
    });

    std::vector<std::uint8_t> data;
    std::int64_t cursor = 0;
    if (with_tempo) {
        data.push_back(0x00);
        data.push_back(0xff);
        data.push_back(0x51);
        data.push_back(0x03);
        data.push_back((tempo >> 16) & 0xff);
        data.push_back((tempo >> 8) & 0xff);
        data.push_back(tempo & 0xff);
    }
    for (const TrackItem& it : items) {
        push_vlq(data, it.tick - cursor);
        cursor = it.tick;
        for (int i = 0; i < it.nbytes; ++i) data.push_back(it.bytes[i]);
    }
    // end of track
    data.push_back(0x00);
    data.push_back(0xff);
    data.push_back(0x2f);
    data.push_back(0x00);

    std::vector<std::uint8_t> chunk;
    chunk.reserve(data.size() + 8);
    chunk.insert(chunk.end(), {'M', 'T', 'r', 'k'});
    push_u32be(chunk, static_cast<std::uint32_t>(data.size()));
    chunk.insert(chunk.end(), data.begin(), data.end());
    return chunk;
}

std::vector<NoteEvent> flattened_sorted(const MidiSong& s) {
    std::vector<NoteEvent> all;
    all.reserve(s.note_count());
    for (const auto& t : s.tracks) all.insert(all.end(), t.begin(), t.end());
    std::sort(all.begin(), all.end(), [](const NoteEvent& a, const NoteEvent& b) {
        return std::tie(a.onset_ticks, a.pitch, a.channel, a.duration_ticks, a.velocity) <
               std::tie(b.onset_ticks, b.pitch, b.channel, b.duration_ticks, b.velocity);
    });
    return all;
}

}  // namespace

std::int64_t MidiSong::span_ticks() const {
    std::int64_t end = 0;
    for (const auto& t : tracks)
        for (const NoteEvent& e : t) end = std::max(end, e.onset_ticks + e.duration_ticks);
    return end;
}

MidiSong parse_midi(std::span<const std::uint8_t> bytes, ParseStats* stats) {
    ParseStats local;
    ParseStats& st = stats ? *stats : local;
    st = ParseStats{};

    ByteReader r(bytes);
    auto id = r.take(4);
    if (!std::equal(id.begin(), id.end(), "MThd"))
        throw InputError("midi: missing MThd header chunk");
    std::uint32_t header_len = r.u32be();
    if (header_len < 6) throw InputError("midi: malformed header chunk");
    std::uint32_t format = r.u16be();
    std::uint32_t ntrks = r.u16be();
    std::uint32_t division = r.u16be();
    if (header_len > 6) r.skip(header_len - 6);
    if (format == 2) throw InputError("midi: SMF format 2 is not supported");
    if (format > 2) throw InputError("midi: unknown SMF format");
    if (division & 0x8000) throw InputError("midi: SMPTE time division is not supported");
    if (division == 0) throw InputError("midi: zero time division");

    MidiSong song;
    song.ticks_per_quarter = static_cast<int>(division);
    std::int64_t first_tempo = -1;

    std::uint32_t tracks_read = 0;
    while (tracks_read < ntrks && !r.eof()) {
        if (r.remaining() < 8) break;
        auto chunk_id = r.take(4);
        std::uint32_t len = r.u32be();
        auto payload = r.take(len);
        if (!std::equal(chunk_id.begin(), chunk_id.end(), "MTrk")) continue;  // alien chunk
        std::vector<NoteEvent> events;
        parse_track(payload, events, &first_tempo, st);
        song.tracks.push_back(std::move(events));
        ++tracks_read;
    }
    if (tracks_read == 0) throw InputError("midi: no track chunks found");
    song.tempo_us_per_quarter = first_tempo > 0 ? first_tempo : 500000;
    return song;
}

std::vector<std::uint8_t> write_midi(const MidiSong& song) {
    if (song.ticks_per_quarter <= 0 || song.ticks_per_quarter > 0x7fff)
        throw InputError("midi: ticks_per_quarter out of range");
    if (song.tempo_us_per_quarter <= 0 || song.tempo_us_per_quarter > 0xffffff)
        throw InputError("midi: tempo out of range");

    std::vector<std::vector<NoteEvent>> tracks = song.tracks;
    if (tracks.empty()) tracks.emplace_back();
    const std::uint32_t format = tracks.size() > 1 ? 1 : 0;

    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'M', 'T', 'h', 'd'});
    push_u32be(out, 6);
    push_u16be(out, format);
    push_u16be(out, static_cast<std::uint32_t>(tracks.size()));
    push_u16be(out, static_cast<std::uint32_t>(song.ticks_per_quarter));
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        auto chunk = encode_track(tracks[i], i == 0, song.tempo_us_per_quarter);
        out.insert(out.end(), chunk.begin(), chunk.end());
    }
    return out;
}

TransposeResult transpose(const MidiSong& song, int semitones) {
    if (semitones < -127 || semitones > 127)
        throw std::invalid_argument("transpose: |semitones| must be <= 127");
    TransposeResult result;
    result.song = song;
    for (auto& track : result.song.tracks) {
        for (NoteEvent& e : track) {
            int p = e.pitch + semitones;
            bool folded = false;
            while (p < 0) {
                p += 12;
                folded = true;
            }
            while (p > 127) {
                p -= 12;
                folded = true;
            }
            e.pitch = p;
            if (folded) ++result.folded_notes;
        }
    }
    return result;
}

std::array<double, 12> pitch_class_histogram(const MidiSong& song) {
    std::array<double, 12> h{};
    for (const auto& t : song.tracks)
        for (const NoteEvent& e : t)
            h[((e.pitch % 12) + 12) % 12] += static_cast<double>(e.duration_ticks);
    return h;
}

KeyEstimate detect_key(const MidiSong& song) {
    if (song.note_count() == 0) throw InputError("detect_key: song has no notes");
    const auto hist = pitch_class_histogram(song);

    double best = -2.0, second = -2.0;
    KeyEstimate estimate;
    for (int mode = 0; mode < 2; ++mode) {
        const auto& profile = mode == 0 ? kKkMajorProfile : kKkMinorProfile;
        for (int tonic = 0; tonic < 12; ++tonic) {
            std::array<double, 12> rotated;
            for (int i = 0; i < 12; ++i) rotated[i] = profile[(i - tonic + 12) % 12];
            double r = pitch_class_correlation(hist, rotated);
            if (r > best) {
                second = best;
                best = r;
                estimate.tonic_pc = tonic;
                estimate.mode = mode == 0 ? Mode::Major : Mode::Minor;
            } else if (r > second) {
                second = r;
            }
        }
    }
    estimate.confidence = std::clamp((best - second) / 2.0, 0.0, 1.0);
    return estimate;
}

std::vector<TranspositionTarget> enumerate_transpositions(const MidiSong& song, int lowest_target,
                                                          int highest_target) {
    if (lowest_target < 0 || highest_target > 127 || lowest_target > highest_target)
        throw std::invalid_argument("enumerate_transpositions: invalid target range");
    const KeyEstimate key = detect_key(song);
    const int anchor = 60 + key.tonic_pc;  // detected tonic realized in octave 4
    std::vector<TranspositionTarget> out;
    out.reserve(highest_target - lowest_target + 1);
    for (int target = lowest_target; target <= highest_target; ++target)
        out.push_back({pitch_to_note_name(target), target, target - anchor});
    return out;
}

int note_name_to_pitch(const std::string& name) {
    if (name.empty()) throw InputError("note name: empty string");
    std::size_t i = 0;
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(name[i++])));
    static constexpr int kBase[7] = {9, 11, 0, 2, 4, 5, 7};  // A B C D E F G
    if (letter < 'A' || letter > 'G') throw InputError("note name: bad letter in '" + name + "'");
    int pc = kBase[letter - 'A'];
    if (i < name.size() && (name[i] == '#' || name[i] == 's')) {
        pc += 1;
        ++i;
    } else if (i < name.size() && (name[i] == 'b' || name[i] == 'B')) {
        pc -= 1;
        ++i;
    }
    if (i >= name.size()) throw InputError("note name: missing octave in '" + name + "'");
    int octave = 0;
    try {
        std::size_t used = 0;
        octave = std::stoi(name.substr(i), &used);
        if (used != name.size() - i) throw InputError("note name: trailing characters in '" + name + "'");
    } catch (const InputError&) {
        throw;
    } catch (const std::exception&) {
        throw InputError("note name: bad octave in '" + name + "'");
    }
    const int pitch = 12 * (octave + 1) + pc;
    if (pitch < 0 || pitch > 127) throw InputError("note name: '" + name + "' outside MIDI range");
    return pitch;
}

std::string pitch_to_note_name(int pitch) {
    if (pitch < 0 || pitch > 127) throw std::invalid_argument("pitch_to_note_name: out of range");
    return std::string(kNoteNames[pitch % 12]) + std::to_string(pitch / 12 - 1);
}

bool events_equivalent(const MidiSong& a, const MidiSong& b) {
    return a.ticks_per_quarter == b.ticks_per_quarter &&
           a.tempo_us_per_quarter == b.tempo_us_per_quarter &&
           flattened_sorted(a) == flattened_sorted(b);
}

}  // namespace moodshift::midi
