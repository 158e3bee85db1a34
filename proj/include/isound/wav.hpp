#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "isound/errors.hpp"

namespace isound {

struct WavData {
    std::vector<double> samples;   // channel 0, normalized to [-1, 1]
    double sample_rate_hz = 0.0;
    int channels = 1;
    std::vector<std::string> warnings;
};

namespace wav_detail {

inline std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

inline std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
           (static_cast<std::uint32_t>(b[off + 2]) << 16) |
           (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

inline bool id_is(std::span<const std::uint8_t> b, std::size_t off, const char* id) {
    return b[off] == static_cast<std::uint8_t>(id[0]) &&
           b[off + 1] == static_cast<std::uint8_t>(id[1]) &&
           b[off + 2] == static_cast<std::uint8_t>(id[2]) &&
           b[off + 3] == static_cast<std::uint8_t>(id[3]);
}

inline std::string id_str(std::span<const std::uint8_t> b, std::size_t off) {
    return std::string(reinterpret_cast<const char*>(b.data() + off), 4);
}

inline void push_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
    b.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

inline void push_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
    b.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    b.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    b.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline void push_id(std::vector<std::uint8_t>& b, const char* id) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(id[i]));
}

} // namespace wav_detail

// Division by 32768 (not 32767) so -32768 maps exactly to -1.0 and the int16
// values are recoverable bit-exactly by pcm16_from_sample.
inline double sample_from_pcm16(std::int16_t s) {
    return static_cast<double>(s) / 32768.0;
}

inline std::int16_t pcm16_from_sample(double v) {
    const double scaled = std::lround(v * 32768.0);
    if (scaled >= 32767.0) return 32767;
    if (scaled <= -32768.0) return -32768;
    return static_cast<std::int16_t>(scaled);
}

// Reads a RIFF/WAVE container holding integer PCM (format code 1, 16 bits per
// sample). Chunks other than 'fmt ' and 'data' are skipped; anything after
// 'data' is ignored. Multi-channel files are accepted: channel 0 is kept and
// a warning is recorded.
inline WavData parse_wav(std::span<const std::uint8_t> bytes) {
    using namespace wav_detail;
    if (bytes.size() < 12) throw data_error("wav: truncated RIFF header");
    if (!id_is(bytes, 0, "RIFF"))
        throw data_error("wav: bad chunk 'RIFF' (got '" + id_str(bytes, 0) + "')");
    if (!id_is(bytes, 8, "WAVE"))
        throw data_error("wav: bad form type 'WAVE' (got '" + id_str(bytes, 8) + "')");

    WavData out;
    bool have_fmt = false;
    std::uint16_t channels = 0;

    std::size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const std::string id = id_str(bytes, off);
        const std::uint32_t size = read_u32(bytes, off + 4);
        const std::size_t payload = off + 8;
        if (payload + size > bytes.size())
            throw data_error("wav: chunk '" + id + "' runs past end of file");

        if (id == "fmt ") {
            if (size < 16) throw data_error("wav: chunk 'fmt ' too short");
            const std::uint16_t format = read_u16(bytes, payload);
            channels = read_u16(bytes, payload + 2);
            const std::uint32_t rate = read_u32(bytes, payload + 4);
            const std::uint16_t bits = read_u16(bytes, payload + 14);
            if (format != 1)
                throw data_error("wav: unsupported format code " + std::to_string(format) +
                                 " (only PCM is supported)");
            if (bits != 16)
                throw data_error("wav: unsupported bit depth " + std::to_string(bits) +
                                 " (only 16-bit PCM is supported)");
            if (channels == 0) throw data_error("wav: chunk 'fmt ' declares zero channels");
            out.sample_rate_hz = static_cast<double>(rate);
            out.channels = channels;
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw data_error("wav: chunk 'data' appears before 'fmt '");
            const std::size_t frame = 2u * channels;
            if (size % frame != 0)
                out.warnings.push_back("wav: 'data' size not a multiple of the frame size; "
                                       "trailing bytes ignored");
            const std::size_t frames = size / frame;
            if (frames == 0) throw data_error("wav: chunk 'data' holds no samples");
            if (channels > 1)
                out.warnings.push_back("wav: " + std::to_string(channels) +
                                       " channels; using channel 0");
            out.samples.resize(frames);
            for (std::size_t i = 0; i < frames; ++i) {
                const std::size_t p = payload + i * frame;
                const std::int16_t s =
                    static_cast<std::int16_t>(read_u16(bytes, p));
                out.samples[i] = sample_from_pcm16(s);
            }
            return out;
        }
        off = payload + size + (size & 1); // chunks are word-aligned
    }
    if (!have_fmt) throw data_error("wav: missing chunk 'fmt '");
    throw data_error("wav: missing chunk 'data'");
}

inline std::vector<std::uint8_t> write_wav_pcm16(std::span<const std::int16_t> samples,
                                                 std::uint32_t sample_rate_hz) {
    using namespace wav_detail;
    const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
    std::vector<std::uint8_t> b;
    b.reserve(44 + data_size);
    push_id(b, "RIFF");
    push_u32(b, 36 + data_size);
    push_id(b, "WAVE");
    push_id(b, "fmt ");
    push_u32(b, 16);
    push_u16(b, 1); // PCM
    push_u16(b, 1); // mono
    push_u32(b, sample_rate_hz);
    push_u32(b, sample_rate_hz * 2);
    push_u16(b, 2);  // block align
    push_u16(b, 16); // bits per sample
    push_id(b, "data");
    push_u32(b, data_size);
    for (std::int16_t s : samples) push_u16(b, static_cast<std::uint16_t>(s));
    return b;
}

inline std::vector<std::uint8_t> write_wav(std::span<const double> samples,
                                           std::uint32_t sample_rate_hz) {
    std::vector<std::int16_t> pcm(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) pcm[i] = pcm16_from_sample(samples[i]);
    return write_wav_pcm16(pcm, sample_rate_hz);
}

} // namespace isound
