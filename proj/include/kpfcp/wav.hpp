#ifndef KPFCP_WAV_HPP
#define KPFCP_WAV_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "kpfcp/common.hpp"
#include "kpfcp/stft.hpp"

namespace kpfcp::wav {

// Only 16-bit PCM, mono, 16 kHz is accepted; everything else is rejected.
inline constexpr int kSampleRate = 16000;

namespace detail {

inline std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void PutU32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

inline void PutU16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

}  // namespace detail

inline SampleBuffer Decode(const std::vector<unsigned char>& bytes, const std::string& name = "wav") {
  using detail::ReadU16;
  using detail::ReadU32;
  Require(bytes.size() >= 12 && std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
              std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          name + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    Require(body + size <= bytes.size(), name + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      Require(size >= 16, name + ": malformed fmt chunk");
      const std::uint16_t format = ReadU16(bytes.data() + body);
      const std::uint16_t channels = ReadU16(bytes.data() + body + 2);
      const std::uint32_t rate = ReadU32(bytes.data() + body + 4);
      const std::uint16_t bits = ReadU16(bytes.data() + body + 14);
      Require(format == 1, name + ": only PCM WAV is supported (format tag " +
                               std::to_string(format) + ")");
      Require(channels == 1, name + ": only mono WAV is supported (got " +
                                 std::to_string(channels) + " channels)");
      Require(bits == 16, name + ": only 16-bit WAV is supported (got " + std::to_string(bits) +
                              " bits)");
      Require(rate == kSampleRate, name + ": only 16000 Hz WAV is supported (got " +
                                       std::to_string(rate) + " Hz)");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      Require(have_fmt, name + ": data chunk before fmt chunk");
      SampleBuffer out;
      out.sample_rate = kSampleRate;
      out.samples.resize(size / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(ReadU16(bytes.data() + body + 2 * i));
        out.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      return out;
    }
    pos = body + size + (size & 1u);
  }
  throw ConfigError(name + ": no data chunk");
}

inline SampleBuffer Read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return Decode(bytes, path);
}

inline std::int16_t Quantize(double v) {
  const double scaled = std::round(v * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

inline std::vector<unsigned char> Encode(const SampleBuffer& x) {
  Require(x.sample_rate == kSampleRate, "only 16000 Hz output is supported");
  const auto data_bytes = static_cast<std::uint32_t>(x.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::PutU32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::PutU32(out, 16);
  detail::PutU16(out, 1);
  detail::PutU16(out, 1);
  detail::PutU32(out, kSampleRate);
  detail::PutU32(out, kSampleRate * 2);
  detail::PutU16(out, 2);
  detail::PutU16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::PutU32(out, data_bytes);
  for (double v : x.samples) detail::PutU16(out, static_cast<std::uint16_t>(Quantize(v)));
  return out;
}

inline void Write(const std::string& path, const SampleBuffer& x) {
  const auto bytes = Encode(x);
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Gain that keeps the peak inside the 16-bit range; 1 when no clipping would occur.
inline double ClipSafeGain(const SampleBuffer& x) {
  double peak = 0.0;
  for (double v : x.samples) peak = std::max(peak, std::abs(v));
  const double limit = 32767.0 / 32768.0;
  return peak > limit ? limit / peak : 1.0;
}

}  // namespace kpfcp::wav

#endif  // KPFCP_WAV_HPP
