// Copyright 2026 the convoaffect authors. Apache 2.0 license.

#include "convoaffect/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "convoaffect/container.hpp"

namespace convoaffect {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

double decode_sample(const std::uint8_t* p, const FmtChunk& fmt) {
  if (fmt.format == kFormatFloat) {
    float v;
    std::memcpy(&v, p, 4);
    return static_cast<double>(v);
  }
  std::int16_t v = static_cast<std::int16_t>(
      static_cast<std::uint16_t>(p[0]) | static_cast<std::uint16_t>(p[1]) << 8);
  return static_cast<double>(v) / 32768.0;
}

void write_wav(const std::string& path, const Waveform& w,
               std::uint16_t format) {
  if (w.samples.empty()) {
    throw EmptyAudio("refusing to write empty waveform: " + path);
  }
  if (w.sample_rate <= 0) {
    throw ConfigError("waveform sample rate must be positive");
  }
  const std::uint16_t bits = format == kFormatFloat ? 32 : 16;
  const std::uint32_t bytes_per_sample = bits / 8;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(w.samples.size()) * bytes_per_sample;
  const std::uint32_t byte_rate =
      static_cast<std::uint32_t>(w.sample_rate) * bytes_per_sample;

  detail::ByteWriter out;
  out.raw("RIFF", 4);
  out.u32(36 + data_size);
  out.raw("WAVE", 4);
  out.raw("fmt ", 4);
  out.u32(16);
  out.u16(format);
  out.u16(1);  // mono
  out.u32(static_cast<std::uint32_t>(w.sample_rate));
  out.u32(byte_rate);
  out.u16(static_cast<std::uint16_t>(bytes_per_sample));
  out.u16(bits);
  out.raw("data", 4);
  out.u32(data_size);
  for (double s : w.samples) {
    if (format == kFormatFloat) {
      out.f32(static_cast<float>(s));
    } else {
      const double clamped = std::clamp(s, -1.0, 32767.0 / 32768.0);
      out.u16(static_cast<std::uint16_t>(
          static_cast<std::int16_t>(std::lrint(clamped * 32768.0))));
    }
  }
  detail::write_file_bytes(path, out.bytes);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r{bytes.data(), bytes.size()};

  char tag[4];
  r.raw(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) {
    throw FormatError("not a RIFF file: " + path);
  }
  r.u32();  // declared size, ignored; the chunk walk bounds itself
  r.raw(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) {
    throw FormatError("not a WAVE file: " + path);
  }

  FmtChunk fmt;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  while (r.pos + 8 <= r.size) {
    r.raw(tag, 4);
    const std::uint32_t chunk_size = r.u32();
    r.require(chunk_size);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16) {
        throw FormatError("fmt chunk too small in " + path);
      }
      detail::ByteReader f{bytes.data() + r.pos, chunk_size};
      fmt.format = f.u16();
      fmt.channels = f.u16();
      fmt.sample_rate = f.u32();
      f.u32();  // byte rate
      f.u16();  // block align
      fmt.bits_per_sample = f.u16();
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = bytes.data() + r.pos;
      data_size = chunk_size;
    }
    r.pos += chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) {
    throw FormatError("missing fmt/data chunk in " + path);
  }
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    throw FormatError("degenerate fmt chunk in " + path);
  }
  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits_per_sample == 16;
  const bool f32 = fmt.format == kFormatFloat && fmt.bits_per_sample == 32;
  if (!pcm16 && !f32) {
    throw FormatError("unsupported WAV encoding (format=" +
                      std::to_string(fmt.format) + ", bits=" +
                      std::to_string(fmt.bits_per_sample) +
                      "), want PCM16 or float32: " + path);
  }

  const std::size_t bytes_per_sample = fmt.bits_per_sample / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) {
    throw EmptyAudio("no audio frames in " + path);
  }

  Waveform w;
  w.sample_rate = static_cast<int>(fmt.sample_rate);
  w.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < fmt.channels; ++c) {
      acc += decode_sample(data + i * frame_bytes + c * bytes_per_sample, fmt);
    }
    const double v = acc / fmt.channels;
    if (!std::isfinite(v)) {
      throw DataError("non-finite sample at frame " + std::to_string(i) +
                      " in " + path);
    }
    w.samples[i] = v;
  }
  return w;
}

void write_wav_pcm16(const std::string& path, const Waveform& w) {
  write_wav(path, w, kFormatPcm);
}

void write_wav_float32(const std::string& path, const Waveform& w) {
  write_wav(path, w, kFormatFloat);
}

}  // namespace convoaffect
