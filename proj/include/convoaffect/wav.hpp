// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Minimal RIFF/WAVE codec: PCM 16-bit and IEEE float32, mono or multi-channel
// (multi-channel input is downmixed by averaging). No compressed formats.

#pragma once

#include <string>
#include <vector>

#include "convoaffect/common.hpp"

namespace convoaffect {

struct Waveform {
  std::vector<double> samples;  // mono, nominally in [-1, 1)
  int sample_rate = 0;          // Hz, > 0

  double duration_seconds() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

Waveform read_wav(const std::string& path);

// Writers used by the tests and the synthetic-corpus tool.
void write_wav_pcm16(const std::string& path, const Waveform& w);
void write_wav_float32(const std::string& path, const Waveform& w);

}  // namespace convoaffect
