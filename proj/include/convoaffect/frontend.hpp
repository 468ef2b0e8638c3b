// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Waveform -> log-mel -> fixed-size segment patches.
//
// The chain is: resample to 16 kHz, STFT with a 25 ms Hamming window and a
// 10 ms hop, 64 triangular mel filters on the power spectrum over
// 125-7500 Hz, log with a small offset, then segmentation into
// non-overlapping 96-frame patches (the last patch is zero-padded).

#pragma once

#include <vector>

#include <Eigen/Core>

#include "convoaffect/container.hpp"
#include "convoaffect/wav.hpp"

namespace convoaffect {

struct FrontendConfig {
  int target_rate = 16000;  // Hz
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 64;
  double f_min = 125.0;   // Hz
  double f_max = 7500.0;  // Hz
  int segment_frames = 96;
  double log_offset = 0.01;

  int win_samples() const {
    return static_cast<int>(std::lround(window_ms * target_rate / 1000.0));
  }
  int hop_samples() const {
    return static_cast<int>(std::lround(hop_ms * target_rate / 1000.0));
  }
  // Next power of two >= window length.
  int fft_size() const;
  int n_fft_bins() const { return fft_size() / 2 + 1; }

  // Throws ConfigError when the invariants do not hold: f_min < f_max <=
  // Nyquist, window > hop, and segment_frames = round(0.96 s / hop).
  void validate() const;
};

struct LogMelFrames {
  Eigen::MatrixXd frames;  // T x n_mels
  double hop_seconds = 0.0;

  Index n_frames() const { return frames.rows(); }
};

// One 96 x 64 (segment_frames x n_mels) log-mel matrix.
using SegmentPatch = Eigen::MatrixXd;

// Linear-interpolation resampling to cfg.target_rate. The identity path
// (input already at target rate) returns the samples unchanged.
Waveform resample(const Waveform& w, const FrontendConfig& cfg);

// Mel scale m(f) = 2595 * log10(1 + f / 700) and its inverse.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// n_mels x n_fft_bins triangular filters with centers equally spaced in mel
// between hz_to_mel(f_min) and hz_to_mel(f_max). Rows are nonnegative and
// zero outside the [f_min, f_max] band.
Eigen::MatrixXd build_mel_filterbank(const FrontendConfig& cfg,
                                     int n_fft_bins);

// T = 1 + floor((len - win) / hop) frames; each row is
// log(filterbank * |STFT frame|^2 + log_offset). Input shorter than one
// window is zero-padded to a single frame.
LogMelFrames compute_log_mel(const Waveform& w, const FrontendConfig& cfg);

// Splits frames into ceil(T / segment_frames) patches in order. The last
// patch's trailing rows are zero when T is not a multiple; T = 0 still
// yields one all-zero patch.
std::vector<SegmentPatch> segment_patches(const LogMelFrames& lm,
                                          const FrontendConfig& cfg);

// Full pipeline for one utterance file.
std::vector<SegmentPatch> patches_from_waveform(const Waveform& w,
                                                const FrontendConfig& cfg);

// Container round-trip for a patch sequence.
PatchFile patches_to_file(const std::vector<SegmentPatch>& patches);
std::vector<SegmentPatch> patches_from_file(const PatchFile& file);

}  // namespace convoaffect
