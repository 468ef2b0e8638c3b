// Copyright 2026 the convoaffect authors. Apache 2.0 license.

#include "convoaffect/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace convoaffect {

int FrontendConfig::fft_size() const {
  int n = 1;
  while (n < win_samples()) n <<= 1;
  return n;
}

void FrontendConfig::validate() const {
  if (target_rate <= 0) {
    throw ConfigError("target_rate must be positive");
  }
  if (!(f_min < f_max)) {
    throw ConfigError("f_min must be below f_max");
  }
  if (f_max > target_rate / 2.0) {
    throw ConfigError("f_max " + std::to_string(f_max) +
                      " exceeds Nyquist " + std::to_string(target_rate / 2.0));
  }
  if (!(window_ms > hop_ms) || hop_ms <= 0.0) {
    throw ConfigError("need window_ms > hop_ms > 0");
  }
  if (n_mels <= 0) {
    throw ConfigError("n_mels must be positive");
  }
  const int expect = static_cast<int>(std::lround(960.0 / hop_ms));
  if (segment_frames != expect) {
    throw ConfigError("segment_frames must equal round(0.96 s / hop) = " +
                      std::to_string(expect) + ", got " +
                      std::to_string(segment_frames));
  }
  if (log_offset <= 0.0) {
    throw ConfigError("log_offset must be positive");
  }
}

Waveform resample(const Waveform& w, const FrontendConfig& cfg) {
  if (w.samples.empty()) {
    throw EmptyAudio("cannot resample empty audio");
  }
  if (w.sample_rate <= 0) {
    throw ConfigError("input sample rate must be positive");
  }
  if (w.sample_rate == cfg.target_rate) {
    return w;
  }
  const auto src_len = static_cast<std::int64_t>(w.samples.size());
  const auto out_len = std::max<std::int64_t>(
      1, std::llround(static_cast<double>(src_len) * cfg.target_rate /
                      w.sample_rate));
  Waveform out;
  out.sample_rate = cfg.target_rate;
  out.samples.resize(static_cast<std::size_t>(out_len));
  const double step =
      static_cast<double>(w.sample_rate) / cfg.target_rate;
  for (std::int64_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * step;
    const auto i0 = std::min<std::int64_t>(
        static_cast<std::int64_t>(pos), src_len - 1);
    const auto i1 = std::min<std::int64_t>(i0 + 1, src_len - 1);
    const double frac = pos - static_cast<double>(i0);
    out.samples[static_cast<std::size_t>(i)] =
        w.samples[static_cast<std::size_t>(i0)] * (1.0 - frac) +
        w.samples[static_cast<std::size_t>(i1)] * frac;
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Eigen::MatrixXd build_mel_filterbank(const FrontendConfig& cfg,
                                     int n_fft_bins) {
  cfg.validate();
  if (n_fft_bins != cfg.n_fft_bins()) {
    throw ConfigError("n_fft_bins " + std::to_string(n_fft_bins) +
                      " inconsistent with fft size " +
                      std::to_string(cfg.fft_size()));
  }
  const int n_mels = cfg.n_mels;
  const double mel_lo = hz_to_mel(cfg.f_min);
  const double mel_hi = hz_to_mel(cfg.f_max);

  // n_mels + 2 breakpoints; filter i is the triangle over
  // (edge[i], edge[i+2]) peaking at edge[i+1], evaluated in mel space.
  Eigen::VectorXd edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1);
  }

  const double hz_per_bin =
      static_cast<double>(cfg.target_rate) / cfg.fft_size();
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, n_fft_bins);
  for (int k = 0; k < n_fft_bins; ++k) {
    const double mel_k = hz_to_mel(k * hz_per_bin);
    for (int i = 0; i < n_mels; ++i) {
      const double up = (mel_k - edges[i]) / (edges[i + 1] - edges[i]);
      const double down =
          (edges[i + 2] - mel_k) / (edges[i + 2] - edges[i + 1]);
      fb(i, k) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

LogMelFrames compute_log_mel(const Waveform& w, const FrontendConfig& cfg) {
  cfg.validate();
  if (w.sample_rate != cfg.target_rate) {
    throw ConfigError("compute_log_mel expects audio at " +
                      std::to_string(cfg.target_rate) + " Hz, got " +
                      std::to_string(w.sample_rate));
  }
  const int win = cfg.win_samples();
  const int hop = cfg.hop_samples();
  const int n_fft = cfg.fft_size();
  const int n_bins = cfg.n_fft_bins();

  std::vector<double> samples = w.samples;
  if (static_cast<int>(samples.size()) < win) {
    samples.resize(static_cast<std::size_t>(win), 0.0);
  }
  const auto len = static_cast<std::int64_t>(samples.size());
  const auto n_frames = 1 + (len - win) / hop;

  Eigen::VectorXd window(win);
  for (int n = 0; n < win; ++n) {
    window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (win - 1));
  }

  const Eigen::MatrixXd fb = build_mel_filterbank(cfg, n_bins);

  Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(n_fft), 0.0);
  std::vector<std::complex<double>> spectrum;
  Eigen::VectorXd power(n_bins);

  LogMelFrames out;
  out.hop_seconds = hop / static_cast<double>(cfg.target_rate);
  out.frames.resize(n_frames, cfg.n_mels);
  for (std::int64_t t = 0; t < n_frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * hop;
    for (int n = 0; n < win; ++n) {
      buf[static_cast<std::size_t>(n)] = samples[start + n] * window[n];
    }
    std::fill(buf.begin() + win, buf.end(), 0.0);
    fft.fwd(spectrum, buf);
    for (int k = 0; k < n_bins; ++k) {
      power[k] = std::norm(spectrum[static_cast<std::size_t>(k)]);
    }
    out.frames.row(t) =
        ((fb * power).array() + cfg.log_offset).log().transpose();
  }
  return out;
}

std::vector<SegmentPatch> segment_patches(const LogMelFrames& lm,
                                          const FrontendConfig& cfg) {
  cfg.validate();
  if (lm.frames.size() > 0 && lm.frames.cols() != cfg.n_mels) {
    throw DimError("log-mel frames have " + std::to_string(lm.frames.cols()) +
                   " bands, config says " + std::to_string(cfg.n_mels));
  }
  const Index seg = cfg.segment_frames;
  const Index total = lm.n_frames();
  const Index count = total == 0 ? 1 : (total + seg - 1) / seg;

  std::vector<SegmentPatch> patches;
  patches.reserve(static_cast<std::size_t>(count));
  for (Index p = 0; p < count; ++p) {
    SegmentPatch patch = SegmentPatch::Zero(seg, cfg.n_mels);
    const Index start = p * seg;
    const Index rows = std::min(seg, total - start);
    if (rows > 0) {
      patch.topRows(rows) = lm.frames.middleRows(start, rows);
    }
    patches.push_back(std::move(patch));
  }
  return patches;
}

std::vector<SegmentPatch> patches_from_waveform(const Waveform& w,
                                                const FrontendConfig& cfg) {
  return segment_patches(compute_log_mel(resample(w, cfg), cfg), cfg);
}

PatchFile patches_to_file(const std::vector<SegmentPatch>& patches) {
  PatchFile file;
  if (patches.empty()) {
    throw EmptyUtterance("no patches to serialize");
  }
  file.count = static_cast<std::uint32_t>(patches.size());
  file.rows = static_cast<std::uint32_t>(patches.front().rows());
  file.cols = static_cast<std::uint32_t>(patches.front().cols());
  file.data.reserve(static_cast<std::size_t>(file.count) * file.rows *
                    file.cols);
  for (const auto& patch : patches) {
    if (patch.rows() != file.rows || patch.cols() != file.cols) {
      throw DimError("inconsistent patch shapes in sequence");
    }
    for (Index r = 0; r < patch.rows(); ++r) {
      for (Index c = 0; c < patch.cols(); ++c) {
        file.data.push_back(static_cast<float>(patch(r, c)));
      }
    }
  }
  return file;
}

std::vector<SegmentPatch> patches_from_file(const PatchFile& file) {
  std::vector<SegmentPatch> patches;
  patches.reserve(file.count);
  std::size_t pos = 0;
  for (std::uint32_t i = 0; i < file.count; ++i) {
    SegmentPatch patch(file.rows, file.cols);
    for (std::uint32_t r = 0; r < file.rows; ++r) {
      for (std::uint32_t c = 0; c < file.cols; ++c) {
        patch(r, c) = static_cast<double>(file.data[pos++]);
      }
    }
    patches.push_back(std::move(patch));
  }
  return patches;
}

}  // namespace convoaffect
