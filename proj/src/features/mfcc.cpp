// Copyright 2026 The MTAN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtan/features/mfcc.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "mtan/common/error.hpp"

namespace mtan::features {

FeatureMatrix::FeatureMatrix(int num_frames, int dim, std::vector<double> values)
    : num_frames_(num_frames), dim_(dim), values_(std::move(values)) {
  if (num_frames < 0 || dim <= 0 ||
      values_.size() != static_cast<std::size_t>(num_frames) * dim) {
    throw Error("feature matrix shape does not match its data");
  }
}

FeatureMatrix::FeatureMatrix(int num_frames, int dim)
    : FeatureMatrix(num_frames, dim,
                    std::vector<double>(static_cast<std::size_t>(num_frames) * dim, 0.0)) {}

FrameGeometry frame_geometry(int sample_rate) {
  return {static_cast<int>(std::lround(kFrameLengthS * sample_rate)),
          static_cast<int>(std::lround(kFrameShiftS * sample_rate))};
}

int num_frames(std::size_t num_samples, int sample_rate) {
  const FrameGeometry g = frame_geometry(sample_rate);
  if (num_samples < static_cast<std::size_t>(g.window)) {
    throw Error("clip is shorter than one analysis window");
  }
  return static_cast<int>((num_samples - g.window) / g.hop) + 1;
}

std::vector<std::vector<double>> frame_signal(const corpus::AudioClip& clip) {
  const FrameGeometry g = frame_geometry(clip.sample_rate());
  const int t = num_frames(clip.size(), clip.sample_rate());
  std::vector<double> window(g.window);
  for (int n = 0; n < g.window; ++n) {
    window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (g.window - 1));
  }
  const auto samples = clip.samples();
  std::vector<std::vector<double>> frames(t, std::vector<double>(g.window));
  for (int i = 0; i < t; ++i) {
    const double* src = samples.data() + static_cast<std::size_t>(i) * g.hop;
    double mean = 0.0;
    for (int n = 0; n < g.window; ++n) mean += src[n];
    mean /= g.window;
    for (int n = 0; n < g.window; ++n) frames[i][n] = (src[n] - mean) * window[n];
  }
  return frames;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int num_filters, int fft_size, int sample_rate, double low_hz,
                             double high_hz) {
  if (num_filters < 1 || fft_size < 2 || !(low_hz < high_hz) ||
      high_hz > 0.5 * sample_rate) {
    throw Error("invalid mel filterbank configuration");
  }
  const double mel_lo = hz_to_mel(low_hz), mel_hi = hz_to_mel(high_hz);
  const double step = (mel_hi - mel_lo) / (num_filters + 1);
  std::vector<double> edge_mels(num_filters + 2);
  for (int j = 0; j < num_filters + 2; ++j) {
    edge_mels[j] = mel_lo + j * step;
    edges_hz_.push_back(mel_to_hz(edge_mels[j]));
  }
  const int bins = fft_size / 2 + 1;
  weights_.assign(num_filters, std::vector<double>(bins, 0.0));
  for (int j = 0; j < num_filters; ++j) {
    centers_hz_.push_back(edges_hz_[j + 1]);
    const double left = edge_mels[j], center = edge_mels[j + 1], right = edge_mels[j + 2];
    for (int k = 0; k < bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * sample_rate / fft_size);
      if (mel > left && mel <= center) {
        weights_[j][k] = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        weights_[j][k] = (right - mel) / (right - center);
      }
    }
  }
}

std::vector<double> MelFilterbank::apply(std::span<const double> power_spectrum) const {
  std::vector<double> out(weights_.size(), 0.0);
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    const auto& w = weights_[j];
    if (power_spectrum.size() != w.size()) throw Error("power spectrum has wrong size");
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * power_spectrum[k];
    out[j] = acc;
  }
  return out;
}

namespace {

// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, angle * static_cast<double>(k));
        const auto u = x[start + k];
        const auto v = x[start + k + len / 2] * w;
        x[start + k] = u + v;
        x[start + k + len / 2] = u - v;
      }
    }
  }
}

void require_supported_rate(const corpus::AudioClip& clip) {
  if (clip.sample_rate() != kSampleRate) {
    throw Error("unsupported sample rate " + std::to_string(clip.sample_rate()) +
                " (only 16000 Hz is supported)");
  }
}

}  // namespace

FeatureMatrix log_mel_energies(const corpus::AudioClip& clip) {
  require_supported_rate(clip);
  static const MelFilterbank bank(kNumFilters, kFftSize, kSampleRate, kLowFreqHz, kHighFreqHz);
  const auto frames = frame_signal(clip);
  const int t = static_cast<int>(frames.size());
  FeatureMatrix out(t, kNumFilters);
  std::vector<std::complex<double>> buf(kFftSize);
  std::vector<double> power(kFftSize / 2 + 1);
  for (int i = 0; i < t; ++i) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t n = 0; n < frames[i].size(); ++n) buf[n] = frames[i][n];
    fft(buf);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
    const auto energies = bank.apply(power);
    auto row = out.row(i);
    for (int j = 0; j < kNumFilters; ++j) row[j] = std::log(std::max(energies[j], kLogFloor));
  }
  return out;
}

FeatureMatrix mfcc(const corpus::AudioClip& clip) {
  const FeatureMatrix logmel = log_mel_energies(clip);
  const int t = logmel.num_frames();

  // Orthonormal DCT-II basis.
  static const std::vector<double> basis = [] {
    std::vector<double> b(kNumCeps * kNumFilters);
    for (int k = 0; k < kNumCeps; ++k) {
      const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / kNumFilters);
      for (int n = 0; n < kNumFilters; ++n) {
        b[k * kNumFilters + n] =
            scale * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * kNumFilters));
      }
    }
    return b;
  }();

  FeatureMatrix out(t, kNumCeps);
  std::vector<double> mean(kNumCeps, 0.0);
  for (int i = 0; i < t; ++i) {
    const auto in = logmel.row(i);
    auto row = out.row(i);
    for (int k = 0; k < kNumCeps; ++k) {
      double acc = 0.0;
      for (int n = 0; n < kNumFilters; ++n) acc += basis[k * kNumFilters + n] * in[n];
      row[k] = acc;
      mean[k] += acc;
    }
  }
  for (double& m : mean) m /= t;
  for (int i = 0; i < t; ++i) {
    auto row = out.row(i);
    for (int k = 0; k < kNumCeps; ++k) row[k] -= mean[k];
  }
  return out;
}

}  // namespace mtan::features
