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

#pragma once

#include <span>
#include <vector>

#include "mtan/corpus/audio.hpp"

namespace mtan::features {

inline constexpr int kSampleRate = 16000;
inline constexpr double kFrameLengthS = 0.025;
inline constexpr double kFrameShiftS = 0.010;
inline constexpr int kFftSize = 512;
inline constexpr int kNumFilters = 23;
inline constexpr int kNumCeps = 23;
inline constexpr double kLowFreqHz = 20.0;
inline constexpr double kHighFreqHz = 7600.0;
inline constexpr double kLogFloor = 1e-10;

/// Row-major t x m matrix of frame-level features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(int num_frames, int dim, std::vector<double> values);
  FeatureMatrix(int num_frames, int dim);

  int num_frames() const { return num_frames_; }
  int dim() const { return dim_; }
  std::span<const double> row(int i) const {
    return {values_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<double> row(int i) {
    return {values_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }
  const std::vector<double>& values() const { return values_; }
  double at(int frame, int coeff) const {
    return values_[static_cast<std::size_t>(frame) * dim_ + coeff];
  }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  int num_frames_ = 0;
  int dim_ = 0;
  std::vector<double> values_;
};

struct FrameGeometry {
  int window = 0;  // samples per frame
  int hop = 0;     // samples between frame starts
};

FrameGeometry frame_geometry(int sample_rate);

/// floor((len - window) / hop) + 1; throws when the signal is shorter than
/// one window.
int num_frames(std::size_t num_samples, int sample_rate);

/// Frames of 25 ms every 10 ms with per-frame DC removed and a Hamming window
/// applied. One vector per frame.
std::vector<std::vector<double>> frame_signal(const corpus::AudioClip& clip);

/// Triangular filters equally spaced on the mel scale between 20 and 7600 Hz.
class MelFilterbank {
 public:
  MelFilterbank(int num_filters, int fft_size, int sample_rate, double low_hz,
                double high_hz);

  int num_filters() const { return static_cast<int>(centers_hz_.size()); }
  double center_hz(int filter) const { return centers_hz_[filter]; }
  double lower_edge_hz(int filter) const { return edges_hz_[filter]; }
  double upper_edge_hz(int filter) const { return edges_hz_[filter + 2]; }

  /// Filter energies from a one-sided power spectrum of fft_size/2+1 bins.
  std::vector<double> apply(std::span<const double> power_spectrum) const;

 private:
  std::vector<double> edges_hz_;
  std::vector<double> centers_hz_;
  std::vector<std::vector<double>> weights_;  // [filter][bin]
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Natural-log mel energies per frame, floored at kLogFloor, before the DCT.
FeatureMatrix log_mel_energies(const corpus::AudioClip& clip);

/// 23 MFCCs per frame (orthonormal DCT-II of the log mel energies) followed
/// by per-utterance mean subtraction. Only 16 kHz input is accepted.
FeatureMatrix mfcc(const corpus::AudioClip& clip);

}  // namespace mtan::features
