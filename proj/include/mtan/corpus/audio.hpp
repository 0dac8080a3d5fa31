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

#include <filesystem>
#include <span>
#include <vector>

namespace mtan::corpus {

/// Mono audio. Samples are nominally in [-1, 1].
class AudioClip {
 public:
  AudioClip() = default;
  /// Throws mtan::Error unless samples are non-empty and finite and the
  /// sample rate is positive.
  AudioClip(std::vector<double> samples, int sample_rate);

  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  int sample_rate() const { return sample_rate_; }
  double duration_s() const {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

 private:
  std::vector<double> samples_;
  int sample_rate_ = 0;
};

/// Mean of squared samples.
double mean_power(std::span<const double> samples);

enum class WavEncoding {
  kPcm16,    // 16-bit signed little-endian integer PCM
  kFloat32,  // 32-bit IEEE float (format tag 3)
};

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding);

/// Reads mono RIFF/WAVE in PCM16, float32 or float64 encoding.
AudioClip read_wav(const std::filesystem::path& path);

}  // namespace mtan::corpus
