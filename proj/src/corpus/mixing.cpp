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

#include "mtan/corpus/mixing.hpp"

#include <algorithm>
#include <cmath>

#include "mtan/common/error.hpp"

namespace mtan::corpus {

double noise_gain_for_snr(std::span<const double> clean,
                          std::span<const double> noise, double snr_db) {
  const double p_clean = mean_power(clean);
  const double p_noise = mean_power(noise);
  if (!(p_clean > 0.0) || !(p_noise > 0.0)) throw Error("degenerate signal");
  if (!std::isfinite(snr_db)) throw Error("SNR must be finite");
  return std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
}

AudioClip mix_at_snr(const AudioClip& clean, const AudioClip& noise, double snr_db) {
  if (clean.sample_rate() != noise.sample_rate()) {
    throw Error("sample rate mismatch between clean and noise");
  }
  const auto segment = cyclic_segment(noise.samples(), clean.size(), 0);
  const double g = noise_gain_for_snr(clean.samples(), segment, snr_db);
  std::vector<double> mixed(clean.size());
  const auto c = clean.samples();
  for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] = c[i] + g * segment[i];
  return AudioClip(std::move(mixed), clean.sample_rate());
}

double measure_snr_db(std::span<const double> signal, std::span<const double> noise) {
  const double p_signal = mean_power(signal);
  const double p_noise = mean_power(noise);
  if (!(p_signal > 0.0) || !(p_noise > 0.0)) throw Error("degenerate signal");
  return 10.0 * std::log10(p_signal / p_noise);
}

std::vector<double> cyclic_segment(std::span<const double> noise, std::size_t length,
                                   std::size_t offset) {
  if (noise.empty()) throw Error("degenerate signal");
  std::vector<double> out(length);
  std::size_t j = offset % noise.size();
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = noise[j];
    if (++j == noise.size()) j = 0;
  }
  return out;
}

double peak_limit(std::vector<double>& samples, double ceiling) {
  double peak = 0.0;
  for (double s : samples) peak = std::max(peak, std::abs(s));
  if (peak <= 1.0) return 1.0;
  const double gain = ceiling / peak;
  for (double& s : samples) s *= gain;
  return gain;
}

}  // namespace mtan::corpus
