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

namespace mtan::corpus {

/// Gain g such that g*noise sits snr_db below clean, using full-clip mean
/// power of both inputs. Throws "degenerate signal" on zero power.
double noise_gain_for_snr(std::span<const double> clean,
                          std::span<const double> noise, double snr_db);

/// Adds noise[0..len(clean)) scaled to the requested SNR. Noise shorter than
/// the clean clip is tiled from its start. Sample rates must match.
AudioClip mix_at_snr(const AudioClip& clean, const AudioClip& noise, double snr_db);

/// 10*log10(P_signal / P_noise).
double measure_snr_db(std::span<const double> signal, std::span<const double> noise);

/// `length` samples of `noise` starting at `offset`, wrapping cyclically.
std::vector<double> cyclic_segment(std::span<const double> noise, std::size_t length,
                                   std::size_t offset);

/// Scales samples so the peak magnitude is `ceiling` when any sample would
/// exceed 1. Returns the gain applied (1 when untouched).
double peak_limit(std::vector<double>& samples, double ceiling = 0.99);

}  // namespace mtan::corpus
