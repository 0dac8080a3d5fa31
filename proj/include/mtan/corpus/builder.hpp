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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtan/corpus/audio.hpp"
#include "mtan/corpus/manifest.hpp"

namespace mtan::corpus {

struct NoiseType {
  std::string name;
  AudioClip clip;
};

/// Noise label (1..M-1) to noise recording. Label 0 is clean speech.
using NoiseBank = std::map<int, NoiseType>;

/// Number of discriminator classes implied by a bank: noise types plus clean.
/// Throws unless labels are exactly 1..size.
int noise_class_count(const NoiseBank& bank);

/// On disk: `noise_bank.tsv` with header `#mtan-noise v1` and
/// `label<TAB>name<TAB>path` rows, next to the referenced WAV files.
void write_noise_bank(const std::filesystem::path& dir, const NoiseBank& bank,
                      WavEncoding encoding);
NoiseBank read_noise_bank(const std::filesystem::path& tsv_path);

/// Part of each noise recording that segments are drawn from. Training and
/// test corpora default to disjoint halves.
enum class NoiseRegion { kFull, kFirstHalf, kSecondHalf };

struct TrainCorpusOptions {
  double clean_fraction = 1.0 / 6.0;
  std::vector<double> snr_choices = {10.0, 20.0};
  std::uint64_t seed = 0;
  NoiseRegion region = NoiseRegion::kFirstHalf;
  WavEncoding encoding = WavEncoding::kFloat32;
};

/// Keeps round(n * clean_fraction) utterances clean and corrupts the rest,
/// each with a uniformly drawn noise type and SNR. Audio is written under
/// `out_dir`; the returned manifest's paths are relative to it.
Manifest build_train_corpus(const Manifest& clean, const NoiseBank& bank,
                            const TrainCorpusOptions& options,
                            const std::filesystem::path& out_dir);

struct TestCorpusOptions {
  std::vector<double> snr_levels = {0.0, 5.0, 10.0, 15.0, 20.0};
  std::uint64_t seed = 0;
  NoiseRegion region = NoiseRegion::kSecondHalf;
  WavEncoding encoding = WavEncoding::kFloat32;
};

struct TestCondition {
  std::string name;  // "clean" or "<noise>_<snr>dB"
  int noise_label = kCleanLabel;
  std::string noise_name = "clean";
  std::optional<double> snr_db;
  Manifest manifest;
};

/// The clean set plus one fully corrupted copy per (noise type, SNR) pair,
/// each in its own subdirectory of `out_dir`.
std::vector<TestCondition> build_test_corpus(const Manifest& clean, const NoiseBank& bank,
                                             const TestCorpusOptions& options,
                                             const std::filesystem::path& out_dir);

}  // namespace mtan::corpus
