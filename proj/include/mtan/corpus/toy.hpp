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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mtan/corpus/audio.hpp"
#include "mtan/corpus/builder.hpp"
#include "mtan/corpus/manifest.hpp"

namespace mtan::corpus {

/// Fixed voice of a synthetic speaker: a harmonic source shaped by three
/// resonances and a spectral tilt.
struct SpeakerTemplate {
  double f0_hz = 0.0;
  std::array<double, 3> formant_hz{};
  std::array<double, 3> bandwidth_hz{};
  std::array<double, 3> formant_gain{};
  double tilt = 1.0;
};

SpeakerTemplate make_speaker_template(std::uint64_t seed, const std::string& speaker_id);

/// Steady, unjittered rendering of a template (zero phases), for comparing
/// speakers.
std::vector<double> render_template(const SpeakerTemplate& voice, std::size_t num_samples,
                                    int sample_rate);

struct ToyCorpusConfig {
  int n_speakers = 10;
  int utts_per_speaker = 40;
  int n_noise_types = 3;
  double duration_s = 1.0;
  int sample_rate = 16000;
  std::uint64_t seed = 7;
};

struct ToyUtterance {
  UtteranceRecord record;  // audio_path is "clean/<utt_id>.wav"
  AudioClip audio;
};

struct ToyCorpus {
  std::vector<ToyUtterance> utterances;
  NoiseBank noise_bank;

  Manifest manifest() const;
};

/// Synthetic speakers with per-utterance jitter plus spectrally distinct
/// noise processes (white, low-pass, band-pass, modulated, ...).
/// Deterministic in the config.
ToyCorpus generate_toy_corpus(const ToyCorpusConfig& config);

/// Synthesizes one utterance of `voice`; `seed` drives the jitter.
AudioClip synthesize_utterance(const SpeakerTemplate& voice, std::uint64_t seed,
                               double duration_s, int sample_rate);

/// Writes `<dir>/clean/*.wav` and returns the manifest rooted at `dir`.
Manifest write_clean_audio(const std::filesystem::path& dir, const ToyCorpus& corpus,
                           WavEncoding encoding);

/// Balanced trials: per speaker, `trials_per_speaker` target pairs of distinct
/// utterances and as many nontarget pairs against random other speakers.
TrialList make_trials(const Manifest& manifest, int trials_per_speaker, std::uint64_t seed);

struct ManifestSplit {
  Manifest train;
  Manifest dev;
  Manifest test;
};

/// Splits each speaker's utterances into train/dev/test by the given
/// fractions (test takes the remainder).
ManifestSplit split_by_utterance(const Manifest& manifest, double train_fraction,
                                 double dev_fraction, std::uint64_t seed);

}  // namespace mtan::corpus
