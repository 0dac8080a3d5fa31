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
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mtan::corpus {

/// Noise label reserved for uncorrupted speech.
inline constexpr int kCleanLabel = 0;

struct UtteranceRecord {
  std::string utt_id;
  std::string speaker_id;
  int noise_label = kCleanLabel;
  std::optional<double> snr_db;  // empty iff noise_label == kCleanLabel
  std::string audio_path;
  std::string comment;  // free text, e.g. "gain=0.93" after peak limiting
};

/// A set of utterances with speaker and noise-class labels.
///
/// On disk: UTF-8 text, header line `#mtan-manifest v1`, a
/// `#noise_classes<TAB>M` line, then one tab-separated record per line:
/// utt_id, speaker_id, noise_label, snr_db or "-", path[, comment].
/// Relative audio paths are resolved against the manifest's directory.
struct Manifest {
  std::vector<UtteranceRecord> records;
  int num_noise_classes = 1;
  std::filesystem::path base_dir;

  /// Distinct speaker ids in lexicographic order; the position of an id is
  /// its class index.
  std::vector<std::string> speakers() const;
  std::size_t num_speakers() const { return speakers().size(); }
  std::map<std::string, int> speaker_index() const;

  std::filesystem::path audio_path(const UtteranceRecord& record) const;
  const UtteranceRecord* find(const std::string& utt_id) const;

  /// Throws FormatError on duplicate ids, out-of-range labels, or a
  /// clean/SNR mismatch.
  void validate() const;
};

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

struct Trial {
  std::string enroll;
  std::string test;
  bool is_target = false;
  bool operator==(const Trial&) const = default;
};

/// On disk: header `#mtan-trials v1`, then `enroll<TAB>test<TAB>target|nontarget`.
struct TrialList {
  std::vector<Trial> trials;

  std::size_t num_targets() const;
  /// Throws unless every id resolves in `manifest` and both classes occur.
  void validate(const Manifest& manifest) const;
};

void write_trials(const std::filesystem::path& path, const TrialList& trials);
TrialList read_trials(const std::filesystem::path& path);

/// Shortest text that parses back to exactly the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace mtan::corpus
