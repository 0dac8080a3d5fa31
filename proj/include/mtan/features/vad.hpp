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

#include <vector>

#include "mtan/corpus/audio.hpp"
#include "mtan/features/mfcc.hpp"

namespace mtan::features {

inline constexpr double kVadRelativeDb = -30.0;
inline constexpr double kVadAbsoluteDbfs = -60.0;

struct VadMask {
  std::vector<bool> keep;
  std::size_t num_kept() const;
};

/// Frame log-energies in dBFS over the raw (unwindowed) frame samples.
std::vector<double> frame_energies_db(const corpus::AudioClip& clip);

/// Keeps a frame when its energy is within 30 dB of the loudest frame and
/// above -60 dBFS.
VadMask energy_vad(const corpus::AudioClip& clip);

/// Drops rows whose mask entry is false. Throws "no voiced frames" when
/// nothing is left.
FeatureMatrix apply_vad(const FeatureMatrix& feats, const VadMask& mask);

/// mfcc() followed by energy VAD frame selection.
FeatureMatrix extract_features(const corpus::AudioClip& clip);

}  // namespace mtan::features
