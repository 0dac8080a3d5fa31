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

#include "mtan/features/vad.hpp"

#include <algorithm>
#include <cmath>

#include "mtan/common/error.hpp"

namespace mtan::features {

std::size_t VadMask::num_kept() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
}

std::vector<double> frame_energies_db(const corpus::AudioClip& clip) {
  const FrameGeometry g = frame_geometry(clip.sample_rate());
  const int t = num_frames(clip.size(), clip.sample_rate());
  const auto samples = clip.samples();
  std::vector<double> energies(t);
  for (int i = 0; i < t; ++i) {
    const double p =
        corpus::mean_power(samples.subspan(static_cast<std::size_t>(i) * g.hop, g.window));
    // 1e-20 keeps digital silence finite (-200 dBFS).
    energies[i] = 10.0 * std::log10(std::max(p, 1e-20));
  }
  return energies;
}

VadMask energy_vad(const corpus::AudioClip& clip) {
  const auto energies = frame_energies_db(clip);
  const double loudest = *std::max_element(energies.begin(), energies.end());
  VadMask mask;
  mask.keep.reserve(energies.size());
  for (double e : energies) {
    mask.keep.push_back(e > loudest + kVadRelativeDb && e > kVadAbsoluteDbfs);
  }
  return mask;
}

FeatureMatrix apply_vad(const FeatureMatrix& feats, const VadMask& mask) {
  if (mask.keep.size() != static_cast<std::size_t>(feats.num_frames())) {
    throw Error("VAD mask length does not match the feature frame count");
  }
  std::vector<double> values;
  int kept = 0;
  for (int i = 0; i < feats.num_frames(); ++i) {
    if (!mask.keep[i]) continue;
    const auto row = feats.row(i);
    values.insert(values.end(), row.begin(), row.end());
    ++kept;
  }
  if (kept == 0) throw Error("no voiced frames");
  return FeatureMatrix(kept, feats.dim(), std::move(values));
}

FeatureMatrix extract_features(const corpus::AudioClip& clip) {
  return apply_vad(mfcc(clip), energy_vad(clip));
}

}  // namespace mtan::features
