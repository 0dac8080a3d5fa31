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
#include <vector>

#include "mtan/eval/scoring.hpp"

namespace mtan::eval {

struct FusionWeights {
  std::vector<double> weights;  // one per system
  double bias = 0.0;
  bool rank_deficient = false;  // solved by pseudo-inverse
};

/// Least squares of trial labels (target 1, nontarget 0) on the system
/// scores plus an intercept. Uses the normal equations when they are well
/// posed and the minimum-norm pseudo-inverse solution otherwise. All sets
/// must cover the same trials in the same order.
FusionWeights fit_fusion(const std::vector<ScoreSet>& systems);

/// w . scores + bias per trial.
ScoreSet apply_fusion(const FusionWeights& weights, const std::vector<ScoreSet>& systems);

void write_fusion_weights(const std::filesystem::path& path, const FusionWeights& weights);
FusionWeights read_fusion_weights(const std::filesystem::path& path);

}  // namespace mtan::eval
