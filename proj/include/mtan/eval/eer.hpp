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

#include "mtan/eval/scoring.hpp"

namespace mtan::eval {

struct EerResult {
  double eer = 0.0;        // fraction in [0, 1]
  double threshold = 0.0;  // accept when score >= threshold
};

/// Sweeps thresholds over the sorted distinct scores (and +inf) with
/// FAR(t) = P(nontarget >= t), FRR(t) = P(target < t), and linearly
/// interpolates between the two thresholds where FAR - FRR changes sign.
EerResult compute_eer(std::span<const double> targets, std::span<const double> nontargets);
EerResult compute_eer(const ScoreSet& scores);

}  // namespace mtan::eval
