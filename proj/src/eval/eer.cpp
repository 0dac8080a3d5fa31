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

#include "mtan/eval/eer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mtan/common/error.hpp"

namespace mtan::eval {

EerResult compute_eer(std::span<const double> targets, std::span<const double> nontargets) {
  if (targets.empty() || nontargets.empty()) {
    throw Error("EER needs at least one target and one nontarget score");
  }
  std::vector<double> tar(targets.begin(), targets.end());
  std::vector<double> non(nontargets.begin(), nontargets.end());
  for (double s : tar) {
    if (!std::isfinite(s)) throw NumericError("non-finite target score");
  }
  for (double s : non) {
    if (!std::isfinite(s)) throw NumericError("non-finite nontarget score");
  }
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  std::vector<double> thresholds(tar);
  thresholds.insert(thresholds.end(), non.begin(), non.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double nt = static_cast<double>(tar.size());
  const double nn = static_cast<double>(non.size());
  // Sorted merge: targets below t and nontargets below t advance monotonically.
  std::size_t tar_below = 0, non_below = 0;
  double prev_far = 1.0, prev_frr = 0.0, prev_t = thresholds.front();
  for (std::size_t k = 0; k <= thresholds.size(); ++k) {
    const bool last = k == thresholds.size();
    const double t = last ? INFINITY : thresholds[k];
    while (tar_below < tar.size() && tar[tar_below] < t) ++tar_below;
    while (non_below < non.size() && non[non_below] < t) ++non_below;
    const double far = static_cast<double>(non.size() - non_below) / nn;
    const double frr = static_cast<double>(tar_below) / nt;
    if (far - frr <= 0.0) {
      if (far == frr) return {far, last ? prev_t : t};
      const double d_prev = prev_far - prev_frr;
      const double lambda = d_prev / (d_prev - (far - frr));
      const double eer = prev_far + lambda * (far - prev_far);
      const double threshold = last ? prev_t : prev_t + lambda * (t - prev_t);
      return {eer, threshold};
    }
    prev_far = far;
    prev_frr = frr;
    prev_t = t;
  }
  throw Error("EER sweep did not cross");  // unreachable: FAR - FRR = -1 at +inf
}

EerResult compute_eer(const ScoreSet& scores) {
  scores.validate();
  return compute_eer(scores.target_scores(), scores.nontarget_scores());
}

}  // namespace mtan::eval
