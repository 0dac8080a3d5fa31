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
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mtan/trainer/config.hpp"

namespace mtan::trainer {

struct Adjustment {
  std::int64_t cycle = 0;
  double mean_accuracy = 0.0;
  std::string target;  // "beta" or "gamma"
  double old_value = 0.0;
  double new_value = 0.0;
};

struct StabilityState {
  std::deque<double> window;  // latest discriminator accuracies, at most K
  double beta = 1.0;
  double gamma = 1.0;
  std::vector<Adjustment> adjustments;
};

StabilityState make_stability_state(const TrainConfig& config);

/// Pushes one accuracy. When the window holds K values and its mean is
/// strictly below alpha (or strictly above theta) the corresponding scale is
/// adjusted, the window cleared, and the adjustment returned and recorded.
std::optional<Adjustment> stability_update(StabilityState& state, double disc_accuracy,
                                           const TrainConfig& config, std::int64_t cycle);

}  // namespace mtan::trainer
