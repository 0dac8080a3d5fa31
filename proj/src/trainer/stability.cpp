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

#include "mtan/trainer/stability.hpp"

#include <cmath>
#include <limits>

#include "mtan/common/error.hpp"

namespace mtan::trainer {

namespace {

// Neumaier summation. A window of identical values must average to exactly
// that value, otherwise a stream sitting on a threshold would cross it.
double compensated_sum(const std::deque<double>& values) {
  double sum = 0.0, carry = 0.0;
  for (const double v : values) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

// Scales stay strictly positive and finite however many adjustments fire.
double rescale(double value, double factor) {
  const double r = value * factor;
  if (r == 0.0 && value > 0.0) return std::numeric_limits<double>::denorm_min();
  if (std::isinf(r)) return std::numeric_limits<double>::max();
  return r;
}

}  // namespace

StabilityState make_stability_state(const TrainConfig& config) {
  StabilityState s;
  s.beta = config.beta;
  s.gamma = config.gamma;
  return s;
}

std::optional<Adjustment> stability_update(StabilityState& state, double disc_accuracy,
                                           const TrainConfig& config, std::int64_t cycle) {
  if (!(disc_accuracy >= 0.0 && disc_accuracy <= 1.0)) {
    throw Error("discriminator accuracy outside [0, 1]");
  }
  state.window.push_back(disc_accuracy);
  while (state.window.size() > static_cast<std::size_t>(config.window_K)) state.window.pop_front();
  if (state.window.size() < static_cast<std::size_t>(config.window_K)) return std::nullopt;

  const double mean = compensated_sum(state.window) / static_cast<double>(state.window.size());
  Adjustment adj{cycle, mean, {}, 0.0, 0.0};
  if (mean < config.alpha) {
    if (config.low_accuracy_action == LowAccuracyAction::kLowerBeta) {
      adj.target = "beta";
      adj.old_value = state.beta;
      state.beta = rescale(state.beta, config.adjust_factor);
      adj.new_value = state.beta;
    } else {
      adj.target = "gamma";
      adj.old_value = state.gamma;
      state.gamma = rescale(state.gamma, 1.0 / config.adjust_factor);
      adj.new_value = state.gamma;
    }
  } else if (mean > config.theta) {
    adj.target = "gamma";
    adj.old_value = state.gamma;
    state.gamma = rescale(state.gamma, config.adjust_factor);
    adj.new_value = state.gamma;
  } else {
    return std::nullopt;
  }
  state.window.clear();
  state.adjustments.push_back(adj);
  return adj;
}

}  // namespace mtan::trainer
