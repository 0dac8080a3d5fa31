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
#include <string>

namespace mtan::trainer {

/// What the stability controller does when discriminator accuracy is too low.
enum class LowAccuracyAction { kLowerBeta, kRaiseGamma };

struct TrainConfig {
  int batch_size = 64;
  int crop_frames = 200;
  int cycles = 2000;
  double lr = 0.01;
  int encoder_steps_per_cycle = 3;
  int cd_steps_per_cycle = 1;
  double alpha = 0.4;
  double theta = 0.9;  // 1 disables the upper threshold
  int window_K = 100;
  double adjust_factor = 0.5;
  std::uint64_t seed = 1;
  double beta = 1.0;
  double gamma = 1.0;
  LowAccuracyAction low_accuracy_action = LowAccuracyAction::kLowerBeta;
  int checkpoint_interval = 0;  // cycles; 0 writes only final and best
  int dev_interval = 0;         // cycles between dev evaluations; 0 disables

  void validate() const;
};

/// Sets one field from its text form. Throws on unknown keys or bad values.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` file; blank lines and `#` comments ignored.
TrainConfig read_train_config(const std::filesystem::path& path, TrainConfig base = {});
void write_train_config(const std::filesystem::path& path, const TrainConfig& config);

}  // namespace mtan::trainer
