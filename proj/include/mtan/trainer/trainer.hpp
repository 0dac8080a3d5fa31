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
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mtan/common/error.hpp"
#include "mtan/common/random.hpp"
#include "mtan/corpus/manifest.hpp"
#include "mtan/features/archive.hpp"
#include "mtan/model/mtan.hpp"
#include "mtan/nn/adam.hpp"
#include "mtan/trainer/config.hpp"
#include "mtan/trainer/stability.hpp"

namespace mtan::trainer {

struct Example {
  const features::FeatureMatrix* features = nullptr;
  int speaker = 0;
  int noise = 0;
};

/// Training examples in manifest order with speaker indices from the
/// manifest's sorted speaker list. Every utterance needs features.
std::vector<Example> make_examples(const corpus::Manifest& manifest,
                                   const features::FeatureStore& store);

/// Draws batch_size examples uniformly with replacement. Each is cut to
/// crop_frames by a random contiguous window, or cyclically repeated from its
/// first frame when shorter.
model::Batch sample_batch(const std::vector<Example>& examples, const TrainConfig& config,
                          Rng& rng);

struct UpdateCounters {
  std::int64_t encoder = 0;
  std::int64_t classifier = 0;
  std::int64_t discriminator = 0;
};

struct LogRecord {
  std::int64_t step = 0;
  std::int64_t cycle = 0;
  std::string phase;  // "cd" or "enc"
  double l_sC = 0.0;
  double l_sD = 0.0;
  double l_var = 0.0;
  double adversarial = 0.0;
  double disc_accuracy = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

std::string format_log_record(const LogRecord& record);
inline constexpr const char* kTrainLogHeader =
    "#mtan-trainlog v1\tstep\tcycle\tphase\tl_sC\tl_sD\tl_var\tadv\tacc\tbeta\tgamma";

struct TrainerState {
  model::MtanParams params;
  model::Variant variant = model::Variant::kNone;
  nn::AdamState encoder_opt;
  nn::AdamState classifier_opt;
  nn::AdamState discriminator_opt;
  StabilityState stability;
  Rng rng;
  std::int64_t cycle = 0;
  std::int64_t step = 0;
  UpdateCounters counters;
  std::optional<double> best_dev_metric;
  std::int64_t best_cycle = -1;
};

/// Fresh state. With Variant::kNone beta is forced to 0 and the stability
/// controller stays idle.
TrainerState make_trainer_state(const model::ModelConfig& model_config, const TrainConfig& config,
                                model::Variant variant);

model::LossWeights current_weights(const TrainerState& state);

/// Raised when a loss or gradient turns non-finite; the diagnostic record has
/// already been written to the log.
class TrainingAborted : public NumericError {
 public:
  using NumericError::NumericError;
};

/// One cycle: cd_steps_per_cycle classifier+discriminator updates, then
/// encoder_steps_per_cycle encoder updates, each on a fresh batch. The mean
/// C/D-phase discriminator accuracy feeds the stability controller.
/// Records are appended to `log` when it is non-null.
void train_cycle(TrainerState& state, const std::vector<Example>& examples,
                 const TrainConfig& config, std::vector<LogRecord>* log);

void save_trainer_state(const std::filesystem::path& path, const TrainerState& state,
                        std::uint64_t log_bytes);
/// Returns the state and the TrainLog length at the time it was saved.
std::pair<TrainerState, std::uint64_t> load_trainer_state(const std::filesystem::path& path);

/// Lower is better (for example dev EER).
using DevMetric = std::function<double(model::MtanParams& params)>;

struct TrainOptions {
  std::filesystem::path out_dir;
  DevMetric dev_metric;                    // optional
  std::filesystem::path resume_from;       // optional trainer checkpoint
  std::string card_extra;                  // appended to every model card
};

struct TrainResult {
  TrainerState state;
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;  // empty without a dev metric
};

/// Runs cycles until config.cycles. Writes into out_dir:
///   trainlog.tsv, stability.tsv, final.ckpt (+ .card), best.ckpt (+ .card)
///   when a dev metric is given, ckpt/cycle-NNNNNN.ckpt every
///   checkpoint_interval cycles, and state.ckpt (resumable) alongside them.
TrainResult train(const std::vector<Example>& examples, const model::ModelConfig& model_config,
                  const TrainConfig& config, model::Variant variant, const TrainOptions& options);

}  // namespace mtan::trainer
