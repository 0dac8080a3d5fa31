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
#include <vector>

#include "mtan/nn/checkpoint.hpp"
#include "mtan/nn/ops.hpp"
#include "mtan/nn/param_store.hpp"
#include "mtan/nn/tape.hpp"

namespace mtan::model {

using nn::Matrix;
using nn::Mode;
using nn::ParamStore;
using nn::Tape;
using nn::Tensor;
using nn::VarId;

struct ModelConfig {
  int num_speakers = 0;
  int num_noise_classes = 0;  // M, clean included
  int conv_channels = 256;
  int conv_layers = 4;
  std::vector<int> fc_dims{256, 1024};
  int feature_dim = 23;

  int embedding_dim() const { return fc_dims.empty() ? conv_channels : fc_dims.back(); }
  void validate() const;
};

/// Closed-form count of trainable scalars; running statistics excluded.
std::size_t expected_parameter_count(const ModelConfig& config);

/// kNone trains no adversarial term (baseline and mix systems).
enum class Variant { kNone, kFL, kAL };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct LossWeights {
  double beta = 1.0;
  double gamma = 1.0;
  Variant variant = Variant::kAL;

  void validate() const;
};

struct MtanParams {
  ModelConfig config;
  ParamStore encoder;
  ParamStore classifier;
  ParamStore discriminator;
};

/// Glorot-uniform weights, zero biases, unit BN scale, zero BN shift,
/// running mean 0 and variance 1.
MtanParams init_params(const ModelConfig& config, std::uint64_t seed);

/// How a parameter group enters a tape.
enum class Binding { kTrainable, kFrozen };

/// x: batch x t x feature_dim. Returns batch x embedding_dim.
VarId encode(Tape& tape, VarId x, MtanParams& params, Mode mode, Binding binding);
VarId classify(Tape& tape, VarId embeddings, MtanParams& params, Binding binding);
VarId discriminate(Tape& tape, VarId embeddings, MtanParams& params, Binding binding);

/// Inference-mode embeddings for one batch of equal-length inputs.
Matrix embed(MtanParams& params, const Tensor& x);

struct Batch {
  Tensor x;                   // batch x t x feature_dim
  std::vector<int> speakers;  // indices into the sorted speaker list
  std::vector<int> noise;     // noise labels, 0 = clean
};

struct ObjectiveResult {
  double value = 0.0;  // the minimized objective
  double l_sC = 0.0;
  double l_sD = 0.0;
  double l_var = 0.0;
  double disc_accuracy = 0.0;
  double spk_accuracy = 0.0;
};

/// min_E l_sC + beta * l_var. Gradients land in the encoder group only.
/// With beta = 0 l_var is still evaluated for the log but adds no gradient;
/// with kNone it is reported as 0.
ObjectiveResult encoder_objective(MtanParams& params, const Batch& batch,
                                  const LossWeights& weights);

/// min_D gamma * CE(D(stop_gradient(E(x))), noise). Gradients land in the
/// discriminator group only.
ObjectiveResult discriminator_objective(MtanParams& params, const Batch& batch,
                                        const LossWeights& weights);

/// min_C CE(C(E(x)), speakers). Gradients land in the classifier group only.
ObjectiveResult classifier_objective(MtanParams& params, const Batch& batch);

/// Classifier and discriminator objectives sharing one encoder pass, as one
/// C/D training phase. Gradients land in the classifier and discriminator.
ObjectiveResult cd_objectives(MtanParams& params, const Batch& batch,
                              const LossWeights& weights);

/// gamma * l_sD - beta * l_var, a log-only summary of the minimax game.
double adversarial_value(double l_sD, double l_var, const LossWeights& weights);

void save_params(nn::Checkpoint& ckpt, const MtanParams& params);
/// Rebuilds parameters from a checkpoint written by save_params.
MtanParams load_params(const nn::Checkpoint& ckpt);

/// Text card stored next to each checkpoint.
void write_model_card(const std::filesystem::path& path, const MtanParams& params,
                      const LossWeights& weights, std::uint64_t seed,
                      const std::string& extra = {});

}  // namespace mtan::model
