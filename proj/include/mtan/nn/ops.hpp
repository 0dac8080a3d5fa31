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

#include "mtan/nn/tape.hpp"

namespace mtan::nn {

enum class Mode { kTrain, kInfer };

/// Per-frame affine map over batch x time x C_in: out[b,i,:] = in[b,i,:] W + bias.
/// A 1x1 convolution with stride 1 is exactly this shared dense layer.
VarId conv1d_1x1(Tape& tape, VarId input, VarId weights, VarId bias);

/// batch x C_in -> batch x C_out affine layer.
VarId dense(Tape& tape, VarId input, VarId weights, VarId bias);

struct BatchNormOptions {
  double momentum = 0.1;  // running = (1 - momentum) * running + momentum * batch
  double eps = 1e-5;
};

/// Batch normalization over the channel (last) axis.
///
/// Train mode normalizes with the biased statistics of all rows of the
/// 2-D view, i.e. over (batch, time) for conv activations and over batch for
/// dense ones, and updates the running statistics. Infer mode uses the
/// running statistics and leaves them untouched. Train mode needs at least
/// two rows.
VarId batchnorm(Tape& tape, VarId input, VarId scale, VarId shift, Tensor& running_mean,
                Tensor& running_var, Mode mode, const BatchNormOptions& options = {});

VarId relu(Tape& tape, VarId input);

/// batch x time x C -> batch x C, mean over time.
VarId avg_pool_time(Tape& tape, VarId input);

VarId add(Tape& tape, VarId a, VarId b);
VarId scale(Tape& tape, VarId input, double factor);

/// Copies the value with no gradient path back to `input`.
VarId stop_gradient(Tape& tape, VarId input);

/// Scalar sum(input * weights); used to reduce an activation for gradient
/// checks.
VarId weighted_sum(Tape& tape, VarId input, const Tensor& weights);

}  // namespace mtan::nn
