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

#include "mtan/nn/tape.hpp"

namespace mtan::nn {

/// Row-wise log-softmax with max subtraction.
Matrix log_softmax(const Matrix& logits);

/// Mean over the batch of -log softmax(logits)[label].
VarId softmax_cross_entropy(Tape& tape, VarId logits, std::span<const int> labels);

/// Cross entropy against the constant clean label for every sample. Runs the
/// softmax_cross_entropy code path unchanged.
VarId fl_loss(Tape& tape, VarId logits, int clean_index);

/// Anti-label loss: mean over the batch of the summed -log softmax
/// probabilities of every class except the sample's true one. Its minimum
/// over the simplex puts zero mass on the true class and 1/(M-1) on each
/// other class. Needs at least two classes.
VarId al_loss(Tape& tape, VarId logits, std::span<const int> labels);

/// Fraction of rows whose argmax equals the label (first maximum wins).
double accuracy(const Matrix& logits, std::span<const int> labels);

}  // namespace mtan::nn
