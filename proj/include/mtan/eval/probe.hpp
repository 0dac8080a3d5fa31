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
#include <string>
#include <vector>

#include "mtan/nn/tensor.hpp"

namespace mtan::eval {

struct ProbeOptions {
  int steps = 500;  // full-batch Adam updates
  double lr = 0.01;
  double test_fraction = 0.3;
  std::uint64_t seed = 1;
};

struct ProbeResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double chance = 0.0;  // 1 / number of classes
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// Trains a fresh affine softmax classifier on frozen, standardized
/// embeddings (rows of `x`) and reports held-out accuracy. Rows sharing a
/// group id (for example one source utterance under several noise
/// conditions) land on the same side of the split.
ProbeResult noise_probe(const nn::Matrix& x, const std::vector<int>& labels,
                        const std::vector<std::string>& groups, int num_classes,
                        const ProbeOptions& options = {});

}  // namespace mtan::eval
