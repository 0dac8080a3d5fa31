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
#include <map>
#include <string>
#include <vector>

#include "mtan/common/random.hpp"
#include "mtan/nn/tensor.hpp"

namespace mtan::nn {

struct Parameter {
  Tensor value;
  Tensor grad;  // same shape as value
  bool trainable = true;  // false for batch-norm running statistics
};

/// Named parameters in a fixed (lexicographic) order. Shapes are fixed once
/// added.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Tensor value, bool trainable = true);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  /// Replaces a value; the shape must match.
  void assign(const std::string& name, const Tensor& value);

  std::map<std::string, Parameter>& entries() { return params_; }
  const std::map<std::string, Parameter>& entries() const { return params_; }

  void zero_grad();
  /// Number of trainable scalars.
  std::size_t trainable_size() const;
  /// True when every trainable gradient is exactly zero.
  bool grads_all_zero() const;

 private:
  std::map<std::string, Parameter> params_;
};

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Rng& rng, std::int64_t fan_in, std::int64_t fan_out);

}  // namespace mtan::nn
