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

#include <cstddef>
#include <functional>
#include <vector>

#include "mtan/nn/param_store.hpp"
#include "mtan/nn/tensor.hpp"

namespace mtan::nn {

using VarId = std::size_t;

/// Wengert list for one forward pass.
///
/// Every op appends a node holding its output value and, when any input
/// needs a gradient, a closure that pushes the output gradient to its
/// inputs. backward() walks the list in reverse; parameter leaves add their
/// gradient into the owning Parameter::grad.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape& tape, const Matrix& grad_out)>;

  /// Leaf without gradient.
  VarId constant(Tensor value);
  /// Leaf bound to a parameter; gradients accumulate into `param.grad`.
  VarId param(Parameter& param);
  /// Leaf holding a copy of the parameter value but no gradient.
  VarId frozen(const Parameter& param) { return constant(param.value); }

  /// Appends an op output. `backward` is dropped unless `requires_grad`.
  /// The value must be finite.
  VarId record(Tensor value, bool requires_grad, BackwardFn backward, const char* op);

  const Tensor& value(VarId id) const { return nodes_.at(id).value; }
  bool requires_grad(VarId id) const { return nodes_.at(id).requires_grad; }

  /// Adds `grad` into the gradient buffer of `id` (no-op for constants).
  void accumulate(VarId id, Matrix grad);

  /// Reverse pass from a single-element root.
  void backward(VarId root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* sink = nullptr;
  };
  std::vector<Node> nodes_;
};

}  // namespace mtan::nn
