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

#include "mtan/nn/tape.hpp"

#include <utility>

#include "mtan/common/error.hpp"

namespace mtan::nn {

VarId Tape::constant(Tensor value) {
  value.check_finite("constant");
  nodes_.push_back(Node{std::move(value), {}, false, false, nullptr, nullptr});
  return nodes_.size() - 1;
}

VarId Tape::param(Parameter& param) {
  param.value.check_finite("parameter");
  nodes_.push_back(Node{param.value, {}, false, true, nullptr, &param});
  return nodes_.size() - 1;
}

VarId Tape::record(Tensor value, bool requires_grad, BackwardFn backward, const char* op) {
  value.check_finite(op);
  Node node{std::move(value), {}, false, requires_grad, nullptr, nullptr};
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

void Tape::accumulate(VarId id, Matrix grad) {
  Node& node = nodes_.at(id);
  if (!node.requires_grad) return;
  if (grad.rows() != node.value.mat().rows() || grad.cols() != node.value.mat().cols()) {
    throw Error("gradient shape mismatch on tape node");
  }
  if (node.has_grad) {
    node.grad += grad;
  } else {
    node.grad = std::move(grad);
    node.has_grad = true;
  }
}

void Tape::backward(VarId root) {
  if (root >= nodes_.size()) throw Error("backward: unknown root");
  if (nodes_[root].value.size() != 1) {
    throw Error("backward: root is not a scalar (shape " +
                shape_string(nodes_[root].value.shape()) + ")");
  }
  for (auto& node : nodes_) {
    node.has_grad = false;
    node.grad.resize(0, 0);
  }
  accumulate(root, Matrix::Ones(1, 1));
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad) continue;
    if (!all_finite(node.grad)) throw NumericError("non-finite gradient in backward pass");
    if (node.sink) {
      node.sink->grad.mat() += node.grad;
    } else if (node.backward) {
      node.backward(*this, node.grad);
    }
  }
}

}  // namespace mtan::nn
