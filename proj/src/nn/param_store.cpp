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

#include "mtan/nn/param_store.hpp"

#include <cmath>

#include "mtan/common/error.hpp"

namespace mtan::nn {

Parameter& ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  if (params_.count(name)) throw Error("duplicate parameter name '" + name + "'");
  Tensor grad(value.shape());
  auto [it, ok] = params_.emplace(name, Parameter{std::move(value), std::move(grad), trainable});
  return it->second;
}

Parameter& ParamStore::at(const std::string& name) {
  const auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::assign(const std::string& name, const Tensor& value) {
  Parameter& p = at(name);
  if (p.value.shape() != value.shape()) {
    throw Error("shape mismatch assigning '" + name + "': " + shape_string(p.value.shape()) +
                " vs " + shape_string(value.shape()));
  }
  p.value = value;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.mat().setZero();
}

std::size_t ParamStore::trainable_size() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.trainable ? p.value.size() : 0;
  return n;
}

bool ParamStore::grads_all_zero() const {
  for (const auto& [name, p] : params_) {
    if (p.trainable && !p.grad.mat().isZero(0.0)) return false;
  }
  return true;
}

Tensor glorot_uniform(Rng& rng, std::int64_t fan_in, std::int64_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w(Shape{fan_in, fan_out});
  double* d = w.data();
  for (std::size_t i = 0; i < w.size(); ++i) d[i] = rng.uniform(-limit, limit);
  return w;
}

}  // namespace mtan::nn
