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

#include "mtan/nn/adam.hpp"

#include <cmath>

#include "mtan/common/error.hpp"

namespace mtan::nn {

void adam_step(ParamStore& params, AdamState& state) {
  for (const auto& [name, p] : params.entries()) {
    if (p.trainable && !all_finite(p.grad.mat())) {
      throw NumericError("non-finite gradient for '" + name + "'");
    }
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double correction1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params.entries()) {
    if (!p.trainable) continue;
    auto m_it = state.first_moment.try_emplace(name, p.value.shape()).first;
    auto v_it = state.second_moment.try_emplace(name, p.value.shape()).first;
    if (m_it->second.shape() != p.value.shape() || v_it->second.shape() != p.value.shape()) {
      throw Error("Adam moment shape mismatch for '" + name + "'");
    }
    double* m = m_it->second.data();
    double* v = v_it->second.data();
    double* w = p.value.data();
    const double* g = p.grad.data();
    const double step = o.lr / correction1;
    const double inv_c2 = 1.0 / correction2;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      w[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + o.eps);
    }
  }
}

}  // namespace mtan::nn
