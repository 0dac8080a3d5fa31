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

#include "mtan/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace mtan::nn {

namespace {

double evaluate(const Fragment& fragment, ParamStore& params) {
  Tape tape;
  return tape.value(fragment(tape, params)).item();
}

}  // namespace

GradCheckReport grad_check(const Fragment& fragment, ParamStore& params,
                           const GradCheckOptions& options) {
  params.zero_grad();
  {
    Tape tape;
    tape.backward(fragment(tape, params));
  }

  GradCheckReport report;
  for (auto& [name, p] : params.entries()) {
    if (!p.trainable) continue;
    const Matrix analytic = p.grad.mat();
    double* values = p.value.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double plus = evaluate(fragment, params);
      values[i] = saved - options.step;
      const double minus = evaluate(fragment, params);
      values[i] = saved;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.checked;
      GradCheckFailure entry{name, i, a, numeric, rel};
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = entry;
      }
      if (!(rel < options.tolerance)) {
        report.passed = false;
        report.failures.push_back(std::move(entry));
      }
    }
  }
  return report;
}

}  // namespace mtan::nn
