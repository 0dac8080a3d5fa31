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

#include <functional>
#include <string>
#include <vector>

#include "mtan/nn/param_store.hpp"
#include "mtan/nn/tape.hpp"

namespace mtan::nn {

/// Builds a scalar loss on a fresh tape from the parameters in the store.
/// Called repeatedly, so it must be a pure function of the parameter values.
using Fragment = std::function<VarId(Tape& tape, ParamStore& params)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative errors use max(|analytic|, |numeric|, floor) as denominator so
  // that gradients that are zero up to rounding are compared absolutely.
  double floor = 1e-6;
};

struct GradCheckFailure {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::vector<GradCheckFailure> failures;
  GradCheckFailure worst;
};

/// Compares tape gradients with central differences for every trainable
/// scalar in `params`. Never throws on mismatch; inspect the report.
GradCheckReport grad_check(const Fragment& fragment, ParamStore& params,
                           const GradCheckOptions& options = {});

}  // namespace mtan::nn
