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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mtan::eval {

/// One row of an EER table. Summary rows use condition "mean" with the noise
/// name (or "noisy" for all noisy conditions) and no SNR.
struct EerRow {
  std::string condition;
  std::string noise;
  std::optional<double> snr_db;
  double eer = 0.0;  // fraction; printed as a percentage
  double threshold = 0.0;
  std::size_t trials = 0;
};

/// Appends per-noise means over SNR and the mean over every noisy condition.
std::vector<EerRow> with_summary_rows(std::vector<EerRow> rows);

/// Mean EER over rows with an SNR (the noisy conditions).
double mean_noisy_eer(const std::vector<EerRow>& rows);

/// Header `#mtan-eer v1` followed by tab-separated
/// condition, noise, snr_db ("-" if none), eer_pct, threshold, trials.
void write_eer_report(const std::filesystem::path& path, const std::vector<EerRow>& rows);
std::vector<EerRow> read_eer_report(const std::filesystem::path& path);

}  // namespace mtan::eval
