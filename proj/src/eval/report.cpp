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

#include "mtan/eval/report.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "mtan/common/error.hpp"
#include "mtan/corpus/manifest.hpp"

namespace mtan::eval {

std::vector<EerRow> with_summary_rows(std::vector<EerRow> rows) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<double, std::size_t>> per_noise;
  std::size_t trials = 0;
  for (const auto& r : rows) {
    if (!r.snr_db) continue;
    if (!per_noise.count(r.noise)) order.push_back(r.noise);
    auto& [sum, count] = per_noise[r.noise];
    sum += r.eer;
    ++count;
    trials += r.trials;
  }
  if (order.empty()) return rows;
  const double noisy = mean_noisy_eer(rows);
  for (const auto& noise : order) {
    const auto& [sum, count] = per_noise[noise];
    rows.push_back(EerRow{"mean", noise, std::nullopt, sum / static_cast<double>(count), 0.0, 0});
  }
  rows.push_back(EerRow{"mean", "noisy", std::nullopt, noisy, 0.0, trials});
  return rows;
}

double mean_noisy_eer(const std::vector<EerRow>& rows) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.condition != "mean" && r.snr_db) {
      sum += r.eer;
      ++n;
    }
  }
  if (n == 0) throw Error("report has no noisy conditions");
  return sum / static_cast<double>(n);
}

void write_eer_report(const std::filesystem::path& path, const std::vector<EerRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "#mtan-eer v1\tcondition\tnoise\tsnr_db\teer_pct\tthreshold\ttrials\n";
  for (const auto& r : rows) {
    os << r.condition << '\t' << r.noise << '\t'
       << (r.snr_db ? corpus::format_double(*r.snr_db) : "-") << '\t'
       << corpus::format_double(100.0 * r.eer) << '\t' << corpus::format_double(r.threshold)
       << '\t' << r.trials << '\n';
  }
  if (!os) throw Error("write failed for " + path.string());
}

std::vector<EerRow> read_eer_report(const std::filesystem::path& path) {
  std::ifstream is(path);
  std::string line;
  if (!is || !std::getline(is, line) || line.rfind("#mtan-eer v1", 0) != 0) {
    throw FormatError(path.string() + ": not an EER report");
  }
  std::vector<EerRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cond, noise, snr, eer, thr, trials;
    if (!std::getline(ls, cond, '\t') || !std::getline(ls, noise, '\t') ||
        !std::getline(ls, snr, '\t') || !std::getline(ls, eer, '\t') ||
        !std::getline(ls, thr, '\t') || !std::getline(ls, trials, '\t')) {
      throw FormatError(path.string() + ": malformed row '" + line + "'");
    }
    EerRow r{cond, noise, std::nullopt, corpus::parse_double(eer) / 100.0,
             corpus::parse_double(thr), static_cast<std::size_t>(std::stoull(trials))};
    if (snr != "-") r.snr_db = corpus::parse_double(snr);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace mtan::eval
