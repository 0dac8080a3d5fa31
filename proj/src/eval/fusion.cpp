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

#include "mtan/eval/fusion.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "mtan/common/error.hpp"

namespace mtan::eval {

namespace {

void check_coverage(const std::vector<ScoreSet>& systems) {
  if (systems.empty()) throw Error("fusion needs at least one system");
  for (const auto& s : systems) {
    s.validate();
    if (s.trials != systems.front().trials) {
      throw Error("fusion systems do not cover identical trial sequences");
    }
  }
}

}  // namespace

FusionWeights fit_fusion(const std::vector<ScoreSet>& systems) {
  if (systems.size() < 2) throw Error("fusion needs at least two systems");
  check_coverage(systems);
  const auto n = static_cast<Eigen::Index>(systems.front().trials.size());
  const auto p = static_cast<Eigen::Index>(systems.size());
  Eigen::MatrixXd x(n, p + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = systems[j].scores[i];
    x(i, p) = 1.0;
    y(i) = systems.front().trials[i].is_target ? 1.0 : 0.0;
  }

  const Eigen::MatrixXd gram = x.transpose() * x;
  const Eigen::VectorXd rhs = x.transpose() * y;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  FusionWeights out;
  Eigen::VectorXd w;
  if (cod.rank() == p + 1) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    w = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !w.allFinite()) w = cod.solve(y);
  } else {
    out.rank_deficient = true;
    w = cod.solve(y);  // minimum-norm least squares
  }
  if (!w.allFinite()) throw NumericError("fusion weights are not finite");
  out.weights.assign(w.data(), w.data() + p);
  out.bias = w(p);
  return out;
}

ScoreSet apply_fusion(const FusionWeights& weights, const std::vector<ScoreSet>& systems) {
  check_coverage(systems);
  if (weights.weights.size() != systems.size()) {
    throw Error("fusion weight count does not match system count");
  }
  ScoreSet out;
  out.trials = systems.front().trials;
  out.scores.assign(out.trials.size(), weights.bias);
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    double s = weights.bias;
    for (std::size_t j = 0; j < systems.size(); ++j) s += weights.weights[j] * systems[j].scores[i];
    out.scores[i] = s;
  }
  return out;
}

void write_fusion_weights(const std::filesystem::path& path, const FusionWeights& fw) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "#mtan-fusion v1\n";
  for (std::size_t j = 0; j < fw.weights.size(); ++j) {
    os << "w" << j << '\t' << corpus::format_double(fw.weights[j]) << '\n';
  }
  os << "bias\t" << corpus::format_double(fw.bias) << '\n';
  os << "rank_deficient\t" << (fw.rank_deficient ? 1 : 0) << '\n';
}

FusionWeights read_fusion_weights(const std::filesystem::path& path) {
  std::ifstream is(path);
  std::string line;
  if (!is || !std::getline(is, line) || line != "#mtan-fusion v1") {
    throw FormatError(path.string() + ": not a fusion weight file");
  }
  FusionWeights fw;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path.string() + ": malformed line");
    const std::string key = line.substr(0, tab), value = line.substr(tab + 1);
    if (key == "bias") fw.bias = corpus::parse_double(value);
    else if (key == "rank_deficient") fw.rank_deficient = value == "1";
    else if (key == "w" + std::to_string(fw.weights.size())) fw.weights.push_back(corpus::parse_double(value));
    else throw FormatError(path.string() + ": unexpected key '" + key + "'");
  }
  return fw;
}

}  // namespace mtan::eval
