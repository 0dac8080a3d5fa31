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

#include "mtan/eval/scoring.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mtan/common/error.hpp"

namespace mtan::eval {

double cosine_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("cosine_score: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error("cosine_score: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> ScoreSet::target_scores() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].is_target) out.push_back(scores[i]);
  }
  return out;
}

std::vector<double> ScoreSet::nontarget_scores() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!trials[i].is_target) out.push_back(scores[i]);
  }
  return out;
}

void ScoreSet::validate() const {
  if (trials.size() != scores.size()) throw Error("score count does not match trial count");
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericError("non-finite score");
  }
}

ScoreSet score_trials(const EmbeddingSet& embeddings, const corpus::TrialList& trials) {
  ScoreSet out;
  out.trials = trials.trials;
  out.scores.reserve(trials.trials.size());
  for (const auto& t : trials.trials) {
    out.scores.push_back(cosine_score(embeddings.at(t.enroll), embeddings.at(t.test)));
  }
  return out;
}

void write_scores(const std::filesystem::path& path, const ScoreSet& set) {
  set.validate();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "#mtan-scores v1\n";
  for (std::size_t i = 0; i < set.trials.size(); ++i) {
    const auto& t = set.trials[i];
    os << t.enroll << '\t' << t.test << '\t' << corpus::format_double(set.scores[i]) << '\t'
       << (t.is_target ? "target" : "nontarget") << '\n';
  }
  if (!os) throw Error("write failed for " + path.string());
}

ScoreSet read_scores(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "#mtan-scores v1") {
    throw FormatError(path.string() + ": missing #mtan-scores v1 header");
  }
  ScoreSet out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string enroll, test, score, label, extra;
    if (!std::getline(ls, enroll, '\t') || !std::getline(ls, test, '\t') ||
        !std::getline(ls, score, '\t') || !std::getline(ls, label, '\t') ||
        std::getline(ls, extra, '\t') || (label != "target" && label != "nontarget")) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed score line");
    }
    out.trials.push_back(corpus::Trial{enroll, test, label == "target"});
    out.scores.push_back(corpus::parse_double(score));
  }
  out.validate();
  return out;
}

}  // namespace mtan::eval
