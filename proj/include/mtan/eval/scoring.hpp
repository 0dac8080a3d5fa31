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
#include <span>
#include <vector>

#include "mtan/corpus/manifest.hpp"
#include "mtan/eval/embeddings.hpp"

namespace mtan::eval {

/// dot(a, b) / (|a| |b|). Throws on a zero vector or length mismatch.
double cosine_score(std::span<const double> a, std::span<const double> b);

struct ScoreSet {
  std::vector<corpus::Trial> trials;
  std::vector<double> scores;  // parallel to trials

  std::vector<double> target_scores() const;
  std::vector<double> nontarget_scores() const;
  void validate() const;
};

/// Cosine scores in trial order. A trial touching a missing embedding throws.
ScoreSet score_trials(const EmbeddingSet& embeddings, const corpus::TrialList& trials);

/// `enroll \t test \t score \t target|nontarget` under a `#mtan-scores v1`
/// header; scores use the shortest round-trip decimal form.
void write_scores(const std::filesystem::path& path, const ScoreSet& scores);
ScoreSet read_scores(const std::filesystem::path& path);

}  // namespace mtan::eval
