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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtan/common/error.hpp"
#include "mtan/corpus/toy.hpp"
#include "mtan/eval/probe.hpp"

namespace mtan::cli {

namespace fs = std::filesystem;

/// Bad arguments or an output location the command may not touch; exit 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct GenToyArgs {
  fs::path out;
  corpus::ToyCorpusConfig toy;
  int trials_per_speaker = 20;
  double train_fraction = 0.6;
  double dev_fraction = 0.2;
  bool force = false;
};

/// Corpus directory layout:
///   manifest.tsv                 every clean utterance
///   train.tsv dev.tsv test.tsv   per-speaker utterance split
///   dev_trials.tsv test_trials.tsv
///   clean/<utt>.wav  noise/noise_bank.tsv  noise/*.wav
void cmd_gen_toy(const GenToyArgs& args);

struct PrepareArgs {
  fs::path corpus;
  fs::path out;
  std::uint64_t seed = 11;
  double clean_fraction = 1.0 / 6.0;
  std::vector<double> train_snrs{10.0, 20.0};
  std::vector<double> test_snrs{0.0, 5.0, 10.0, 15.0, 20.0};
  std::string noise_split = "disjoint";  // or "shared"
  bool force = false;
};

/// Prepared data layout:
///   train/        corrupted training set: manifest.tsv audio/ feats.ark
///   train_clean/  the clean training set, same files
///   dev/ test/    conditions.tsv, <cond>/ audio, <cond>.manifest.tsv,
///                 <cond>.feats.ark
///   dev_trials.tsv test_trials.tsv prepare.txt
void cmd_prepare(const PrepareArgs& args);

struct TrainArgs {
  fs::path data;
  fs::path out;
  std::string variant;  // baseline | mix | fl | al
  fs::path config;      // optional key = value file
  std::vector<std::string> overrides;  // key=value, applied after the file
  fs::path resume;      // optional trainer checkpoint inside `out`
  bool force = false;
};

void cmd_train(const TrainArgs& args);

struct ExtractArgs {
  fs::path model;
  fs::path data;
  std::string split = "test";  // dev | test
  fs::path out;                // receives <cond>.emb.ark per condition
  bool force = false;
};

void cmd_extract(const ExtractArgs& args);

struct ScoreArgs {
  fs::path embeddings;  // directory of <cond>.emb.ark
  fs::path trials;
  fs::path out;         // receives <cond>.scores.tsv
  bool force = false;
};

void cmd_score(const ScoreArgs& args);

struct EvalArgs {
  fs::path scores;      // directory of <cond>.scores.tsv
  fs::path conditions;  // conditions.tsv from prepare
  fs::path out;         // EER report file
  bool force = false;
};

void cmd_eval(const EvalArgs& args);

struct FuseArgs {
  std::vector<fs::path> dev_scores;   // one directory per system
  std::vector<fs::path> eval_scores;  // same systems, same order
  fs::path out;                       // fused <cond>.scores.tsv + weights.tsv
  bool allow_same_list = false;
  bool force = false;
};

void cmd_fuse(const FuseArgs& args);

struct ProbeArgs {
  fs::path embeddings;  // directory of <cond>.emb.ark
  fs::path conditions;  // conditions.tsv naming each condition's noise label
  std::vector<double> snrs{10.0, 20.0};  // noisy conditions included with clean
  eval::ProbeOptions options;
  fs::path out;         // probe report file
  bool force = false;
};

/// Returns the held-out probe accuracy after writing the report.
eval::ProbeResult cmd_probe(const ProbeArgs& args);

/// Gradient checks, closed-form losses and the EER oracle. Prints one line per
/// check; returns true when all pass and the negative control fails.
bool cmd_selfcheck(std::ostream& out);

/// Full command line entry point: 0 success, 1 runtime failure, 2 usage error.
/// Errors are reported on `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtan::cli
