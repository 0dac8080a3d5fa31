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

#include <algorithm>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtan/cli/commands.hpp"

namespace mtan::cli {

namespace {

void error_line(std::ostream& err, const char* kind, const std::string& message) {
  err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task adversarial speaker embeddings: corpus, training and evaluation"};
  app.name("mtan");
  app.require_subcommand(1);

  GenToyArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-toy", "Generate a synthetic clean corpus with trials");
  gen_cmd->add_option("--out", gen.out, "Output corpus directory")->required();
  gen_cmd->add_option("--speakers", gen.toy.n_speakers, "Number of speakers");
  gen_cmd->add_option("--utts", gen.toy.utts_per_speaker, "Utterances per speaker");
  gen_cmd->add_option("--noise-types", gen.toy.n_noise_types, "Number of noise types");
  gen_cmd->add_option("--duration", gen.toy.duration_s, "Utterance duration in seconds");
  gen_cmd->add_option("--rate", gen.toy.sample_rate, "Sample rate in Hz");
  gen_cmd->add_option("--seed", gen.toy.seed, "Random seed");
  gen_cmd->add_option("--trials-per-speaker", gen.trials_per_speaker,
                      "Target (and nontarget) trials per speaker");
  gen_cmd->add_option("--train-fraction", gen.train_fraction, "Per-speaker training share");
  gen_cmd->add_option("--dev-fraction", gen.dev_fraction, "Per-speaker development share");
  gen_cmd->add_flag("--force", gen.force, "Replace an existing output directory");

  PrepareArgs prep;
  auto* prep_cmd = app.add_subcommand("prepare", "Build noisy train/dev/test sets and features");
  prep_cmd->add_option("--corpus", prep.corpus, "Corpus directory from gen-toy")->required();
  prep_cmd->add_option("--out", prep.out, "Output data directory")->required();
  prep_cmd->add_option("--seed", prep.seed, "Random seed");
  prep_cmd->add_option("--clean-fraction", prep.clean_fraction, "Share of training data kept clean");
  prep_cmd->add_option("--train-snrs", prep.train_snrs, "Training SNR choices in dB")->delimiter(',');
  prep_cmd->add_option("--test-snrs", prep.test_snrs, "Test SNR levels in dB")->delimiter(',');
  prep_cmd->add_option("--noise-split", prep.noise_split,
                       "disjoint: train and test use different halves of each noise; shared: both "
                       "use the whole recording");
  prep_cmd->add_flag("--force", prep.force, "Replace an existing output directory");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one system");
  train_cmd->add_option("--data", train.data, "Prepared data directory")->required();
  train_cmd->add_option("--variant", train.variant, "baseline | mix | fl | al")->required();
  train_cmd->add_option("--out", train.out, "Run directory")->required();
  train_cmd->add_option("--config", train.config, "key = value training config file");
  train_cmd->add_option("--set", train.overrides, "Override a config key (key=value), repeatable");
  train_cmd->add_option("--resume", train.resume, "Resume from a checkpoint inside --out");
  train_cmd->add_flag("--force", train.force, "Replace an existing run directory");

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract", "Extract embeddings for every condition");
  extract_cmd->add_option("--model", extract.model, "Checkpoint file")->required();
  extract_cmd->add_option("--data", extract.data, "Prepared data directory")->required();
  extract_cmd->add_option("--split", extract.split, "dev | test");
  extract_cmd->add_option("--out", extract.out, "Output embedding directory")->required();
  extract_cmd->add_flag("--force", extract.force, "Replace an existing output directory");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Cosine-score a trial list per condition");
  score_cmd->add_option("--embeddings", score.embeddings, "Embedding directory")->required();
  score_cmd->add_option("--trials", score.trials, "Trial list")->required();
  score_cmd->add_option("--out", score.out, "Output score directory")->required();
  score_cmd->add_flag("--force", score.force, "Replace an existing output directory");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "EER report over conditions");
  eval_cmd->add_option("--scores", ev.scores, "Score directory")->required();
  eval_cmd->add_option("--conditions", ev.conditions, "conditions.tsv from prepare")->required();
  eval_cmd->add_option("--out", ev.out, "Report file")->required();
  eval_cmd->add_flag("--force", ev.force, "Replace an existing report");

  FuseArgs fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Linear-regression score fusion");
  fuse_cmd->add_option("--dev", fuse.dev_scores, "Dev score directories, one per system")
      ->required()->delimiter(',');
  fuse_cmd->add_option("--eval", fuse.eval_scores, "Eval score directories, same order")
      ->required()->delimiter(',');
  fuse_cmd->add_option("--out", fuse.out, "Output directory")->required();
  fuse_cmd->add_flag("--allow-same-list", fuse.allow_same_list,
                     "Permit fitting and evaluating on the same trials");
  fuse_cmd->add_flag("--force", fuse.force, "Replace an existing output directory");

  ProbeArgs probe;
  auto* probe_cmd = app.add_subcommand("probe", "Noise-type probe on frozen embeddings");
  probe_cmd->add_option("--embeddings", probe.embeddings, "Embedding directory")->required();
  probe_cmd->add_option("--conditions", probe.conditions, "conditions.tsv from prepare")->required();
  probe_cmd->add_option("--snrs", probe.snrs, "Noisy SNRs included besides clean")->delimiter(',');
  probe_cmd->add_option("--steps", probe.options.steps, "Probe training steps");
  probe_cmd->add_option("--seed", probe.options.seed, "Probe seed");
  probe_cmd->add_option("--out", probe.out, "Report file")->required();
  probe_cmd->add_flag("--force", probe.force, "Replace an existing report");

  auto* self_cmd = app.add_subcommand("selfcheck", "Gradient, loss and EER self-tests");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    error_line(err, "usage", e.what());
    return 2;
  }

  try {
    if (gen_cmd->parsed()) {
      cmd_gen_toy(gen);
      out << "wrote corpus " << gen.out.string() << '\n';
    } else if (prep_cmd->parsed()) {
      cmd_prepare(prep);
      out << "wrote prepared data " << prep.out.string() << '\n';
    } else if (train_cmd->parsed()) {
      cmd_train(train);
      out << "wrote run " << train.out.string() << '\n';
    } else if (extract_cmd->parsed()) {
      cmd_extract(extract);
      out << "wrote embeddings " << extract.out.string() << '\n';
    } else if (score_cmd->parsed()) {
      cmd_score(score);
      out << "wrote scores " << score.out.string() << '\n';
    } else if (eval_cmd->parsed()) {
      cmd_eval(ev);
      out << "wrote report " << ev.out.string() << '\n';
    } else if (fuse_cmd->parsed()) {
      cmd_fuse(fuse);
      out << "wrote fused scores " << fuse.out.string() << '\n';
    } else if (probe_cmd->parsed()) {
      const auto r = cmd_probe(probe);
      out << "probe test accuracy " << r.test_accuracy << " (chance " << r.chance << ")\n";
    } else if (self_cmd->parsed()) {
      if (!cmd_selfcheck(out)) {
        error_line(err, "selfcheck", "one or more checks failed");
        return 1;
      }
    }
  } catch (const UsageError& e) {
    error_line(err, "usage", e.what());
    return 2;
  } catch (const std::exception& e) {
    error_line(err, "runtime", e.what());
    return 1;
  }
  return 0;
}

}  // namespace mtan::cli
