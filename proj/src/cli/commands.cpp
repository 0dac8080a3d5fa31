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

#include "mtan/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "mtan/corpus/audio.hpp"
#include "mtan/corpus/builder.hpp"
#include "mtan/corpus/manifest.hpp"
#include "mtan/eval/eer.hpp"
#include "mtan/eval/embeddings.hpp"
#include "mtan/eval/fusion.hpp"
#include "mtan/eval/report.hpp"
#include "mtan/eval/scoring.hpp"
#include "mtan/features/archive.hpp"
#include "mtan/features/vad.hpp"
#include "mtan/nn/checkpoint.hpp"
#include "mtan/trainer/trainer.hpp"
#include "staging.hpp"

namespace mtan::cli {

namespace {

constexpr corpus::WavEncoding kEncoding = corpus::WavEncoding::kFloat32;

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path.string());
}

void require_dir(const fs::path& path, const std::string& what) {
  if (!fs::is_directory(path)) throw UsageError(what + " not found: " + path.string());
}

// MFCC + VAD for every record; records without voiced frames are listed as
// missing in the archive metadata.
void write_manifest_features(const corpus::Manifest& manifest, const fs::path& ark) {
  std::vector<std::pair<std::string, features::FeatureMatrix>> records;
  std::string missing;
  for (const auto& rec : manifest.records) {
    try {
      records.emplace_back(rec.utt_id,
                           features::extract_features(corpus::read_wav(manifest.audio_path(rec))));
    } catch (const Error& e) {
      if (std::string(e.what()) != "no voiced frames") throw;
      missing += (missing.empty() ? "" : ",") + rec.utt_id;
    }
  }
  features::write_feature_archive(ark, records, {{"kind", "mfcc+vad"}, {"missing", missing}});
}

struct Condition {
  std::string name;
  int noise_label = corpus::kCleanLabel;
  std::string noise_name;
  std::optional<double> snr_db;
};

void write_conditions(const fs::path& path, const std::vector<corpus::TestCondition>& conds) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "#mtan-conditions v1\n";
  for (const auto& c : conds) {
    os << c.name << '\t' << c.noise_label << '\t' << c.noise_name << '\t'
       << (c.snr_db ? corpus::format_double(*c.snr_db) : "-") << '\n';
  }
}

std::vector<Condition> read_conditions(const fs::path& path) {
  std::ifstream is(path);
  std::string line;
  if (!is || !std::getline(is, line) || line != "#mtan-conditions v1") {
    throw UsageError("not a conditions file: " + path.string());
  }
  std::vector<Condition> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (std::size_t tab; (tab = line.find('\t', pos)) != std::string::npos; pos = tab + 1) {
      f.push_back(line.substr(pos, tab - pos));
    }
    f.push_back(line.substr(pos));
    if (f.size() != 4) throw FormatError(path.string() + ": malformed row '" + line + "'");
    Condition c{f[0], std::stoi(f[1]), f[2], std::nullopt};
    if (f[3] != "-") c.snr_db = corpus::parse_double(f[3]);
    out.push_back(std::move(c));
  }
  if (out.empty()) throw FormatError(path.string() + ": no conditions");
  return out;
}

// Files in `dir` ending with `suffix`, keyed by the name before the suffix.
std::map<std::string, fs::path> files_with_suffix(const fs::path& dir, const std::string& suffix) {
  require_dir(dir, "directory");
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.emplace(name.substr(0, name.size() - suffix.size()), entry.path());
    }
  }
  if (out.empty()) throw UsageError("no *" + suffix + " files in " + dir.string());
  return out;
}

eval::ScoreSet pooled_scores(const fs::path& dir) {
  eval::ScoreSet pooled;
  for (const auto& [cond, path] : files_with_suffix(dir, ".scores.tsv")) {
    const eval::ScoreSet s = eval::read_scores(path);
    pooled.trials.insert(pooled.trials.end(), s.trials.begin(), s.trials.end());
    pooled.scores.insert(pooled.scores.end(), s.scores.begin(), s.scores.end());
  }
  return pooled;
}

}  // namespace

void cmd_gen_toy(const GenToyArgs& args) {
  StagedDir dir(args.out, args.force);
  const corpus::ToyCorpus toy = corpus::generate_toy_corpus(args.toy);
  const corpus::Manifest all = corpus::write_clean_audio(dir.path(), toy, kEncoding);
  corpus::write_noise_bank(dir.path() / "noise", toy.noise_bank, kEncoding);
  corpus::write_manifest(dir.path() / "manifest.tsv", all);

  const corpus::ManifestSplit split = corpus::split_by_utterance(
      all, args.train_fraction, args.dev_fraction, derive_seed(args.toy.seed, "split"));
  corpus::write_manifest(dir.path() / "train.tsv", split.train);
  corpus::write_manifest(dir.path() / "dev.tsv", split.dev);
  corpus::write_manifest(dir.path() / "test.tsv", split.test);
  corpus::write_trials(dir.path() / "dev_trials.tsv",
                       corpus::make_trials(split.dev, args.trials_per_speaker,
                                           derive_seed(args.toy.seed, "dev-trials")));
  corpus::write_trials(dir.path() / "test_trials.tsv",
                       corpus::make_trials(split.test, args.trials_per_speaker,
                                           derive_seed(args.toy.seed, "test-trials")));
  dir.commit();
}

void cmd_prepare(const PrepareArgs& args) {
  require_dir(args.corpus, "corpus directory");
  for (const char* f : {"train.tsv", "dev.tsv", "test.tsv", "dev_trials.tsv", "test_trials.tsv"}) {
    require_file(args.corpus / f, "corpus file");
  }
  const fs::path bank_path = args.corpus / "noise" / "noise_bank.tsv";
  require_file(bank_path, "noise bank");
  corpus::NoiseBank bank;
  try {
    bank = corpus::read_noise_bank(bank_path);
  } catch (const Error& e) {
    throw UsageError(std::string("unusable noise bank: ") + e.what());
  }
  corpus::NoiseRegion train_region, test_region;
  if (args.noise_split == "disjoint") {
    train_region = corpus::NoiseRegion::kFirstHalf;
    test_region = corpus::NoiseRegion::kSecondHalf;
  } else if (args.noise_split == "shared") {
    train_region = test_region = corpus::NoiseRegion::kFull;
  } else {
    throw UsageError("--noise-split must be disjoint or shared");
  }
  if (!(args.clean_fraction > 0.0 && args.clean_fraction < 1.0)) {
    throw UsageError("--clean-fraction must lie strictly between 0 and 1");
  }
  if (args.train_snrs.empty() || args.test_snrs.empty()) throw UsageError("SNR lists must be non-empty");

  StagedDir dir(args.out, args.force);
  const fs::path root = dir.path();
  const int classes = corpus::noise_class_count(bank);

  const corpus::Manifest train = corpus::read_manifest(args.corpus / "train.tsv");
  corpus::TrainCorpusOptions train_opts;
  train_opts.clean_fraction = args.clean_fraction;
  train_opts.snr_choices = args.train_snrs;
  train_opts.seed = derive_seed(args.seed, "train");
  train_opts.region = train_region;
  train_opts.encoding = kEncoding;
  const corpus::Manifest noisy = corpus::build_train_corpus(train, bank, train_opts, root / "train");
  corpus::write_manifest(root / "train" / "manifest.tsv", noisy);
  write_manifest_features(noisy, root / "train" / "feats.ark");

  corpus::Manifest clean = train;
  clean.num_noise_classes = classes;
  clean.base_dir = root / "train_clean";
  fs::create_directories(clean.base_dir / "audio");
  for (auto& rec : clean.records) {
    const fs::path src = train.audio_path(rec);
    rec.audio_path = "audio/" + rec.utt_id + ".wav";
    corpus::write_wav(clean.audio_path(rec), corpus::read_wav(src), kEncoding);
  }
  corpus::write_manifest(root / "train_clean" / "manifest.tsv", clean);
  write_manifest_features(clean, root / "train_clean" / "feats.ark");

  for (const char* split : {"dev", "test"}) {
    const corpus::Manifest source = corpus::read_manifest(args.corpus / (std::string(split) + ".tsv"));
    corpus::TestCorpusOptions opts;
    opts.snr_levels = args.test_snrs;
    opts.seed = derive_seed(args.seed, split);
    opts.region = test_region;
    opts.encoding = kEncoding;
    const auto conds = corpus::build_test_corpus(source, bank, opts, root / split);
    for (const auto& c : conds) {
      corpus::write_manifest(root / split / (c.name + ".manifest.tsv"), c.manifest);
      write_manifest_features(c.manifest, root / split / (c.name + ".feats.ark"));
    }
    write_conditions(root / split / "conditions.tsv", conds);
    const std::string trials = std::string(split) + "_trials.tsv";
    corpus::write_trials(root / trials, corpus::read_trials(args.corpus / trials));
  }

  std::ofstream info(root / "prepare.txt");
  info << "seed\t" << args.seed << "\nclean_fraction\t" << corpus::format_double(args.clean_fraction)
       << "\nnoise_split\t" << args.noise_split << "\nnoise_classes\t" << classes << "\ntrain_snrs";
  for (double s : args.train_snrs) info << '\t' << corpus::format_double(s);
  info << "\ntest_snrs";
  for (double s : args.test_snrs) info << '\t' << corpus::format_double(s);
  info << '\n';
  info.close();
  dir.commit();
}

namespace {

struct ConditionData {
  Condition condition;
  corpus::Manifest manifest;
  features::FeatureStore features;
};

std::vector<ConditionData> load_split(const fs::path& data, const std::string& split) {
  const fs::path dir = data / split;
  require_file(dir / "conditions.tsv", "conditions file");
  std::vector<ConditionData> out;
  for (const auto& c : read_conditions(dir / "conditions.tsv")) {
    out.push_back(ConditionData{c, corpus::read_manifest(dir / (c.name + ".manifest.tsv")),
                                features::read_feature_archive(dir / (c.name + ".feats.ark"))});
  }
  return out;
}

// Pooled EER over every condition of a split, lower is better.
double pooled_eer(model::MtanParams& params, const std::vector<ConditionData>& conds,
                  const corpus::TrialList& trials) {
  eval::ScoreSet pooled;
  for (const auto& c : conds) {
    const eval::EmbeddingSet emb = eval::extract_embeddings(params, c.manifest, c.features);
    const eval::ScoreSet s = eval::score_trials(emb, trials);
    pooled.trials.insert(pooled.trials.end(), s.trials.begin(), s.trials.end());
    pooled.scores.insert(pooled.scores.end(), s.scores.begin(), s.scores.end());
  }
  return eval::compute_eer(pooled).eer;
}

}  // namespace

void cmd_train(const TrainArgs& args) {
  model::Variant variant;
  std::string set;
  if (args.variant == "baseline") {
    variant = model::Variant::kNone;
    set = "train_clean";
  } else if (args.variant == "mix") {
    variant = model::Variant::kNone;
    set = "train";
  } else if (args.variant == "fl" || args.variant == "al") {
    variant = model::parse_variant(args.variant);
    set = "train";
  } else {
    throw UsageError("variant must be one of baseline, mix, fl, al");
  }
  require_dir(args.data, "prepared data directory");

  trainer::TrainConfig config;
  try {
    if (!args.config.empty()) {
      require_file(args.config, "config file");
      config = trainer::read_train_config(args.config, config);
    }
    for (const auto& kv : args.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("override must be key=value: " + kv);
      trainer::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (variant == model::Variant::kNone) config.beta = 0.0;
    config.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const corpus::Manifest full = corpus::read_manifest(args.data / set / "manifest.tsv");
  const features::FeatureStore store = features::read_feature_archive(args.data / set / "feats.ark");
  corpus::Manifest manifest = full;
  manifest.records.clear();
  for (const auto& rec : full.records) {
    if (store.contains(rec.utt_id)) manifest.records.push_back(rec);
  }
  const std::vector<trainer::Example> examples = trainer::make_examples(manifest, store);

  model::ModelConfig model_config;
  model_config.num_speakers = static_cast<int>(manifest.num_speakers());
  model_config.num_noise_classes = manifest.num_noise_classes;

  std::vector<ConditionData> dev;
  corpus::TrialList dev_trials;
  trainer::TrainOptions options;
  options.card_extra = "system\t" + args.variant + "\ntrain_set\t" + set + "\n";
  if (config.dev_interval > 0 && fs::exists(args.data / "dev" / "conditions.tsv")) {
    dev = load_split(args.data, "dev");
    dev_trials = corpus::read_trials(args.data / "dev_trials.tsv");
    options.dev_metric = [&](model::MtanParams& params) { return pooled_eer(params, dev, dev_trials); };
  }

  if (!args.resume.empty()) {
    require_dir(args.out, "run directory to resume");
    require_file(args.resume, "resume checkpoint");
    options.out_dir = args.out;
    options.resume_from = args.resume;
    trainer::train(examples, model_config, config, variant, options);
    trainer::write_train_config(args.out / "config.txt", config);
    return;
  }
  StagedDir dir(args.out, args.force);
  options.out_dir = dir.path();
  trainer::write_train_config(dir.path() / "config.txt", config);
  try {
    trainer::train(examples, model_config, config, variant, options);
  } catch (const trainer::TrainingAborted&) {
    // Keep the log with its #abort record; there is no final checkpoint.
    dir.commit();
    throw;
  }
  dir.commit();
}

void cmd_extract(const ExtractArgs& args) {
  require_file(args.model, "model checkpoint");
  if (args.split != "dev" && args.split != "test") throw UsageError("--split must be dev or test");
  const std::vector<ConditionData> conds = load_split(args.data, args.split);
  model::MtanParams params = model::load_params(nn::Checkpoint::load(args.model));
  StagedDir dir(args.out, args.force);
  for (const auto& c : conds) {
    const eval::EmbeddingSet emb = eval::extract_embeddings(params, c.manifest, c.features,
                                                            args.model.filename().string());
    eval::write_embeddings(dir.path() / (c.condition.name + ".emb.ark"), emb);
  }
  dir.commit();
}

void cmd_score(const ScoreArgs& args) {
  require_file(args.trials, "trial list");
  const corpus::TrialList trials = corpus::read_trials(args.trials);
  const auto inputs = files_with_suffix(args.embeddings, ".emb.ark");
  StagedDir dir(args.out, args.force);
  for (const auto& [cond, path] : inputs) {
    eval::write_scores(dir.path() / (cond + ".scores.tsv"),
                       eval::score_trials(eval::read_embeddings(path), trials));
  }
  dir.commit();
}

void cmd_eval(const EvalArgs& args) {
  require_file(args.conditions, "conditions file");
  require_dir(args.scores, "score directory");
  std::vector<eval::EerRow> rows;
  for (const auto& c : read_conditions(args.conditions)) {
    const fs::path path = args.scores / (c.name + ".scores.tsv");
    require_file(path, "score file");
    const eval::ScoreSet s = eval::read_scores(path);
    const eval::EerResult r = eval::compute_eer(s);
    rows.push_back(eval::EerRow{c.name, c.noise_name, c.snr_db, r.eer, r.threshold, s.trials.size()});
  }
  const fs::path tmp = staged_file(args.out, args.force);
  eval::write_eer_report(tmp, eval::with_summary_rows(std::move(rows)));
  commit_file(tmp, args.out);
}

void cmd_fuse(const FuseArgs& args) {
  if (args.dev_scores.size() < 2) throw UsageError("fusion needs at least two systems");
  if (args.dev_scores.size() != args.eval_scores.size()) {
    throw UsageError("--dev and --eval must name the same number of systems");
  }
  std::vector<eval::ScoreSet> dev, evals;
  for (const auto& d : args.dev_scores) dev.push_back(pooled_scores(d));
  for (const auto& e : args.eval_scores) evals.push_back(pooled_scores(e));
  if (!args.allow_same_list) {
    for (std::size_t i = 0; i < dev.size(); ++i) {
      const bool same_dir = fs::equivalent(args.dev_scores[i], args.eval_scores[i]);
      if (same_dir || dev[i].trials == evals[i].trials) {
        throw UsageError("fusion would be fit and evaluated on the same trial list "
                         "(pass --allow-same-list to override)");
      }
    }
  }
  const eval::FusionWeights weights = eval::fit_fusion(dev);

  const auto conds = files_with_suffix(args.eval_scores.front(), ".scores.tsv");
  StagedDir dir(args.out, args.force);
  eval::write_fusion_weights(dir.path() / "weights.tsv", weights);
  for (const auto& [cond, path] : conds) {
    std::vector<eval::ScoreSet> systems;
    for (const auto& e : args.eval_scores) {
      const fs::path p = e / (cond + ".scores.tsv");
      require_file(p, "score file");
      systems.push_back(eval::read_scores(p));
    }
    eval::write_scores(dir.path() / (cond + ".scores.tsv"), eval::apply_fusion(weights, systems));
  }
  dir.commit();
}

eval::ProbeResult cmd_probe(const ProbeArgs& args) {
  require_file(args.conditions, "conditions file");
  const std::vector<Condition> conds = read_conditions(args.conditions);
  int classes = 1;
  for (const auto& c : conds) classes = std::max(classes, c.noise_label + 1);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (const auto& c : conds) {
    if (c.snr_db && std::find(args.snrs.begin(), args.snrs.end(), *c.snr_db) == args.snrs.end()) {
      continue;
    }
    const fs::path path = args.embeddings / (c.name + ".emb.ark");
    require_file(path, "embedding archive");
    const eval::EmbeddingSet emb = eval::read_embeddings(path);
    for (const auto& [utt, v] : emb.vectors) {
      rows.push_back(v);
      labels.push_back(c.noise_label);
      groups.push_back(utt);
    }
  }
  if (rows.empty()) throw UsageError("no embeddings selected for the probe");
  nn::Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw Error("embedding dimensions differ");
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(
        rows[i].data(), static_cast<Eigen::Index>(rows[i].size()));
  }
  const eval::ProbeResult r = eval::noise_probe(x, labels, groups, classes, args.options);

  const fs::path tmp = staged_file(args.out, args.force);
  {
    std::ofstream os(tmp);
    os << "#mtan-probe v1\n"
       << "train_accuracy\t" << corpus::format_double(r.train_accuracy) << '\n'
       << "test_accuracy\t" << corpus::format_double(r.test_accuracy) << '\n'
       << "chance\t" << corpus::format_double(r.chance) << '\n'
       << "train_size\t" << r.train_size << '\n'
       << "test_size\t" << r.test_size << '\n';
    if (!os) throw Error("write failed for " + tmp.string());
  }
  commit_file(tmp, args.out);
  return r;
}

}  // namespace mtan::cli
