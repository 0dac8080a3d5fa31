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

#include "mtan/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mtan/nn/checkpoint.hpp"

namespace mtan::trainer {

namespace fs = std::filesystem;

std::vector<Example> make_examples(const corpus::Manifest& manifest,
                                   const features::FeatureStore& store) {
  const auto index = manifest.speaker_index();
  std::vector<Example> out;
  out.reserve(manifest.records.size());
  for (const auto& rec : manifest.records) {
    if (!store.contains(rec.utt_id)) throw Error("no features for utterance '" + rec.utt_id + "'");
    const auto& f = store.at(rec.utt_id);
    if (f.num_frames() < 1) throw Error("utterance '" + rec.utt_id + "' has no frames");
    out.push_back(Example{&f, index.at(rec.speaker_id), rec.noise_label});
  }
  return out;
}

model::Batch sample_batch(const std::vector<Example>& examples, const TrainConfig& config,
                          Rng& rng) {
  if (examples.empty()) throw Error("cannot sample a batch from an empty manifest");
  const int dim = examples.front().features->dim();
  const auto n = static_cast<std::int64_t>(config.batch_size);
  const auto t = static_cast<std::int64_t>(config.crop_frames);
  model::Batch batch;
  batch.x = nn::Tensor(nn::Shape{n, t, dim});
  double* out = batch.x.data();
  for (std::int64_t b = 0; b < n; ++b) {
    const Example& ex = examples[rng.uniform_index(examples.size())];
    const auto& f = *ex.features;
    if (f.dim() != dim) throw Error("feature dimension differs between utterances");
    const int frames = f.num_frames();
    const int start = frames > config.crop_frames
                          ? static_cast<int>(rng.uniform_index(
                                static_cast<std::uint64_t>(frames - config.crop_frames + 1)))
                          : 0;
    for (int i = 0; i < config.crop_frames; ++i) {
      const auto row = f.row((start + i) % frames);
      std::copy(row.begin(), row.end(), out);
      out += dim;
    }
    batch.speakers.push_back(ex.speaker);
    batch.noise.push_back(ex.noise);
  }
  return batch;
}

std::string format_log_record(const LogRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%lld\t%lld\t%s\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g",
                static_cast<long long>(r.step), static_cast<long long>(r.cycle), r.phase.c_str(),
                r.l_sC, r.l_sD, r.l_var, r.adversarial, r.disc_accuracy, r.beta, r.gamma);
  return buf;
}

TrainerState make_trainer_state(const model::ModelConfig& model_config, const TrainConfig& config,
                                model::Variant variant) {
  config.validate();
  TrainerState s;
  s.params = model::init_params(model_config, config.seed);
  s.variant = variant;
  for (nn::AdamState* opt : {&s.encoder_opt, &s.classifier_opt, &s.discriminator_opt}) {
    opt->options.lr = config.lr;
  }
  s.stability = make_stability_state(config);
  if (variant == model::Variant::kNone) s.stability.beta = 0.0;
  s.rng = Rng(derive_seed(config.seed, "train-batches"));
  return s;
}

model::LossWeights current_weights(const TrainerState& state) {
  return model::LossWeights{state.stability.beta, state.stability.gamma, state.variant};
}

namespace {

LogRecord make_record(const TrainerState& s, const char* phase,
                      const model::ObjectiveResult& r) {
  const model::LossWeights w = current_weights(s);
  return LogRecord{s.step,  s.cycle,           phase, r.l_sC,
                   r.l_sD,  r.l_var,           model::adversarial_value(r.l_sD, r.l_var, w),
                   r.disc_accuracy, w.beta, w.gamma};
}

}  // namespace

void train_cycle(TrainerState& state, const std::vector<Example>& examples,
                 const TrainConfig& config, std::vector<LogRecord>* log) {
  double acc_sum = 0.0;
  for (int i = 0; i < config.cd_steps_per_cycle; ++i) {
    const model::Batch batch = sample_batch(examples, config, state.rng);
    const model::ObjectiveResult r =
        model::cd_objectives(state.params, batch, current_weights(state));
    if (!std::isfinite(r.value)) throw NumericError("non-finite C/D objective");
    nn::adam_step(state.params.classifier, state.classifier_opt);
    nn::adam_step(state.params.discriminator, state.discriminator_opt);
    ++state.counters.classifier;
    ++state.counters.discriminator;
    acc_sum += r.disc_accuracy;
    if (log) log->push_back(make_record(state, "cd", r));
    ++state.step;
  }
  for (int i = 0; i < config.encoder_steps_per_cycle; ++i) {
    const model::Batch batch = sample_batch(examples, config, state.rng);
    const model::ObjectiveResult r =
        model::encoder_objective(state.params, batch, current_weights(state));
    if (!std::isfinite(r.value)) throw NumericError("non-finite encoder objective");
    nn::adam_step(state.params.encoder, state.encoder_opt);
    ++state.counters.encoder;
    if (log) log->push_back(make_record(state, "enc", r));
    ++state.step;
  }
  ++state.cycle;
  if (state.variant != model::Variant::kNone) {
    stability_update(state.stability, acc_sum / config.cd_steps_per_cycle, config, state.cycle);
  }
}

namespace {

std::string serialize_adjustments(const std::vector<Adjustment>& adjustments) {
  std::ostringstream os;
  for (const auto& a : adjustments) {
    os << a.cycle << '\t' << corpus::format_double(a.mean_accuracy) << '\t' << a.target << '\t'
       << corpus::format_double(a.old_value) << '\t' << corpus::format_double(a.new_value)
       << '\n';
  }
  return os.str();
}

std::vector<Adjustment> parse_adjustments(const std::string& text) {
  std::vector<Adjustment> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string cycle, mean, target, old_value, new_value;
    if (!std::getline(ls, cycle, '\t') || !std::getline(ls, mean, '\t') ||
        !std::getline(ls, target, '\t') || !std::getline(ls, old_value, '\t') ||
        !std::getline(ls, new_value, '\t')) {
      throw FormatError("malformed adjustment record in checkpoint");
    }
    out.push_back(Adjustment{std::stoll(cycle), corpus::parse_double(mean), target,
                             corpus::parse_double(old_value), corpus::parse_double(new_value)});
  }
  return out;
}

}  // namespace

void save_trainer_state(const fs::path& path, const TrainerState& s, std::uint64_t log_bytes) {
  nn::Checkpoint ckpt;
  model::save_params(ckpt, s.params);
  ckpt.put_bytes("trainer.variant", model::variant_name(s.variant));
  ckpt.put_adam("adam.encoder/", s.encoder_opt);
  ckpt.put_adam("adam.classifier/", s.classifier_opt);
  ckpt.put_adam("adam.discriminator/", s.discriminator_opt);
  nn::Tensor window(nn::Shape{static_cast<std::int64_t>(s.stability.window.size())});
  std::copy(s.stability.window.begin(), s.stability.window.end(), window.data());
  ckpt.put_tensor("stability.window", window);
  ckpt.put_double("stability.beta", s.stability.beta);
  ckpt.put_double("stability.gamma", s.stability.gamma);
  ckpt.put_bytes("stability.adjustments", serialize_adjustments(s.stability.adjustments));
  ckpt.put_bytes("trainer.rng", s.rng.state());
  ckpt.put_int("trainer.cycle", s.cycle);
  ckpt.put_int("trainer.step", s.step);
  ckpt.put_int("trainer.updates.encoder", s.counters.encoder);
  ckpt.put_int("trainer.updates.classifier", s.counters.classifier);
  ckpt.put_int("trainer.updates.discriminator", s.counters.discriminator);
  if (s.best_dev_metric) ckpt.put_double("trainer.best_dev_metric", *s.best_dev_metric);
  ckpt.put_int("trainer.best_cycle", s.best_cycle);
  ckpt.put_int("trainer.log_bytes", static_cast<std::int64_t>(log_bytes));
  ckpt.save(path);
}

std::pair<TrainerState, std::uint64_t> load_trainer_state(const fs::path& path) {
  const nn::Checkpoint ckpt = nn::Checkpoint::load(path);
  TrainerState s;
  s.params = model::load_params(ckpt);
  s.variant = model::parse_variant(ckpt.get_bytes("trainer.variant"));
  ckpt.get_adam("adam.encoder/", s.encoder_opt);
  ckpt.get_adam("adam.classifier/", s.classifier_opt);
  ckpt.get_adam("adam.discriminator/", s.discriminator_opt);
  const nn::Tensor window = ckpt.get_tensor("stability.window");
  s.stability.window.assign(window.values().begin(), window.values().end());
  s.stability.beta = ckpt.get_double("stability.beta");
  s.stability.gamma = ckpt.get_double("stability.gamma");
  s.stability.adjustments = parse_adjustments(ckpt.get_bytes("stability.adjustments"));
  s.rng.restore(ckpt.get_bytes("trainer.rng"));
  s.cycle = ckpt.get_int("trainer.cycle");
  s.step = ckpt.get_int("trainer.step");
  s.counters.encoder = ckpt.get_int("trainer.updates.encoder");
  s.counters.classifier = ckpt.get_int("trainer.updates.classifier");
  s.counters.discriminator = ckpt.get_int("trainer.updates.discriminator");
  if (ckpt.contains("trainer.best_dev_metric")) {
    s.best_dev_metric = ckpt.get_double("trainer.best_dev_metric");
  }
  s.best_cycle = ckpt.get_int("trainer.best_cycle");
  return {std::move(s), static_cast<std::uint64_t>(ckpt.get_int("trainer.log_bytes"))};
}

namespace {

void write_stability_log(const fs::path& path, const std::vector<Adjustment>& adjustments) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "#mtan-stability v1\tcycle\tmean_acc\ttarget\told\tnew\n"
     << serialize_adjustments(adjustments);
}

void save_with_card(const fs::path& path, const TrainerState& s, std::uint64_t log_bytes,
                    const TrainConfig& config, const std::string& extra) {
  save_trainer_state(path, s, log_bytes);
  model::write_model_card(fs::path(path.string() + ".card"), s.params, current_weights(s),
                          config.seed, "cycle\t" + std::to_string(s.cycle) + "\n" + extra);
}

}  // namespace

TrainResult train(const std::vector<Example>& examples, const model::ModelConfig& model_config,
                  const TrainConfig& config, model::Variant variant, const TrainOptions& options) {
  config.validate();
  if (model_config.num_speakers < 2) throw Error("training needs at least two speakers");
  if (model_config.num_noise_classes < 2) throw Error("training needs at least two noise classes");
  fs::create_directories(options.out_dir);
  const fs::path log_path = options.out_dir / "trainlog.tsv";

  TrainResult result;
  TrainerState& s = result.state;
  if (!options.resume_from.empty()) {
    auto [loaded, log_bytes] = load_trainer_state(options.resume_from);
    s = std::move(loaded);
    if (s.variant != variant) throw Error("resume checkpoint was trained with another variant");
    if (!fs::exists(log_path) || fs::file_size(log_path) < log_bytes) {
      throw Error("train log is shorter than the checkpoint expects");
    }
    fs::resize_file(log_path, log_bytes);
  } else {
    s = make_trainer_state(model_config, config, variant);
    std::ofstream(log_path, std::ios::trunc) << kTrainLogHeader << "\n";
  }

  std::ofstream log(log_path, std::ios::app);
  if (!log) throw Error("cannot open " + log_path.string());
  const fs::path best_path = options.out_dir / "best.ckpt";
  std::vector<LogRecord> records;
  while (s.cycle < config.cycles) {
    records.clear();
    try {
      train_cycle(s, examples, config, &records);
    } catch (const NumericError& e) {
      for (const auto& r : records) log << format_log_record(r) << "\n";
      log << "#abort\tcycle=" << s.cycle << "\tstep=" << s.step << "\t" << e.what() << "\n";
      log.flush();
      throw TrainingAborted(std::string("training aborted at cycle ") + std::to_string(s.cycle) +
                            ": " + e.what());
    }
    for (const auto& r : records) log << format_log_record(r) << "\n";
    log.flush();
    const auto log_bytes = static_cast<std::uint64_t>(fs::file_size(log_path));

    if (options.dev_metric && config.dev_interval > 0 && s.cycle % config.dev_interval == 0) {
      const double metric = options.dev_metric(s.params);
      if (!s.best_dev_metric || metric < *s.best_dev_metric) {
        s.best_dev_metric = metric;
        s.best_cycle = s.cycle;
        save_with_card(best_path, s, log_bytes, config,
                       options.card_extra + "dev_metric\t" + corpus::format_double(metric) + "\n");
      }
    }
    if (config.checkpoint_interval > 0 && s.cycle % config.checkpoint_interval == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "cycle-%06lld.ckpt", static_cast<long long>(s.cycle));
      fs::create_directories(options.out_dir / "ckpt");
      save_with_card(options.out_dir / "ckpt" / name, s, log_bytes, config, options.card_extra);
    }
  }
  const auto log_bytes = static_cast<std::uint64_t>(fs::file_size(log_path));
  result.final_checkpoint = options.out_dir / "final.ckpt";
  save_with_card(result.final_checkpoint, s, log_bytes, config, options.card_extra);
  write_stability_log(options.out_dir / "stability.tsv", s.stability.adjustments);
  if (s.best_dev_metric) result.best_checkpoint = best_path;
  return result;
}

}  // namespace mtan::trainer
