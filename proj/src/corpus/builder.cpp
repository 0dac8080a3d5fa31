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

#include "mtan/corpus/builder.hpp"

#include <cmath>
#include <fstream>

#include "mtan/common/error.hpp"
#include "mtan/common/random.hpp"
#include "mtan/corpus/mixing.hpp"

namespace mtan::corpus {

namespace fs = std::filesystem;

int noise_class_count(const NoiseBank& bank) {
  if (bank.empty()) throw Error("noise bank is empty");
  int expected = 1;
  for (const auto& [label, noise] : bank) {
    if (label != expected++) throw Error("noise labels must be 1..N without gaps");
  }
  return static_cast<int>(bank.size()) + 1;
}

void write_noise_bank(const fs::path& dir, const NoiseBank& bank, WavEncoding encoding) {
  noise_class_count(bank);
  fs::create_directories(dir);
  std::ofstream os(dir / "noise_bank.tsv", std::ios::trunc);
  if (!os) throw Error("cannot write noise bank in " + dir.string());
  os << "#mtan-noise v1\n";
  for (const auto& [label, noise] : bank) {
    const std::string file = "noise" + std::to_string(label) + "_" + noise.name + ".wav";
    write_wav(dir / file, noise.clip, encoding);
    os << label << '\t' << noise.name << '\t' << file << '\n';
  }
}

NoiseBank read_noise_bank(const fs::path& tsv_path) {
  std::ifstream is(tsv_path);
  if (!is) throw Error("cannot open " + tsv_path.string());
  std::string line;
  if (!std::getline(is, line) || line != "#mtan-noise v1") {
    throw FormatError(tsv_path.string() + ": missing noise bank header");
  }
  NoiseBank bank;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw FormatError(tsv_path.string() + ": bad row '" + line + "'");
    }
    const int label = std::stoi(line.substr(0, t1));
    const std::string name = line.substr(t1 + 1, t2 - t1 - 1);
    fs::path file(line.substr(t2 + 1));
    if (!file.is_absolute()) file = tsv_path.parent_path() / file;
    bank.emplace(label, NoiseType{name, read_wav(file)});
  }
  noise_class_count(bank);
  return bank;
}

namespace {

struct Region {
  std::size_t begin;
  std::size_t length;
};

Region region_of(const AudioClip& noise, NoiseRegion region) {
  const std::size_t n = noise.size();
  switch (region) {
    case NoiseRegion::kFirstHalf:
      return {0, n / 2};
    case NoiseRegion::kSecondHalf:
      return {n / 2, n - n / 2};
    case NoiseRegion::kFull:
      break;
  }
  return {0, n};
}

struct Mixed {
  AudioClip clip;
  double gain;
};

// Cuts a randomly offset segment from the noise region, mixes it at the
// requested SNR and peak-limits the result.
Mixed corrupt(const AudioClip& clean, const AudioClip& noise, NoiseRegion region,
              double snr_db, Rng& rng) {
  if (clean.sample_rate() != noise.sample_rate()) {
    throw Error("sample rate mismatch between clean and noise");
  }
  const Region r = region_of(noise, region);
  if (r.length == 0) throw Error("degenerate signal");
  const auto region_samples = noise.samples().subspan(r.begin, r.length);
  const auto offset = static_cast<std::size_t>(rng.uniform_index(r.length));
  AudioClip segment(cyclic_segment(region_samples, clean.size(), offset),
                    noise.sample_rate());
  AudioClip mixed = mix_at_snr(clean, segment, snr_db);
  std::vector<double> samples(mixed.samples().begin(), mixed.samples().end());
  const double gain = peak_limit(samples);
  return {AudioClip(std::move(samples), clean.sample_rate()), gain};
}

std::string gain_comment(double gain) {
  return gain == 1.0 ? std::string() : "gain=" + format_double(gain);
}

}  // namespace

Manifest build_train_corpus(const Manifest& clean, const NoiseBank& bank,
                            const TrainCorpusOptions& options, const fs::path& out_dir) {
  const int classes = noise_class_count(bank);
  if (!(options.clean_fraction > 0.0 && options.clean_fraction < 1.0)) {
    throw Error("clean_fraction must lie strictly between 0 and 1");
  }
  if (options.snr_choices.empty()) throw Error("snr_choices is empty");

  const std::size_t n = clean.records.size();
  const auto n_clean =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * options.clean_fraction));

  // Seeded Fisher-Yates over record positions; the first n_clean stay clean.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(options.seed, "train-partition"));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
  }
  std::vector<bool> keep_clean(n, false);
  for (std::size_t i = 0; i < n_clean; ++i) keep_clean[order[i]] = true;

  fs::create_directories(out_dir / "audio");
  Manifest out;
  out.num_noise_classes = classes;
  out.base_dir = out_dir;
  for (std::size_t i = 0; i < n; ++i) {
    const UtteranceRecord& src = clean.records[i];
    if (src.noise_label != kCleanLabel) {
      throw Error("input to build_train_corpus must be clean: " + src.utt_id);
    }
    const AudioClip audio = read_wav(clean.audio_path(src));
    UtteranceRecord rec = src;
    rec.audio_path = "audio/" + src.utt_id + ".wav";
    if (keep_clean[i]) {
      write_wav(out_dir / rec.audio_path, audio, options.encoding);
    } else {
      Rng rng(derive_seed(options.seed, "train-mix/" + src.utt_id));
      rec.noise_label = 1 + static_cast<int>(rng.uniform_index(classes - 1));
      rec.snr_db = options.snr_choices[rng.uniform_index(options.snr_choices.size())];
      const Mixed mixed =
          corrupt(audio, bank.at(rec.noise_label).clip, options.region, *rec.snr_db, rng);
      rec.comment = gain_comment(mixed.gain);
      write_wav(out_dir / rec.audio_path, mixed.clip, options.encoding);
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::vector<TestCondition> build_test_corpus(const Manifest& clean, const NoiseBank& bank,
                                             const TestCorpusOptions& options,
                                             const fs::path& out_dir) {
  const int classes = noise_class_count(bank);
  if (options.snr_levels.empty()) throw Error("snr_levels is empty");

  std::vector<AudioClip> sources;
  sources.reserve(clean.records.size());
  for (const auto& rec : clean.records) {
    if (rec.noise_label != kCleanLabel) {
      throw Error("input to build_test_corpus must be clean: " + rec.utt_id);
    }
    sources.push_back(read_wav(clean.audio_path(rec)));
  }

  std::vector<TestCondition> conditions;
  {
    TestCondition cond;
    cond.name = "clean";
    cond.manifest.num_noise_classes = classes;
    cond.manifest.base_dir = out_dir;
    fs::create_directories(out_dir / cond.name);
    for (std::size_t i = 0; i < sources.size(); ++i) {
      UtteranceRecord rec = clean.records[i];
      rec.audio_path = cond.name + "/" + rec.utt_id + ".wav";
      write_wav(out_dir / rec.audio_path, sources[i], options.encoding);
      cond.manifest.records.push_back(std::move(rec));
    }
    conditions.push_back(std::move(cond));
  }

  for (const auto& [label, noise] : bank) {
    for (double snr : options.snr_levels) {
      TestCondition cond;
      cond.name = noise.name + "_" + format_double(snr) + "dB";
      cond.noise_label = label;
      cond.noise_name = noise.name;
      cond.snr_db = snr;
      cond.manifest.num_noise_classes = classes;
      cond.manifest.base_dir = out_dir;
      fs::create_directories(out_dir / cond.name);
      for (std::size_t i = 0; i < sources.size(); ++i) {
        UtteranceRecord rec = clean.records[i];
        Rng rng(derive_seed(options.seed, "test-mix/" + cond.name + "/" + rec.utt_id));
        const Mixed mixed = corrupt(sources[i], noise.clip, options.region, snr, rng);
        rec.noise_label = label;
        rec.snr_db = snr;
        rec.comment = gain_comment(mixed.gain);
        rec.audio_path = cond.name + "/" + rec.utt_id + ".wav";
        write_wav(out_dir / rec.audio_path, mixed.clip, options.encoding);
        cond.manifest.records.push_back(std::move(rec));
      }
      conditions.push_back(std::move(cond));
    }
  }
  return conditions;
}

}  // namespace mtan::corpus
