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

#include "mtan/corpus/toy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <numbers>

#include "mtan/common/error.hpp"
#include "mtan/common/random.hpp"

namespace mtan::corpus {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string numbered(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
  return buf;
}

double partial_amplitude(const SpeakerTemplate& v, double freq, int harmonic) {
  double envelope = 0.0;
  for (int f = 0; f < 3; ++f) {
    const double d = (freq - v.formant_hz[f]) / v.bandwidth_hz[f];
    envelope += v.formant_gain[f] / (1.0 + d * d);
  }
  return envelope * std::pow(static_cast<double>(harmonic), -v.tilt);
}

double highest_partial_hz(int sample_rate) {
  return std::min(7000.0, 0.45 * sample_rate);
}

void normalize_rms(std::vector<double>& x, double target) {
  const double p = mean_power(x);
  if (p <= 0.0) return;
  const double g = target / std::sqrt(p);
  for (double& s : x) s *= g;
}

AudioClip make_noise(int type, std::size_t n, int sample_rate, std::uint64_t seed,
                     std::string* name) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& s : x) s = rng.normal();
  std::vector<double> y(n, 0.0);
  auto resonate = [&](double center_hz, double r) {
    const double w = kTwoPi * center_hz / sample_rate;
    const double a1 = 2.0 * r * std::cos(w), a2 = -r * r;
    double y1 = 0.0, y2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = x[i] + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y[i];
    }
  };
  switch (type) {
    case 1:
      *name = "white";
      y = x;
      break;
    case 2: {
      *name = "lowpass";
      double state = 0.0;
      for (std::size_t i = 0; i < n; ++i) y[i] = state = 0.97 * state + x[i];
      break;
    }
    case 3:
      *name = "bandpass";
      resonate(2000.0, 0.98);
      break;
    case 4:
      *name = "modulated";
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        y[i] = x[i] * (0.55 + 0.45 * std::sin(kTwoPi * 3.0 * t));
      }
      break;
    default: {
      const double center = 700.0 + 600.0 * (type - 5);
      *name = "bandpass" + std::to_string(static_cast<int>(center));
      resonate(std::min(center, 0.4 * sample_rate), 0.98);
      break;
    }
  }
  normalize_rms(y, 0.1);
  return AudioClip(std::move(y), sample_rate);
}

}  // namespace

SpeakerTemplate make_speaker_template(std::uint64_t seed, const std::string& speaker_id) {
  Rng rng(derive_seed(seed, "speaker/" + speaker_id));
  SpeakerTemplate v;
  v.f0_hz = rng.uniform(90.0, 240.0);
  v.formant_hz = {rng.uniform(300.0, 900.0), rng.uniform(900.0, 2300.0),
                  rng.uniform(2300.0, 3500.0)};
  for (int f = 0; f < 3; ++f) {
    v.bandwidth_hz[f] = rng.uniform(60.0, 200.0);
    v.formant_gain[f] = rng.uniform(0.5, 1.0);
  }
  v.tilt = rng.uniform(0.6, 1.4);
  return v;
}

std::vector<double> render_template(const SpeakerTemplate& voice, std::size_t num_samples,
                                    int sample_rate) {
  std::vector<double> out(num_samples, 0.0);
  const double top = highest_partial_hz(sample_rate);
  for (int k = 1; k * voice.f0_hz < top; ++k) {
    const double freq = k * voice.f0_hz;
    const double amp = partial_amplitude(voice, freq, k);
    for (std::size_t i = 0; i < num_samples; ++i) {
      out[i] += amp * std::sin(kTwoPi * freq * static_cast<double>(i) / sample_rate);
    }
  }
  return out;
}

AudioClip synthesize_utterance(const SpeakerTemplate& voice, std::uint64_t seed,
                               double duration_s, int sample_rate) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));

  SpeakerTemplate v = voice;
  v.f0_hz *= 1.0 + 0.03 * rng.normal();
  for (double& f : v.formant_hz) f *= 1.0 + 0.03 * rng.normal();
  const double vib_rate = rng.uniform(4.0, 7.0);
  const double vib_depth = rng.uniform(0.005, 0.015);
  const double vib_phase = rng.uniform(0.0, kTwoPi);

  const double top = highest_partial_hz(sample_rate);
  std::vector<std::complex<double>> partials;  // amplitude * e^{i phase}
  for (int k = 1; k * v.f0_hz < top; ++k) {
    partials.push_back(std::polar(partial_amplitude(v, k * v.f0_hz, k),
                                  rng.uniform(0.0, kTwoPi)));
  }

  // Syllable-like on/off envelope with raised-cosine edges.
  std::vector<double> env(n, 0.0);
  double t = rng.uniform(0.02, 0.08);
  while (t < duration_s) {
    const double len = rng.uniform(0.12, 0.30);
    const double level = rng.uniform(0.6, 1.0);
    const auto a = static_cast<std::size_t>(t * sample_rate);
    const auto b = std::min(n, static_cast<std::size_t>((t + len) * sample_rate));
    for (std::size_t i = a; i < b; ++i) {
      const double u = static_cast<double>(i - a) / static_cast<double>(b - a);
      env[i] = level * 0.5 * (1.0 - std::cos(kTwoPi * u));
    }
    t += len + rng.uniform(0.04, 0.12);
  }

  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) / sample_rate;
    const double inst_f0 = v.f0_hz * (1.0 + vib_depth * std::sin(kTwoPi * vib_rate * time + vib_phase));
    const std::complex<double> step = std::polar(1.0, kTwoPi * inst_f0 / sample_rate);
    std::complex<double> rot = step;
    double acc = 0.0;
    for (auto& p : partials) {
      acc += p.imag();
      p *= rot;
      rot *= step;
    }
    out[i] = env[i] * acc;
    if ((i & 1023) == 1023) {
      // Re-project onto the original magnitudes to stop rounding drift.
      std::size_t k = 1;
      for (auto& p : partials) {
        p = std::polar(partial_amplitude(v, static_cast<double>(k) * v.f0_hz, static_cast<int>(k)),
                       std::arg(p));
        ++k;
      }
    }
  }
  normalize_rms(out, 0.1 * rng.uniform(0.7, 1.4));
  return AudioClip(std::move(out), sample_rate);
}

Manifest ToyCorpus::manifest() const {
  Manifest m;
  m.num_noise_classes = noise_bank.empty() ? 1 : noise_class_count(noise_bank);
  for (const auto& u : utterances) m.records.push_back(u.record);
  return m;
}

ToyCorpus generate_toy_corpus(const ToyCorpusConfig& config) {
  if (config.n_speakers < 2 || config.utts_per_speaker < 2 || config.n_noise_types < 2) {
    throw Error("toy corpus needs at least 2 speakers, 2 utterances and 2 noise types");
  }
  if (config.duration_s < 0.5) throw Error("toy corpus duration must be at least 0.5 s");
  if (config.sample_rate <= 0) throw Error("sample rate must be positive");

  ToyCorpus corpus;
  for (int s = 0; s < config.n_speakers; ++s) {
    const std::string spk = numbered("spk", s, 2);
    const SpeakerTemplate voice = make_speaker_template(config.seed, spk);
    for (int u = 0; u < config.utts_per_speaker; ++u) {
      UtteranceRecord rec;
      rec.utt_id = spk + "-" + numbered("utt", u, 3);
      rec.speaker_id = spk;
      rec.audio_path = "clean/" + rec.utt_id + ".wav";
      AudioClip audio = synthesize_utterance(voice, derive_seed(config.seed, "utt/" + rec.utt_id),
                                             config.duration_s, config.sample_rate);
      corpus.utterances.push_back({std::move(rec), std::move(audio)});
    }
  }

  const double noise_s = std::max(8.0, 4.0 * config.duration_s);
  const auto noise_len = static_cast<std::size_t>(std::llround(noise_s * config.sample_rate));
  for (int k = 1; k <= config.n_noise_types; ++k) {
    std::string name;
    AudioClip clip = make_noise(k, noise_len, config.sample_rate,
                                derive_seed(config.seed, "noise/" + std::to_string(k)), &name);
    corpus.noise_bank.emplace(k, NoiseType{name, std::move(clip)});
  }
  return corpus;
}

Manifest write_clean_audio(const std::filesystem::path& dir, const ToyCorpus& corpus,
                           WavEncoding encoding) {
  std::filesystem::create_directories(dir / "clean");
  Manifest m = corpus.manifest();
  m.base_dir = dir;
  for (const auto& u : corpus.utterances) write_wav(dir / u.record.audio_path, u.audio, encoding);
  return m;
}

TrialList make_trials(const Manifest& manifest, int trials_per_speaker, std::uint64_t seed) {
  if (trials_per_speaker < 1) throw Error("trials_per_speaker must be positive");
  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& r : manifest.records) by_speaker[r.speaker_id].push_back(r.utt_id);
  if (by_speaker.size() < 2) throw Error("trials need at least two speakers");
  for (const auto& [spk, utts] : by_speaker) {
    if (utts.size() < 2) throw Error("speaker '" + spk + "' has fewer than 2 utterances");
  }
  std::vector<std::string> speakers;
  for (const auto& [spk, utts] : by_speaker) speakers.push_back(spk);

  Rng rng(derive_seed(seed, "trials"));
  TrialList list;
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    const auto& own = by_speaker[speakers[s]];
    for (int i = 0; i < trials_per_speaker; ++i) {
      const auto a = rng.uniform_index(own.size());
      auto b = rng.uniform_index(own.size() - 1);
      if (b >= a) ++b;
      list.trials.push_back({own[a], own[b], true});
    }
    for (int i = 0; i < trials_per_speaker; ++i) {
      const auto& enroll = own[rng.uniform_index(own.size())];
      auto o = rng.uniform_index(speakers.size() - 1);
      if (o >= s) ++o;
      const auto& other = by_speaker[speakers[o]];
      list.trials.push_back({enroll, other[rng.uniform_index(other.size())], false});
    }
  }
  return list;
}

ManifestSplit split_by_utterance(const Manifest& manifest, double train_fraction,
                                 double dev_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || dev_fraction < 0.0 || train_fraction + dev_fraction >= 1.0) {
    throw Error("invalid split fractions");
  }
  std::map<std::string, std::vector<const UtteranceRecord*>> by_speaker;
  for (const auto& r : manifest.records) by_speaker[r.speaker_id].push_back(&r);

  ManifestSplit split;
  for (Manifest* m : {&split.train, &split.dev, &split.test}) {
    m->num_noise_classes = manifest.num_noise_classes;
    m->base_dir = manifest.base_dir;
  }
  for (auto& [spk, recs] : by_speaker) {
    Rng rng(derive_seed(seed, "split/" + spk));
    for (std::size_t i = recs.size(); i > 1; --i) {
      std::swap(recs[i - 1], recs[rng.uniform_index(i)]);
    }
    const auto n = static_cast<double>(recs.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * train_fraction));
    const auto n_dev = static_cast<std::size_t>(std::llround(n * dev_fraction));
    if (n_train + n_dev >= recs.size()) throw Error("split leaves no test utterances for " + spk);
    std::sort(recs.begin(), recs.begin() + n_train,
              [](auto* a, auto* b) { return a->utt_id < b->utt_id; });
    std::sort(recs.begin() + n_train, recs.begin() + n_train + n_dev,
              [](auto* a, auto* b) { return a->utt_id < b->utt_id; });
    std::sort(recs.begin() + n_train + n_dev, recs.end(),
              [](auto* a, auto* b) { return a->utt_id < b->utt_id; });
    for (std::size_t i = 0; i < recs.size(); ++i) {
      Manifest& dst = i < n_train ? split.train : (i < n_train + n_dev ? split.dev : split.test);
      dst.records.push_back(*recs[i]);
    }
  }
  return split;
}

}  // namespace mtan::corpus
