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

#include "mtan/eval/embeddings.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mtan/common/error.hpp"
#include "mtan/features/mfcc.hpp"

namespace mtan::eval {

int EmbeddingSet::dim() const {
  return vectors.empty() ? 0 : static_cast<int>(vectors.begin()->second.size());
}

const std::vector<double>& EmbeddingSet::at(const std::string& utt_id) const {
  const auto it = vectors.find(utt_id);
  if (it != vectors.end()) return it->second;
  if (missing.count(utt_id)) throw Error("utterance '" + utt_id + "' has no embedding (no voiced frames)");
  throw Error("unknown utterance '" + utt_id + "' in embedding set");
}

void EmbeddingSet::validate() const {
  const int n = dim();
  for (const auto& [id, v] : vectors) {
    if (static_cast<int>(v.size()) != n) throw Error("embedding dimensions differ");
    for (double x : v) {
      if (!std::isfinite(x)) throw NumericError("non-finite embedding for '" + id + "'");
    }
  }
}

EmbeddingSet extract_embeddings(model::MtanParams& params, const corpus::Manifest& manifest,
                                const features::FeatureStore& store, const std::string& model_id) {
  EmbeddingSet out;
  out.model_id = model_id;
  out.config_hash = extraction_config_hash(params.config);
  for (const auto& rec : manifest.records) {
    if (!store.contains(rec.utt_id) || store.at(rec.utt_id).num_frames() == 0) {
      out.missing.insert(rec.utt_id);
      continue;
    }
    const auto& f = store.at(rec.utt_id);
    nn::Tensor x(nn::Shape{1, f.num_frames(), f.dim()}, f.values());
    const nn::Matrix e = model::embed(params, x);
    out.vectors[rec.utt_id].assign(e.data(), e.data() + e.size());
  }
  out.validate();
  return out;
}

void write_embeddings(const std::filesystem::path& ark_path, const EmbeddingSet& set) {
  std::vector<std::pair<std::string, features::FeatureMatrix>> records;
  for (const auto& [id, v] : set.vectors) {
    records.emplace_back(id, features::FeatureMatrix(1, static_cast<int>(v.size()), v));
  }
  std::string missing;
  for (const auto& id : set.missing) missing += (missing.empty() ? "" : ",") + id;
  write_feature_archive(ark_path, records,
                        {{"kind", "embeddings"},
                         {"model_id", set.model_id},
                         {"config_hash", set.config_hash},
                         {"missing", missing}});
}

EmbeddingSet read_embeddings(const std::filesystem::path& ark_path) {
  const features::FeatureStore store = features::read_feature_archive(ark_path);
  const auto meta = [&](const std::string& key) {
    const auto it = store.meta.find(key);
    return it == store.meta.end() ? std::string() : it->second;
  };
  if (meta("kind") != "embeddings") throw FormatError(ark_path.string() + " is not an embedding archive");
  EmbeddingSet out;
  out.model_id = meta("model_id");
  out.config_hash = meta("config_hash");
  std::istringstream missing(meta("missing"));
  for (std::string id; std::getline(missing, id, ',');) {
    if (!id.empty()) out.missing.insert(id);
  }
  for (const auto& [id, f] : store.entries) {
    if (f.num_frames() != 1) throw FormatError("embedding record '" + id + "' has more than one row");
    out.vectors[id] = f.values();
  }
  out.validate();
  return out;
}

std::string extraction_config_hash(const model::ModelConfig& c) {
  std::ostringstream os;
  os << "m=" << c.feature_dim << ";conv=" << c.conv_layers << "x" << c.conv_channels << ";fc=";
  for (int d : c.fc_dims) os << d << ",";
  os << ";spk=" << c.num_speakers << ";noise=" << c.num_noise_classes
     << ";mfcc=" << features::kNumFilters << "/" << features::kNumCeps << ";vad=energy";
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(derive_seed(0, os.str())));
  return buf;
}

}  // namespace mtan::eval
