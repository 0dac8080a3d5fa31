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
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mtan/corpus/manifest.hpp"
#include "mtan/features/archive.hpp"
#include "mtan/model/mtan.hpp"

namespace mtan::eval {

struct EmbeddingSet {
  std::map<std::string, std::vector<double>> vectors;
  std::set<std::string> missing;  // utterances without usable frames
  std::string model_id;
  std::string config_hash;

  int dim() const;
  const std::vector<double>& at(const std::string& utt_id) const;
  /// Throws unless all vectors share one dimension and are finite.
  void validate() const;
};

/// Inference-mode embedding of every manifest utterance over all of its
/// frames. Utterances absent from the store or with no frames are listed as
/// missing rather than failing the extraction.
EmbeddingSet extract_embeddings(model::MtanParams& params, const corpus::Manifest& manifest,
                                const features::FeatureStore& store,
                                const std::string& model_id = {});

/// Stored as a feature archive with one frame per utterance; missing ids,
/// model id and config hash live in the index metadata.
void write_embeddings(const std::filesystem::path& ark_path, const EmbeddingSet& set);
EmbeddingSet read_embeddings(const std::filesystem::path& ark_path);

/// Hex digest of the model configuration and feature settings.
std::string extraction_config_hash(const model::ModelConfig& config);

}  // namespace mtan::eval
