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
#include <string>
#include <utility>
#include <vector>

#include "mtan/features/mfcc.hpp"

namespace mtan::features {

/// Per-utterance matrices keyed by utt_id, plus free-form metadata.
struct FeatureStore {
  std::map<std::string, FeatureMatrix> entries;
  std::map<std::string, std::string> meta;

  const FeatureMatrix& at(const std::string& utt_id) const;
  bool contains(const std::string& utt_id) const { return entries.count(utt_id) != 0; }
};

/// Binary archive of concatenated records, each
///   u32 id_length | id bytes | u32 t | u32 m | t*m float32 (row-major)
/// all little-endian, with a text index `<ark>.idx`:
///   #mtan-feat-index v1
///   #meta<TAB>key<TAB>value      (optional, repeated)
///   utt_id<TAB>byte_offset<TAB>t<TAB>m
/// Records are written in the order given.
void write_feature_archive(const std::filesystem::path& ark_path,
                           const std::vector<std::pair<std::string, FeatureMatrix>>& records,
                           const std::map<std::string, std::string>& meta = {});

FeatureStore read_feature_archive(const std::filesystem::path& ark_path);

std::filesystem::path index_path(const std::filesystem::path& ark_path);

}  // namespace mtan::features
