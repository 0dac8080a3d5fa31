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

#include "mtan/features/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mtan/common/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "feature archives assume a little-endian host");

namespace mtan::features {

namespace fs = std::filesystem;

const FeatureMatrix& FeatureStore::at(const std::string& utt_id) const {
  const auto it = entries.find(utt_id);
  if (it == entries.end()) throw Error("no features for utterance '" + utt_id + "'");
  return it->second;
}

fs::path index_path(const fs::path& ark_path) {
  fs::path p = ark_path;
  p += ".idx";
  return p;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(const std::vector<char>& buf, std::size_t at) {
  if (at + 4 > buf.size()) throw FormatError("truncated feature archive");
  std::uint32_t v;
  std::memcpy(&v, buf.data() + at, 4);
  return v;
}

}  // namespace

void write_feature_archive(const fs::path& ark_path,
                           const std::vector<std::pair<std::string, FeatureMatrix>>& records,
                           const std::map<std::string, std::string>& meta) {
  std::ofstream ark(ark_path, std::ios::binary | std::ios::trunc);
  std::ofstream idx(index_path(ark_path), std::ios::trunc);
  if (!ark || !idx) throw Error("cannot write feature archive " + ark_path.string());
  idx << "#mtan-feat-index v1\n";
  for (const auto& [key, value] : meta) idx << "#meta\t" << key << '\t' << value << '\n';
  std::uint64_t offset = 0;
  for (const auto& [utt, m] : records) {
    idx << utt << '\t' << offset << '\t' << m.num_frames() << '\t' << m.dim() << '\n';
    put_u32(ark, static_cast<std::uint32_t>(utt.size()));
    ark.write(utt.data(), static_cast<std::streamsize>(utt.size()));
    put_u32(ark, static_cast<std::uint32_t>(m.num_frames()));
    put_u32(ark, static_cast<std::uint32_t>(m.dim()));
    for (double v : m.values()) {
      const float f = static_cast<float>(v);
      ark.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
    offset += 12 + utt.size() + 4 * m.values().size();
  }
  if (!ark || !idx) throw Error("write failed for " + ark_path.string());
}

FeatureStore read_feature_archive(const fs::path& ark_path) {
  std::ifstream ark(ark_path, std::ios::binary);
  std::ifstream idx(index_path(ark_path));
  if (!ark || !idx) throw Error("cannot open feature archive " + ark_path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(ark)),
                              std::istreambuf_iterator<char>());

  std::string line;
  if (!std::getline(idx, line) || line != "#mtan-feat-index v1") {
    throw FormatError(index_path(ark_path).string() + ": missing index header");
  }
  FeatureStore store;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string tag, key, value;
      std::getline(fields, tag, '\t');
      std::getline(fields, key, '\t');
      std::getline(fields, value);
      if (tag == "#meta") store.meta[key] = value;
      continue;
    }
    std::string utt;
    std::uint64_t offset = 0;
    int t = 0, m = 0;
    std::getline(fields, utt, '\t');
    if (!(fields >> offset >> t >> m)) {
      throw FormatError(index_path(ark_path).string() + ": bad line '" + line + "'");
    }
    const std::uint32_t id_len = get_u32(buf, offset);
    if (offset + 4 + id_len > buf.size() ||
        std::string(buf.data() + offset + 4, id_len) != utt) {
      throw FormatError(ark_path.string() + ": index does not match record for " + utt);
    }
    std::size_t pos = offset + 4 + id_len;
    if (get_u32(buf, pos) != static_cast<std::uint32_t>(t) ||
        get_u32(buf, pos + 4) != static_cast<std::uint32_t>(m)) {
      throw FormatError(ark_path.string() + ": shape mismatch for " + utt);
    }
    pos += 8;
    const std::size_t count = static_cast<std::size_t>(t) * m;
    if (pos + 4 * count > buf.size()) throw FormatError("truncated feature archive");
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, buf.data() + pos + 4 * i, 4);
      values[i] = f;
    }
    store.entries.emplace(utt, FeatureMatrix(t, m, std::move(values)));
  }
  return store;
}

}  // namespace mtan::features
