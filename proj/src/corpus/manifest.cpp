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

#include "mtan/corpus/manifest.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "mtan/common/error.hpp"

namespace mtan::corpus {

namespace {

constexpr const char* kManifestHeader = "#mtan-manifest v1";
constexpr const char* kTrialsHeader = "#mtan-trials v1";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

int parse_int(const std::string& text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("not an integer: '" + text + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("not a number: '" + text + "'");
  }
  return value;
}

std::vector<std::string> Manifest::speakers() const {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.speaker_id);
  return {ids.begin(), ids.end()};
}

std::map<std::string, int> Manifest::speaker_index() const {
  std::map<std::string, int> index;
  int next = 0;
  for (const auto& id : speakers()) index[id] = next++;
  return index;
}

std::filesystem::path Manifest::audio_path(const UtteranceRecord& record) const {
  std::filesystem::path p(record.audio_path);
  return p.is_absolute() ? p : base_dir / p;
}

const UtteranceRecord* Manifest::find(const std::string& utt_id) const {
  for (const auto& r : records) {
    if (r.utt_id == utt_id) return &r;
  }
  return nullptr;
}

void Manifest::validate() const {
  if (num_noise_classes < 1) throw FormatError("manifest needs at least one noise class");
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (r.utt_id.empty() || r.speaker_id.empty()) {
      throw FormatError("manifest record with empty id");
    }
    if (!seen.insert(r.utt_id).second) {
      throw FormatError("duplicate utt_id '" + r.utt_id + "'");
    }
    if (r.noise_label < 0 || r.noise_label >= num_noise_classes) {
      throw FormatError("noise label out of range for '" + r.utt_id + "'");
    }
    if ((r.noise_label == kCleanLabel) == r.snr_db.has_value()) {
      throw FormatError("clean label and SNR disagree for '" + r.utt_id + "'");
    }
  }
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  manifest.validate();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << kManifestHeader << '\n';
  os << "#noise_classes\t" << manifest.num_noise_classes << '\n';
  for (const auto& r : manifest.records) {
    os << r.utt_id << '\t' << r.speaker_id << '\t' << r.noise_label << '\t'
       << (r.snr_db ? format_double(*r.snr_db) : std::string("-")) << '\t'
       << r.audio_path;
    if (!r.comment.empty()) os << '\t' << r.comment;
    os << '\n';
  }
  if (!os) throw Error("write failed for " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kManifestHeader) {
    throw FormatError(path.string() + ": missing manifest header");
  }
  Manifest manifest;
  manifest.base_dir = path.parent_path();
  bool have_classes = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (line[0] == '#') {
      if (fields.size() == 2 && fields[0] == "#noise_classes") {
        manifest.num_noise_classes = parse_int(fields[1]);
        have_classes = true;
      }
      continue;
    }
    if (fields.size() != 5 && fields.size() != 6) {
      throw FormatError(path.string() + ": bad record '" + line + "'");
    }
    UtteranceRecord r;
    r.utt_id = fields[0];
    r.speaker_id = fields[1];
    r.noise_label = parse_int(fields[2]);
    if (fields[3] != "-") r.snr_db = parse_double(fields[3]);
    r.audio_path = fields[4];
    if (fields.size() == 6) r.comment = fields[5];
    manifest.records.push_back(std::move(r));
  }
  if (!have_classes) throw FormatError(path.string() + ": missing #noise_classes line");
  manifest.validate();
  return manifest;
}

std::size_t TrialList::num_targets() const {
  std::size_t n = 0;
  for (const auto& t : trials) n += t.is_target ? 1 : 0;
  return n;
}

void TrialList::validate(const Manifest& manifest) const {
  std::set<std::string> ids;
  for (const auto& r : manifest.records) ids.insert(r.utt_id);
  for (const auto& t : trials) {
    if (!ids.count(t.enroll) || !ids.count(t.test)) {
      throw FormatError("trial references unknown utterance: " + t.enroll + " / " + t.test);
    }
  }
  const std::size_t targets = num_targets();
  if (targets == 0 || targets == trials.size()) {
    throw FormatError("trial list needs at least one target and one nontarget trial");
  }
}

void write_trials(const std::filesystem::path& path, const TrialList& trials) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << kTrialsHeader << '\n';
  for (const auto& t : trials.trials) {
    os << t.enroll << '\t' << t.test << '\t' << (t.is_target ? "target" : "nontarget")
       << '\n';
  }
  if (!os) throw Error("write failed for " + path.string());
}

TrialList read_trials(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kTrialsHeader) {
    throw FormatError(path.string() + ": missing trials header");
  }
  TrialList list;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 || (fields[2] != "target" && fields[2] != "nontarget")) {
      throw FormatError(path.string() + ": bad trial '" + line + "'");
    }
    list.trials.push_back({fields[0], fields[1], fields[2] == "target"});
  }
  return list;
}

}  // namespace mtan::corpus
