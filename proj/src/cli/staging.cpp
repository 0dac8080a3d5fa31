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

#include "staging.hpp"

#include <system_error>

#include "mtan/cli/commands.hpp"

namespace mtan::cli {

namespace {

void check_target(const fs::path& target, bool force) {
  if (target.empty()) throw UsageError("output path is empty");
  const fs::path parent = fs::absolute(target).parent_path();
  if (!fs::is_directory(parent)) {
    throw UsageError("output parent directory does not exist: " + parent.string());
  }
  if (fs::exists(target) && !force) {
    throw UsageError("output exists (use --force to overwrite): " + target.string());
  }
}

fs::path sibling(const fs::path& target) {
  const fs::path abs = fs::absolute(target);
  return abs.parent_path() / ("." + abs.filename().string() + ".partial");
}

}  // namespace

StagedDir::StagedDir(fs::path target, bool force) : target_(std::move(target)) {
  check_target(target_, force);
  tmp_ = sibling(target_);
  fs::remove_all(tmp_);
  fs::create_directories(tmp_);
}

StagedDir::~StagedDir() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(tmp_, ec);
  }
}

void StagedDir::commit() {
  fs::remove_all(target_);
  fs::rename(tmp_, target_);
  committed_ = true;
}

fs::path staged_file(const fs::path& target, bool force) {
  check_target(target, force);
  return sibling(target);
}

void commit_file(const fs::path& tmp, const fs::path& target) {
  fs::remove_all(target);
  fs::rename(tmp, target);
}

}  // namespace mtan::cli
