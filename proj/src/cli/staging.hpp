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

namespace mtan::cli {

/// Builds an output directory under a sibling temporary name and renames it
/// into place on commit, so a failed command never leaves a partial tree.
class StagedDir {
 public:
  StagedDir(std::filesystem::path target, bool force);
  ~StagedDir();
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  const std::filesystem::path& path() const { return tmp_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path tmp_;
  bool committed_ = false;
};

/// Checks that a single output file may be written (parent exists, no
/// existing file unless forced) and returns its temporary sibling path.
std::filesystem::path staged_file(const std::filesystem::path& target, bool force);
void commit_file(const std::filesystem::path& tmp, const std::filesystem::path& target);

}  // namespace mtan::cli
