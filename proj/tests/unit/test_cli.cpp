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

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "mtan/cli/commands.hpp"
#include "support/temp_dir.hpp"

namespace mtan::cli {
namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::vector<std::string> small_toy(const fs::path& out) {
  return {"gen-toy", "--out", out.string(), "--speakers", "3", "--utts", "10",
          "--noise-types", "2", "--duration", "0.5", "--trials-per-speaker", "4"};
}

TEST(Cli, HelpSucceeds) {
  const Outcome o = call({"--help"});
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("gen-toy"), std::string::npos);
  EXPECT_NE(o.out.find("selfcheck"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwoWithJsonLine) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"frobnicate"},
           {"gen-toy"},
           {"train", "--data", "/nonexistent", "--variant", "al", "--out", "/tmp/x"},
           {"train", "--data", "/tmp", "--variant", "gan", "--out", "/tmp/x"}}) {
    const Outcome o = call(args);
    if (args.empty()) {
      EXPECT_NE(o.code, 1);
      continue;
    }
    EXPECT_EQ(o.code, 2) << args.front();
    EXPECT_EQ(o.err.rfind("{\"error\":\"usage\"", 0), 0u) << o.err;
    EXPECT_EQ(o.err.back(), '\n');
  }
}

TEST(Cli, OutputRules) {
  mtan::testing::TempDir dir;
  EXPECT_EQ(call(small_toy(dir / "missing" / "corpus")).code, 2);
  ASSERT_EQ(call(small_toy(dir / "corpus")).code, 0);
  const Outcome again = call(small_toy(dir / "corpus"));
  EXPECT_EQ(again.code, 2);
  EXPECT_NE(again.err.find("--force"), std::string::npos);
  auto forced = small_toy(dir / "corpus");
  forced.push_back("--force");
  EXPECT_EQ(call(forced).code, 0);
  EXPECT_FALSE(fs::exists(dir / ".corpus.partial"));
}

TEST(Cli, GenToyIsDeterministic) {
  mtan::testing::TempDir dir;
  ASSERT_EQ(call(small_toy(dir / "a")).code, 0);
  ASSERT_EQ(call(small_toy(dir / "b")).code, 0);
  for (const char* f : {"manifest.tsv", "train.tsv", "test_trials.tsv", "noise/noise_bank.tsv"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  for (const auto& e : fs::directory_iterator(dir / "a" / "clean")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / "clean" / e.path().filename())) << e.path();
  }
  auto other = small_toy(dir / "c");
  other.insert(other.end(), {"--seed", "99"});
  ASSERT_EQ(call(other).code, 0);
  EXPECT_NE(slurp(dir / "a" / "clean" / "spk00-utt000.wav"), slurp(dir / "c" / "clean" / "spk00-utt000.wav"));
}

TEST(Cli, RuntimeFailureExitsOne) {
  mtan::testing::TempDir dir;
  ASSERT_EQ(call(small_toy(dir / "corpus")).code, 0);
  std::ofstream(dir / "corpus" / "train.tsv") << "not a manifest\n";
  const Outcome o = call({"prepare", "--corpus", (dir / "corpus").string(), "--out", (dir / "data").string()});
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(o.err.rfind("{\"error\":\"runtime\"", 0), 0u) << o.err;
  EXPECT_FALSE(fs::exists(dir / "data"));
}

}  // namespace
}  // namespace mtan::cli
