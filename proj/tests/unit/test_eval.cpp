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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "mtan/common/error.hpp"
#include "mtan/common/random.hpp"
#include "mtan/eval/eer.hpp"
#include "mtan/eval/embeddings.hpp"
#include "mtan/eval/fusion.hpp"
#include "mtan/eval/probe.hpp"
#include "mtan/eval/report.hpp"
#include "mtan/eval/scoring.hpp"
#include "support/eer_oracle.hpp"
#include "support/temp_dir.hpp"

namespace mtan::eval {
namespace {

using corpus::Trial;

ScoreSet make_scores(const std::vector<double>& tar, const std::vector<double>& non) {
  ScoreSet s;
  int i = 0;
  for (double x : tar) {
    s.trials.push_back(Trial{"e" + std::to_string(i), "t" + std::to_string(i), true});
    s.scores.push_back(x);
    ++i;
  }
  for (double x : non) {
    s.trials.push_back(Trial{"e" + std::to_string(i), "t" + std::to_string(i), false});
    s.scores.push_back(x);
    ++i;
  }
  return s;
}

TEST(Cosine, ClosedForms) {
  const std::vector<double> v{1.0, -2.0, 3.0}, w{-1.0, 2.0, -3.0};
  EXPECT_NEAR(cosine_score(v, v), 1.0, 1e-15);
  EXPECT_NEAR(cosine_score(v, w), -1.0, 1e-15);
  EXPECT_EQ(cosine_score(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_THROW(cosine_score(std::vector<double>{0, 0}, std::vector<double>{0, 1}), Error);
  EXPECT_THROW(cosine_score(std::vector<double>{1}, std::vector<double>{0, 1}), Error);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(17), b(17), a2(17);
    for (int i = 0; i < 17; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      a2[i] = 2.0 * a[i];
    }
    EXPECT_EQ(cosine_score(a, b), cosine_score(b, a));
    EXPECT_NEAR(cosine_score(a2, b), cosine_score(a, b), 1e-12);
    EXPECT_LE(std::abs(cosine_score(a, b)), 1.0);
  }
}

TEST(Eer, HandComputedCases) {
  EXPECT_EQ(compute_eer(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2}).eer, 0.0);
  const EerResult third = compute_eer(std::vector<double>{0.9, 0.8, 0.2}, std::vector<double>{0.7, 0.1, 0.1});
  EXPECT_NEAR(third.eer, 1.0 / 3.0, 1e-15);
  EXPECT_GT(third.threshold, 0.2);
  EXPECT_LE(third.threshold, 0.7);
  EXPECT_EQ(compute_eer(std::vector<double>{0.1, 0.2}, std::vector<double>{0.8, 0.9}).eer, 1.0);
  EXPECT_NEAR(compute_eer(std::vector<double>{0.5}, std::vector<double>{0.5}).eer, 0.5, 1e-15);
  EXPECT_THROW(compute_eer(std::vector<double>{}, std::vector<double>{0.5}), Error);
  EXPECT_THROW(compute_eer(std::vector<double>{NAN}, std::vector<double>{0.5}), NumericError);
}

TEST(Eer, SeparatedThresholdAcceptsAllTargets) {
  const EerResult r = compute_eer(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2});
  EXPECT_GT(r.threshold, 0.2);
  EXPECT_LE(r.threshold, 0.8);
}

TEST(Eer, MatchesMidpointOracleOnRandomSets) {
  Rng rng(2024);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int nt = 2 + static_cast<int>(rng.uniform_index(499));
    const int nn = 2 + static_cast<int>(rng.uniform_index(499));
    const bool ties = rep % 2 == 0;
    const double shift = rng.uniform(-1.0, 3.0);
    auto draw = [&](double mu) {
      const double x = mu + rng.normal();
      return ties ? std::round(x * 4.0) / 4.0 : x;
    };
    std::vector<double> tar(nt), non(nn);
    for (auto& x : tar) x = draw(shift);
    for (auto& x : non) x = draw(0.0);
    worst = std::max(worst, std::abs(compute_eer(tar, non).eer - mtan::testing::oracle_eer(tar, non)));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Eer, InvariantUnderIncreasingMaps) {
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> tar(40), non(60);
    for (auto& x : tar) x = 0.7 + rng.normal();
    for (auto& x : non) x = rng.normal();
    const double base = compute_eer(tar, non).eer;
    auto map = [](std::vector<double> v, auto f) {
      for (auto& x : v) x = f(x);
      return v;
    };
    const auto ex = [](double x) { return std::exp(x); };
    const auto af = [](double x) { return 3.0 * x - 7.0; };
    EXPECT_NEAR(compute_eer(map(tar, ex), map(non, ex)).eer, base, 1e-12);
    EXPECT_NEAR(compute_eer(map(tar, af), map(non, af)).eer, base, 1e-12);
  }
}

TEST(Eer, SwappingRolesOnMirroredSetKeepsEer) {
  Rng rng(6);
  std::vector<double> tar(50), non(50);
  for (int i = 0; i < 50; ++i) {
    tar[i] = 0.5 + rng.normal();
    non[i] = -tar[i];
  }
  std::vector<double> ntar(50), nnon(50);
  for (int i = 0; i < 50; ++i) {
    ntar[i] = -non[i];
    nnon[i] = -tar[i];
  }
  EXPECT_NEAR(compute_eer(tar, non).eer, compute_eer(ntar, nnon).eer, 1e-12);
}

TEST(Eer, ScoreSetOverloadSplitsByLabel) {
  const ScoreSet s = make_scores({0.9, 0.8, 0.2}, {0.7, 0.1, 0.1});
  EXPECT_NEAR(compute_eer(s).eer, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(s.target_scores(), (std::vector<double>{0.9, 0.8, 0.2}));
}

class FusionTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(7);
    std::vector<double> tar, non;
    for (int i = 0; i < 200; ++i) (i % 3 == 0 ? tar : non).push_back(0.0);
    perfect = make_scores(std::vector<double>(tar.size(), 1.0), std::vector<double>(non.size(), 0.0));
    random = perfect;
    for (auto& x : random.scores) x = rng.normal();
  }
  ScoreSet perfect, random;
};

TEST_F(FusionTest, PerfectSystemTakesAllWeight) {
  const FusionWeights w = fit_fusion({perfect, random});
  EXPECT_FALSE(w.rank_deficient);
  EXPECT_NEAR(w.weights[0], 1.0, 1e-8);
  EXPECT_LT(std::abs(w.weights[1]), 1e-6);
  EXPECT_NEAR(w.bias, 0.0, 1e-8);
  const ScoreSet fused = apply_fusion(w, {perfect, random});
  double worst = 0.0;
  for (std::size_t i = 0; i < fused.scores.size(); ++i) {
    worst = std::max(worst, std::abs(fused.scores[i] - (perfect.trials[i].is_target ? 1.0 : 0.0)));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST_F(FusionTest, ResidualsOrthogonalToColumns) {
  Rng rng(8);
  ScoreSet a = random, b = random;
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    const double y = a.trials[i].is_target ? 1.0 : 0.0;
    a.scores[i] = y + 0.8 * rng.normal();
    b.scores[i] = 2.0 * y + 1.5 * rng.normal() + 4.0;
  }
  const FusionWeights w = fit_fusion({a, b});
  const ScoreSet fused = apply_fusion(w, {a, b});
  double ra = 0.0, rb = 0.0, r1 = 0.0;
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    const double r = (a.trials[i].is_target ? 1.0 : 0.0) - fused.scores[i];
    ra += r * a.scores[i];
    rb += r * b.scores[i];
    r1 += r;
  }
  EXPECT_LT(std::abs(ra), 1e-8);
  EXPECT_LT(std::abs(rb), 1e-8);
  EXPECT_LT(std::abs(r1), 1e-8);
}

TEST_F(FusionTest, IdenticalSystemsAreRankDeficient) {
  const FusionWeights w = fit_fusion({random, random});
  EXPECT_TRUE(w.rank_deficient);
  EXPECT_NEAR(w.weights[0], w.weights[1], 1e-10);
  const ScoreSet fused = apply_fusion(w, {random, random});
  if (w.weights[0] > 0) {
    EXPECT_NEAR(compute_eer(fused).eer, compute_eer(random).eer, 1e-12);
  } else {
    EXPECT_NEAR(compute_eer(fused).eer, 1.0 - compute_eer(random).eer, 0.05);
  }
}

TEST_F(FusionTest, ApplyExamplesAndCoverage) {
  const ScoreSet sys1 = apply_fusion(FusionWeights{{1.0, 0.0}, 0.0, false}, {random, perfect});
  EXPECT_EQ(sys1.scores, random.scores);
  const ScoreSet half = apply_fusion(FusionWeights{{0.5, 0.5}, 0.0, false}, {random, random});
  EXPECT_EQ(half.scores, random.scores);
  ScoreSet shifted = random;
  std::swap(shifted.trials[0], shifted.trials[1]);
  EXPECT_THROW(fit_fusion({random, shifted}), Error);
  EXPECT_THROW(apply_fusion(FusionWeights{{1.0}, 0.0, false}, {random, perfect}), Error);
}

TEST_F(FusionTest, WeightsFileRoundTrip) {
  mtan::testing::TempDir dir;
  const FusionWeights w{{0.1 + 0.2, -1e-300}, 1.0 / 3.0, true};
  write_fusion_weights(dir / "w.tsv", w);
  const FusionWeights r = read_fusion_weights(dir / "w.tsv");
  EXPECT_EQ(r.weights, w.weights);
  EXPECT_EQ(r.bias, w.bias);
  EXPECT_EQ(r.rank_deficient, true);
}

TEST(Probe, OneHotLabelsAreRecovered) {
  const int n = 200, m = 4;
  nn::Matrix x = nn::Matrix::Zero(n, m);
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (int i = 0; i < n; ++i) {
    labels.push_back(i % m);
    x(i, i % m) = 1.0;
    groups.push_back("g" + std::to_string(i));
  }
  const ProbeResult r = noise_probe(x, labels, groups, m);
  EXPECT_GE(r.test_accuracy, 0.99);
  EXPECT_EQ(r.chance, 0.25);
  EXPECT_EQ(r.train_size + r.test_size, static_cast<std::size_t>(n));
  EXPECT_NEAR(static_cast<double>(r.test_size) / n, 0.3, 0.1);
}

TEST(Probe, ConstantEmbeddingsGiveChance) {
  const int n = 400, m = 4;
  nn::Matrix x = nn::Matrix::Constant(n, 8, 0.7);
  std::vector<int> labels;
  std::vector<std::string> groups;
  Rng rng(3);
  for (int i = 0; i < n; ++i) {
    labels.push_back(static_cast<int>(rng.uniform_index(m)));
    groups.push_back("g" + std::to_string(i));
  }
  const ProbeResult r = noise_probe(x, labels, groups, m);
  EXPECT_NEAR(r.test_accuracy, 0.25, 0.1);
}

TEST(Probe, GroupsStayOnOneSide) {
  const int n = 120, m = 3;
  Rng rng(4);
  nn::Matrix x(n, 5);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (int i = 0; i < n; ++i) {
    labels.push_back(i % m);
    groups.push_back("u" + std::to_string(i / m));
  }
  // All rows of a group share a vector: a leak across the split would let
  // the probe memorize test rows.
  for (int i = 0; i < n; ++i) x.row(i) = x.row((i / m) * m);
  const ProbeResult r = noise_probe(x, labels, groups, m);
  EXPECT_EQ(r.test_size % m, 0u);
  EXPECT_LT(r.test_accuracy, 0.6);
  std::vector<std::string> one(n, "same");
  EXPECT_THROW(noise_probe(x, labels, one, m), Error);
  EXPECT_THROW(noise_probe(x, std::vector<int>(n, 0), groups, 1), Error);
}

TEST(Report, SummaryRowsAndMean) {
  std::vector<EerRow> rows{{"clean", "clean", std::nullopt, 0.5, 0.1, 10},
                           {"white_0dB", "white", 0.0, 0.3, 0.1, 10},
                           {"white_5dB", "white", 5.0, 0.1, 0.1, 10},
                           {"babble_0dB", "babble", 0.0, 0.2, 0.1, 10}};
  EXPECT_NEAR(mean_noisy_eer(rows), 0.2, 1e-15);
  const auto all = with_summary_rows(rows);
  ASSERT_EQ(all.size(), 7u);
  std::map<std::string, double> means;
  for (const auto& r : all) {
    if (r.condition == "mean") {
      EXPECT_FALSE(r.snr_db.has_value());
      means[r.noise] = r.eer;
    }
  }
  EXPECT_NEAR(means.at("white"), 0.2, 1e-15);
  EXPECT_NEAR(means.at("babble"), 0.2, 1e-15);
  EXPECT_NEAR(means.at("noisy"), 0.2, 1e-15);
  EXPECT_EQ(means.count("clean"), 0u);
}

TEST(Report, FileRoundTrip) {
  mtan::testing::TempDir dir;
  const auto rows = with_summary_rows({{"clean", "clean", std::nullopt, 1.0 / 3.0, -0.25, 400},
                                       {"white_5dB", "white", 5.0, 0.1, 0.75, 400}});
  write_eer_report(dir / "r.tsv", rows);
  std::ifstream is(dir / "r.tsv");
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header.rfind("#mtan-eer v1", 0), 0u);
  const auto back = read_eer_report(dir / "r.tsv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].condition, rows[i].condition);
    EXPECT_EQ(back[i].noise, rows[i].noise);
    EXPECT_EQ(back[i].snr_db, rows[i].snr_db);
    EXPECT_NEAR(back[i].eer, rows[i].eer, 1e-15);
    EXPECT_EQ(back[i].threshold, rows[i].threshold);
    EXPECT_EQ(back[i].trials, rows[i].trials);
  }
}

class EmbeddingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    config.num_speakers = 2;
    config.num_noise_classes = 2;
    config.conv_channels = 8;
    config.fc_dims = {6, 12};
    params = model::init_params(config, 3);
    Rng rng(4);
    for (int u = 0; u < 4; ++u) {
      const std::string id = "u" + std::to_string(u);
      manifest.records.push_back({id, u < 2 ? "a" : "b", 0, std::nullopt, id + ".wav", ""});
      if (u == 3) continue;
      features::FeatureMatrix f(20 + u, 23);
      for (int t = 0; t < f.num_frames(); ++t) {
        for (auto& v : f.row(t)) v = rng.normal();
      }
      store.entries[id] = f;
    }
  }
  model::ModelConfig config;
  model::MtanParams params;
  corpus::Manifest manifest;
  features::FeatureStore store;
};

TEST_F(EmbeddingTest, ExtractsFullLengthVectorsAndListsMissing) {
  const EmbeddingSet e = extract_embeddings(params, manifest, store, "m1");
  EXPECT_EQ(e.dim(), 12);
  EXPECT_EQ(e.vectors.size(), 3u);
  EXPECT_EQ(e.missing, std::set<std::string>{"u3"});
  EXPECT_EQ(e.model_id, "m1");
  EXPECT_EQ(e.config_hash, extraction_config_hash(config));
  EXPECT_NO_THROW(e.validate());

  const EmbeddingSet again = extract_embeddings(params, manifest, store, "m1");
  EXPECT_EQ(again.at("u0"), e.at("u0"));

  // Inference mode uses running statistics, so a one-row batch matches.
  nn::Tensor x(nn::Shape{1, 20, 23});
  for (int t = 0; t < 20; ++t) {
    for (int d = 0; d < 23; ++d) x.mat()(t, d) = store.at("u0").at(t, d);
  }
  const nn::Matrix direct = model::embed(params, x);
  for (int j = 0; j < 12; ++j) EXPECT_EQ(direct(0, j), e.at("u0")[j]);

  nn::Tensor crop(nn::Shape{1, 10, 23});
  for (int t = 0; t < 10; ++t) {
    for (int d = 0; d < 23; ++d) crop.mat()(t, d) = store.at("u0").at(t, d);
  }
  const nn::Matrix cropped = model::embed(params, crop);
  bool differs = false;
  for (int j = 0; j < 12; ++j) differs |= cropped(0, j) != e.at("u0")[j];
  EXPECT_TRUE(differs);
}

TEST_F(EmbeddingTest, ScoringAndFileRoundTrips) {
  mtan::testing::TempDir dir;
  const EmbeddingSet e = extract_embeddings(params, manifest, store, "m1");
  write_embeddings(dir / "e.ark", e);
  const EmbeddingSet r = read_embeddings(dir / "e.ark");
  EXPECT_EQ(r.missing, e.missing);
  EXPECT_EQ(r.model_id, "m1");
  EXPECT_EQ(r.config_hash, e.config_hash);
  for (const auto& [id, v] : e.vectors) {
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_EQ(r.at(id)[j], static_cast<double>(static_cast<float>(v[j])));
  }

  corpus::TrialList trials;
  trials.trials = {{"u0", "u1", true}, {"u0", "u2", false}};
  const ScoreSet s = score_trials(e, trials);
  EXPECT_EQ(s.scores[0], cosine_score(e.at("u0"), e.at("u1")));
  write_scores(dir / "s.tsv", s);
  const ScoreSet back = read_scores(dir / "s.tsv");
  EXPECT_EQ(back.scores, s.scores);
  EXPECT_EQ(back.trials, s.trials);

  trials.trials.push_back({"u0", "u3", false});
  EXPECT_THROW(score_trials(e, trials), Error);
}

TEST(ConfigHash, DependsOnModelShape) {
  model::ModelConfig a, b;
  b.fc_dims = {256, 512};
  EXPECT_EQ(extraction_config_hash(a), extraction_config_hash(model::ModelConfig{}));
  EXPECT_NE(extraction_config_hash(a), extraction_config_hash(b));
}

}  // namespace
}  // namespace mtan::eval
