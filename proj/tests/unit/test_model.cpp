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

#include <cmath>
#include <fstream>
#include <set>

#include "mtan/common/error.hpp"
#include "mtan/model/mtan.hpp"
#include "mtan/nn/adam.hpp"
#include "mtan/nn/losses.hpp"
#include "support/temp_dir.hpp"

namespace mtan::model {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.num_speakers = 5;
  c.num_noise_classes = 4;
  c.conv_channels = 8;
  c.conv_layers = 2;
  c.fc_dims = {6, 10};
  c.feature_dim = 23;
  return c;
}

Batch random_batch(const ModelConfig& c, int b, int t, std::uint64_t seed) {
  Rng rng(seed);
  Batch batch;
  batch.x = Tensor(nn::Shape{b, t, c.feature_dim});
  for (std::size_t i = 0; i < batch.x.size(); ++i) batch.x.data()[i] = rng.normal();
  for (int i = 0; i < b; ++i) {
    batch.speakers.push_back(i % c.num_speakers);
    batch.noise.push_back(i % c.num_noise_classes);
  }
  return batch;
}

bool all_zero(const ParamStore& s) { return s.grads_all_zero(); }

TEST(Config, FullSizeParameterCount) {
  ModelConfig c;
  c.num_speakers = 10;
  c.num_noise_classes = 4;
  EXPECT_EQ(c.embedding_dim(), 1024);
  // Hand count: conv 23*256+256, then three 256*256+256, each with 2*256 BN
  // scale/shift; fc 256*256+256 and 256*1024+1024 with BN; heads 1024*10+10
  // and 1024*4+4.
  const std::size_t conv = (23 * 256 + 256) + 3 * (256 * 256 + 256) + 4 * 2 * 256;
  const std::size_t fc = (256 * 256 + 256) + 2 * 256 + (256 * 1024 + 1024) + 2 * 1024;
  const std::size_t heads = (1024 * 10 + 10) + (1024 * 4 + 4);
  EXPECT_EQ(expected_parameter_count(c), conv + fc + heads);
  const MtanParams p = init_params(c, 1);
  EXPECT_EQ(p.encoder.trainable_size() + p.classifier.trainable_size() +
                p.discriminator.trainable_size(),
            conv + fc + heads);
}

TEST(Config, ValidationAndVariants) {
  ModelConfig c = small_config();
  c.conv_layers = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(parse_variant("al"), Variant::kAL);
  EXPECT_EQ(parse_variant("fl"), Variant::kFL);
  EXPECT_EQ(parse_variant("none"), Variant::kNone);
  EXPECT_THROW(parse_variant("mix"), Error);
  EXPECT_EQ(variant_name(Variant::kFL), "fl");
  LossWeights w;
  w.gamma = 0.0;
  EXPECT_THROW(w.validate(), Error);
  w.gamma = 1.0;
  w.beta = -1.0;
  EXPECT_THROW(w.validate(), Error);
}

TEST(Structure, BatchNormOnEveryHiddenLayerAndNoneOnHeads) {
  const MtanParams p = init_params(small_config(), 3);
  std::set<std::string> layers;
  for (const auto& [name, param] : p.encoder.entries()) {
    layers.insert(name.substr(0, name.find('.', 4)));
  }
  EXPECT_EQ(layers, (std::set<std::string>{"enc.conv0", "enc.conv1", "enc.fc0", "enc.fc1"}));
  for (const auto& l : layers) {
    for (const char* part : {".bn.gamma", ".bn.beta"}) EXPECT_TRUE(p.encoder.at(l + part).trainable);
    for (const char* part : {".bn.running_mean", ".bn.running_var"}) {
      EXPECT_FALSE(p.encoder.at(l + part).trainable);
    }
  }
  for (const ParamStore* head : {&p.classifier, &p.discriminator}) {
    EXPECT_EQ(head->entries().size(), 2u);
    for (const auto& [name, param] : head->entries()) EXPECT_EQ(name.find(".bn."), std::string::npos);
  }
  EXPECT_EQ(p.classifier.at("cls.W").value.shape(), (nn::Shape{10, 5}));
  EXPECT_EQ(p.discriminator.at("disc.W").value.shape(), (nn::Shape{10, 4}));
}

TEST(Encode, ShapesIncludingSingleFrame) {
  ModelConfig c;
  c.num_speakers = 3;
  c.num_noise_classes = 2;
  MtanParams p = init_params(c, 4);
  const Batch b = random_batch(c, 8, 20, 5);
  EXPECT_EQ(embed(p, b.x).rows(), 8);
  EXPECT_EQ(embed(p, b.x).cols(), 1024);
  const Batch one = random_batch(c, 2, 1, 6);
  EXPECT_EQ(embed(p, one.x).cols(), 1024);
  Tape tape;
  EXPECT_THROW(encode(tape, tape.constant(Tensor(nn::Shape{2, 3, 22})), p, Mode::kInfer, Binding::kFrozen), Error);
}

TEST(Encode, EmbeddingsAreNonNegative) {
  MtanParams p = init_params(small_config(), 7);
  const Matrix e = embed(p, random_batch(small_config(), 4, 6, 8).x);
  EXPECT_GE(e.minCoeff(), 0.0);
}

TEST(Encode, FrameOrderDoesNotMatter) {
  const ModelConfig c = small_config();
  const Batch b = random_batch(c, 3, 7, 9);
  Tensor reversed(b.x.shape());
  for (int i = 0; i < 3; ++i) {
    for (int f = 0; f < 7; ++f) reversed.mat().row(i * 7 + f) = b.x.mat().row(i * 7 + (6 - f));
  }
  for (const Mode mode : {Mode::kInfer, Mode::kTrain}) {
    MtanParams p1 = init_params(c, 10), p2 = init_params(c, 10);
    Tape t1, t2;
    const Matrix a = t1.value(encode(t1, t1.constant(b.x), p1, mode, Binding::kFrozen)).mat();
    const Matrix r = t2.value(encode(t2, t2.constant(reversed), p2, mode, Binding::kFrozen)).mat();
    EXPECT_LT((a - r).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Heads, OutputLayerMatchesLoopOracle) {
  MtanParams p = init_params(small_config(), 11);
  Rng rng(12);
  Tensor e(nn::Shape{3, 10});
  for (std::size_t i = 0; i < e.size(); ++i) e.data()[i] = rng.normal();
  for (auto* store : {&p.classifier, &p.discriminator}) {
    for (auto& [n, param] : store->entries()) {
      for (std::size_t i = 0; i < param.value.size(); ++i) param.value.data()[i] = rng.normal();
    }
  }
  Tape t;
  const Matrix cls = t.value(classify(t, t.constant(e), p, Binding::kFrozen)).mat();
  const Matrix dis = t.value(discriminate(t, t.constant(e), p, Binding::kFrozen)).mat();
  const auto& cw = p.classifier.at("cls.W").value.mat();
  const auto& cb = p.classifier.at("cls.b").value;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 5; ++k) {
      double acc = cb.data()[k];
      for (int j = 0; j < 10; ++j) acc += e.mat()(i, j) * cw(j, k);
      EXPECT_NEAR(cls(i, k), acc, 1e-12);
    }
  }
  EXPECT_EQ(dis.cols(), 4);
  p.classifier.at("cls.W").value.mat().setZero();
  const Matrix flat = t.value(classify(t, t.constant(e), p, Binding::kFrozen)).mat();
  EXPECT_EQ(flat.row(0), flat.row(2));
}

class Objectives : public ::testing::Test {
 protected:
  void SetUp() override {
    params = init_params(small_config(), 20);
    batch = random_batch(small_config(), 8, 5, 21);
  }
  MtanParams params;
  Batch batch;
};

TEST_F(Objectives, EncoderGradientsStayInEncoder) {
  for (const Variant v : {Variant::kFL, Variant::kAL, Variant::kNone}) {
    params.classifier.zero_grad();
    params.discriminator.zero_grad();
    encoder_objective(params, batch, LossWeights{1.0, 1.0, v});
    EXPECT_FALSE(all_zero(params.encoder));
    EXPECT_TRUE(all_zero(params.classifier));
    EXPECT_TRUE(all_zero(params.discriminator));
  }
}

TEST_F(Objectives, DiscriminatorGradientsStayInDiscriminator) {
  params.encoder.zero_grad();
  params.classifier.zero_grad();
  const ObjectiveResult r = discriminator_objective(params, batch, LossWeights{1.0, 1.0, Variant::kAL});
  EXPECT_FALSE(all_zero(params.discriminator));
  EXPECT_TRUE(all_zero(params.encoder));
  EXPECT_TRUE(all_zero(params.classifier));
  EXPECT_DOUBLE_EQ(r.value, r.l_sD);
}

TEST_F(Objectives, ClassifierGradientsStayInClassifier) {
  params.encoder.zero_grad();
  params.discriminator.zero_grad();
  classifier_objective(params, batch);
  EXPECT_FALSE(all_zero(params.classifier));
  EXPECT_TRUE(all_zero(params.encoder));
  EXPECT_TRUE(all_zero(params.discriminator));
}

TEST_F(Objectives, GammaScalesDiscriminatorObjectiveLinearly) {
  MtanParams other = init_params(small_config(), 20);
  const ObjectiveResult a = discriminator_objective(params, batch, LossWeights{1.0, 1.0, Variant::kAL});
  const ObjectiveResult b = discriminator_objective(other, batch, LossWeights{1.0, 2.0, Variant::kAL});
  EXPECT_EQ(b.value, 2.0 * a.value);
  for (const auto& [name, p] : params.discriminator.entries()) {
    EXPECT_EQ(other.discriminator.at(name).grad.mat(), 2.0 * p.grad.mat()) << name;
  }
}

TEST_F(Objectives, UniformHeadsGiveLogClassCounts) {
  for (auto* s : {&params.classifier, &params.discriminator}) {
    for (auto& [n, p] : s->entries()) p.value.mat().setZero();
  }
  EXPECT_NEAR(discriminator_objective(params, batch, LossWeights{1.0, 1.0, Variant::kAL}).value, std::log(4.0), 1e-12);
  EXPECT_NEAR(classifier_objective(params, batch).value, std::log(5.0), 1e-12);
  const ObjectiveResult e = encoder_objective(params, batch, LossWeights{1.0, 1.0, Variant::kAL});
  EXPECT_NEAR(e.l_var, 3.0 * std::log(4.0), 1e-12);
  EXPECT_NEAR(e.value, std::log(5.0) + 3.0 * std::log(4.0), 1e-12);
}

TEST_F(Objectives, BetaZeroIsPlainSpeakerCrossEntropy) {
  MtanParams other = init_params(small_config(), 20);
  const ObjectiveResult a = encoder_objective(params, batch, LossWeights{0.0, 1.0, Variant::kAL});
  const ObjectiveResult b = encoder_objective(other, batch, LossWeights{1.0, 1.0, Variant::kNone});
  EXPECT_EQ(a.value, a.l_sC);
  EXPECT_EQ(a.value, b.value);
  EXPECT_GT(a.l_var, 0.0);
  EXPECT_EQ(b.l_var, 0.0);
  for (const auto& [name, p] : params.encoder.entries()) {
    EXPECT_EQ(other.encoder.at(name).grad.mat(), p.grad.mat()) << name;
  }
}

TEST_F(Objectives, FlVanishesWhenDiscriminatorIsSureOfClean) {
  params.discriminator.at("disc.W").value.mat().setZero();
  auto& b = params.discriminator.at("disc.b").value;
  b.mat().setConstant(-50.0);
  b.data()[0] = 50.0;
  const ObjectiveResult r = encoder_objective(params, batch, LossWeights{1.0, 1.0, Variant::kFL});
  EXPECT_NEAR(r.l_var, 0.0, 1e-12);
  EXPECT_NEAR(r.value, r.l_sC, 1e-12);
}

TEST_F(Objectives, CombinedPhaseMatchesSeparateObjectives) {
  MtanParams a = init_params(small_config(), 20), b = init_params(small_config(), 20);
  const LossWeights w{1.0, 1.5, Variant::kAL};
  const ObjectiveResult cd = cd_objectives(a, batch, w);
  const ObjectiveResult c = classifier_objective(b, batch);
  MtanParams b2 = init_params(small_config(), 20);
  const ObjectiveResult d = discriminator_objective(b2, batch, w);
  EXPECT_NEAR(cd.l_sC, c.l_sC, 1e-12);
  EXPECT_NEAR(cd.l_sD, d.l_sD, 1e-12);
  EXPECT_EQ(cd.disc_accuracy, d.disc_accuracy);
  for (const auto& [name, p] : a.classifier.entries()) {
    EXPECT_LT((p.grad.mat() - b.classifier.at(name).grad.mat()).cwiseAbs().maxCoeff(), 1e-12);
  }
  for (const auto& [name, p] : a.discriminator.entries()) {
    EXPECT_LT((p.grad.mat() - b2.discriminator.at(name).grad.mat()).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_TRUE(all_zero(a.encoder));
}

TEST_F(Objectives, SmallAntiLabelStepDoesNotIncreaseAntiLabelLoss) {
  auto al_value = [this](MtanParams& p) {
    Tape t;
    const VarId e = encode(t, t.constant(batch.x), p, Mode::kTrain, Binding::kFrozen);
    return t.value(nn::al_loss(t, discriminate(t, e, p, Binding::kFrozen), batch.noise)).item();
  };
  // Plain gradient step on the anti-label term alone, discriminator fixed.
  const LossWeights w{1.0, 1.0, Variant::kAL};
  MtanParams probe = init_params(small_config(), 20);
  const double before = al_value(probe);
  encoder_objective(probe, batch, w);
  MtanParams only_c = init_params(small_config(), 20);
  encoder_objective(only_c, batch, LossWeights{0.0, 1.0, Variant::kAL});
  for (auto& [name, p] : probe.encoder.entries()) {
    if (!p.trainable) continue;
    const Matrix g_var = p.grad.mat() - only_c.encoder.at(name).grad.mat();
    p.value.mat() -= 1e-4 * g_var;
  }
  // Running statistics moved during the two objective calls; restore them.
  MtanParams fresh = init_params(small_config(), 20);
  for (auto& [name, p] : probe.encoder.entries()) {
    if (!p.trainable) p.value = fresh.encoder.at(name).value;
  }
  EXPECT_LE(al_value(probe), before);
}

TEST_F(Objectives, AdamStepOnAntiLabelObjectiveLowersIt) {
  const LossWeights w{1.0, 1.0, Variant::kAL};
  nn::AdamState st;
  st.options.lr = 1e-4;
  const double before = encoder_objective(params, batch, w).value;
  nn::adam_step(params.encoder, st);
  EXPECT_LT(encoder_objective(params, batch, w).value, before);
}

TEST(Discriminator, LearnsSeparableNoiseOnFixedEncoder) {
  ModelConfig c = small_config();
  c.num_noise_classes = 3;
  c.conv_channels = 16;
  c.fc_dims = {16, 16};
  MtanParams p = init_params(c, 40);
  Rng rng(41);
  nn::AdamState opt;
  double acc = 0.0;
  for (int it = 0; it < 300; ++it) {
    Batch b;
    b.x = Tensor(nn::Shape{16, 8, c.feature_dim});
    for (int i = 0; i < 16; ++i) {
      const int s = static_cast<int>(rng.uniform_index(5)), n = static_cast<int>(rng.uniform_index(3));
      b.speakers.push_back(s);
      b.noise.push_back(n);
      for (int t = 0; t < 8; ++t) {
        for (int d = 0; d < c.feature_dim; ++d) {
          b.x.mat()(i * 8 + t, d) = 0.3 * rng.normal() + (d == s ? 2.0 : 0.0) + (d == 10 + n ? 2.0 : 0.0);
        }
      }
    }
    const ObjectiveResult r = discriminator_objective(p, b, LossWeights{0.0, 1.0, Variant::kNone});
    nn::adam_step(p.discriminator, opt);
    if (it >= 250) acc += r.disc_accuracy;
  }
  EXPECT_GT(acc / 50, 0.9);
}

TEST(AdversarialValue, Examples) {
  EXPECT_DOUBLE_EQ(adversarial_value(2.0, 0.5, LossWeights{1.0, 1.0, Variant::kAL}), 1.5);
  EXPECT_DOUBLE_EQ(adversarial_value(2.0, 0.5, LossWeights{0.0, 1.0, Variant::kAL}), 2.0);
  EXPECT_DOUBLE_EQ(adversarial_value(1.0, 1.0, LossWeights{3.0, 2.0, Variant::kAL}), -1.0);
}

TEST(Persistence, SaveLoadRoundTripAndCard) {
  mtan::testing::TempDir dir;
  MtanParams p = init_params(small_config(), 30);
  encoder_objective(p, random_batch(small_config(), 4, 3, 31), LossWeights{});
  nn::Checkpoint c;
  save_params(c, p);
  c.save(dir / "m.ckpt");
  MtanParams q = load_params(nn::Checkpoint::load(dir / "m.ckpt"));
  EXPECT_EQ(q.config.fc_dims, p.config.fc_dims);
  EXPECT_EQ(q.config.num_speakers, 5);
  for (const auto* pair : {&p.encoder, &p.classifier, &p.discriminator}) {
    const ParamStore& other = pair == &p.encoder ? q.encoder
                              : pair == &p.classifier ? q.classifier : q.discriminator;
    for (const auto& [name, param] : pair->entries()) EXPECT_EQ(other.at(name).value, param.value) << name;
  }
  const Batch b = random_batch(small_config(), 2, 4, 32);
  EXPECT_EQ(embed(p, b.x), embed(q, b.x));

  write_model_card(dir / "m.card", p, LossWeights{0.5, 2.0, Variant::kFL}, 99, "note\tx");
  std::ifstream is(dir / "m.card");
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text.rfind("#mtan-model-card v1\n", 0), 0u);
  EXPECT_NE(text.find("embedding_dim\t10\n"), std::string::npos);
  EXPECT_NE(text.find("fl"), std::string::npos);
  EXPECT_NE(text.find("99"), std::string::npos);
}

TEST(Init, SeededAndDistinct) {
  const MtanParams a = init_params(small_config(), 1), b = init_params(small_config(), 1),
                   c = init_params(small_config(), 2);
  EXPECT_EQ(a.encoder.at("enc.conv0.W").value, b.encoder.at("enc.conv0.W").value);
  EXPECT_NE(a.encoder.at("enc.conv0.W").value, c.encoder.at("enc.conv0.W").value);
  EXPECT_TRUE(a.encoder.at("enc.conv0.b").value.mat().isZero(0.0));
  EXPECT_EQ(a.encoder.at("enc.fc1.bn.running_var").value.mat().minCoeff(), 1.0);
}

}  // namespace
}  // namespace mtan::model
