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
#include <numbers>

#include "mtan/common/error.hpp"
#include "mtan/common/random.hpp"
#include "mtan/nn/adam.hpp"
#include "mtan/nn/checkpoint.hpp"
#include "mtan/nn/grad_check.hpp"
#include "mtan/nn/losses.hpp"
#include "mtan/nn/ops.hpp"
#include "support/temp_dir.hpp"

namespace mtan::nn {
namespace {

Tensor tv(Shape shape, std::vector<double> values) {
  return Tensor(std::move(shape), std::move(values));
}

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

VarId project(Tape& tape, VarId y, std::uint64_t seed) {
  Rng rng(seed);
  return weighted_sum(tape, y, random_tensor(rng, tape.value(y).shape()));
}

void expect_grads_match(const Fragment& f, ParamStore& params) {
  const GradCheckReport r = grad_check(f, params);
  EXPECT_TRUE(r.passed) << "worst " << r.worst.param << "[" << r.worst.index
                        << "] analytic " << r.worst.analytic << " numeric " << r.worst.numeric;
  EXPECT_LT(r.max_rel_error, 1e-4);
  EXPECT_EQ(r.checked, params.trainable_size());
}

TEST(Tensor, ShapesAndViews) {
  const Tensor t(Shape{2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.mat().rows(), 6);
  EXPECT_EQ(t.mat().cols(), 4);
  EXPECT_THROW(tv(Shape{2, 2}, {1, 2, 3}), Error);
  EXPECT_THROW(Tensor(Shape{1, 1, 1, 1}), Error);
  EXPECT_EQ(Tensor::scalar(2.5).item(), 2.5);
  EXPECT_THROW(t.item(), Error);
  EXPECT_EQ(shape_string(t.shape()), "[2,3,4]");
}

TEST(Tensor, FiniteChecks) {
  Matrix m = Matrix::Zero(3, 3);
  EXPECT_TRUE(all_finite(m));
  m(1, 2) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(all_finite(m));
  m(1, 2) = std::nan("");
  EXPECT_FALSE(all_finite(m));
  m(1, 2) = 1e308;
  EXPECT_TRUE(all_finite(m));
  EXPECT_THROW(Tensor(Shape{1}, std::vector<double>{std::nan("")}).check_finite("x"), NumericError);
}

TEST(ParamStore, NamesShapesAndGlorotBounds) {
  ParamStore s;
  Rng rng(1);
  s.add("w", glorot_uniform(rng, 30, 70));
  s.add("rm", Tensor(Shape{5}), false);
  EXPECT_THROW(s.add("w", Tensor(Shape{1})), Error);
  EXPECT_THROW(s.at("missing"), Error);
  EXPECT_THROW(s.assign("w", Tensor(Shape{70, 30})), Error);
  EXPECT_EQ(s.trainable_size(), 2100u);
  const double limit = std::sqrt(6.0 / 100.0);
  for (double v : s.at("w").value.values()) {
    EXPECT_LE(std::abs(v), limit);
  }
  EXPECT_TRUE(s.grads_all_zero());
}

TEST(Tape, SharedInputsAccumulateGradients) {
  ParamStore s;
  s.add("x", Tensor(Shape{2}, std::vector<double>{1.0, -2.0}));
  Tape t;
  const VarId x = t.param(s.at("x"));
  const VarId y = add(t, x, scale(t, x, 3.0));
  t.backward(weighted_sum(t, y, Tensor(Shape{2}, std::vector<double>{1.0, 2.0})));
  EXPECT_EQ(s.at("x").grad.data()[0], 4.0);
  EXPECT_EQ(s.at("x").grad.data()[1], 8.0);
}

TEST(Tape, StopGradientAndConstantsBlockGradients) {
  ParamStore s;
  s.add("x", Tensor(Shape{3}, std::vector<double>{1, 2, 3}));
  Tape t;
  const VarId x = t.param(s.at("x"));
  const VarId blocked = stop_gradient(t, x);
  EXPECT_FALSE(t.requires_grad(blocked));
  t.backward(weighted_sum(t, add(t, blocked, t.constant(Tensor(Shape{3}))), tv(Shape{3}, {1, 1, 1})));
  EXPECT_TRUE(s.grads_all_zero());
}

TEST(Tape, BackwardNeedsScalarRootAndFiniteValues) {
  Tape t;
  const VarId v = t.constant(Tensor(Shape{2}));
  EXPECT_THROW(t.backward(v), Error);
  Tensor bad(Shape{1});
  bad.data()[0] = std::nan("");
  EXPECT_THROW(t.constant(bad), NumericError);
}

TEST(Ops, DenseAndConvForward) {
  Tape t;
  const VarId x = t.constant(tv(Shape{1, 2, 2}, {1, 2, 3, 4}));
  const VarId w = t.constant(tv(Shape{2, 3}, {1, 0, 1, 0, 1, 1}));
  const VarId b = t.constant(tv(Shape{3}, {10, 20, 30}));
  const Tensor& y = t.value(conv1d_1x1(t, x, w, b));
  EXPECT_EQ(y.shape(), (Shape{1, 2, 3}));
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()),
            (std::vector<double>{11, 22, 33, 13, 24, 37}));
  const VarId x2 = t.constant(tv(Shape{2, 2}, {1, 2, 3, 4}));
  const Tensor& y2 = t.value(dense(t, x2, w, b));
  EXPECT_EQ(y2.shape(), (Shape{2, 3}));
  EXPECT_EQ(y2.mat()(1, 2), 37.0);
  EXPECT_THROW(dense(t, x, w, b), Error);
  EXPECT_THROW(conv1d_1x1(t, x2, w, b), Error);
}

TEST(Ops, BatchNormTrainNormalizesAndTracksRunningStats) {
  Rng rng(3);
  Tensor rm(Shape{3});
  Tensor rv = tv(Shape{3}, {1, 1, 1});
  Tape t;
  const Tensor xin = random_tensor(rng, {4, 5, 3}, -2.0, 5.0);
  const VarId x = t.constant(xin);
  const VarId g = t.constant(tv(Shape{3}, {1, 1, 1}));
  const VarId b = t.constant(Tensor(Shape{3}));
  const Matrix& y = t.value(batchnorm(t, x, g, b, rm, rv, Mode::kTrain)).mat();
  for (int c = 0; c < 3; ++c) {
    const double mean = y.col(c).mean();
    const double var = (y.col(c).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-12);
    const double bv = (xin.mat().col(c).array() - xin.mat().col(c).mean()).square().mean();
    EXPECT_NEAR(var, bv / (bv + 1e-5), 1e-12);
    EXPECT_NEAR(rm.data()[c], 0.1 * xin.mat().col(c).mean(), 1e-12);
    EXPECT_NEAR(rv.data()[c], 0.9 + 0.1 * bv, 1e-12);
  }
}

TEST(Ops, BatchNormInferUsesRunningStatsOnly) {
  Tensor rm = tv(Shape{2}, {1.0, -1.0});
  Tensor rv = tv(Shape{2}, {4.0, 0.25});
  Tape t;
  const VarId x = t.constant(tv(Shape{1, 2}, {3.0, 0.0}));
  const VarId g = t.constant(tv(Shape{2}, {2.0, 1.0}));
  const VarId b = t.constant(tv(Shape{2}, {0.5, 0.0}));
  const Matrix& y = t.value(batchnorm(t, x, g, b, rm, rv, Mode::kInfer)).mat();
  EXPECT_NEAR(y(0, 0), 2.0 * 2.0 / std::sqrt(4.0 + 1e-5) + 0.5, 1e-12);
  EXPECT_NEAR(y(0, 1), 1.0 / std::sqrt(0.25 + 1e-5), 1e-12);
  EXPECT_EQ(rm.data()[0], 1.0);
  EXPECT_EQ(rv.data()[1], 0.25);
  EXPECT_THROW(batchnorm(t, x, g, b, rm, rv, Mode::kTrain), Error);  // one row
}

TEST(Ops, ReluAndAveragePool) {
  Tape t;
  const VarId x = t.constant(tv(Shape{2, 2, 1}, {-1, 3, 2, 6}));
  EXPECT_EQ(t.value(relu(t, x)).mat()(0, 0), 0.0);
  const Tensor& p = t.value(avg_pool_time(t, x));
  EXPECT_EQ(p.shape(), (Shape{2, 1}));
  EXPECT_EQ(p.mat()(0, 0), 1.0);
  EXPECT_EQ(p.mat()(1, 0), 4.0);
}

TEST(GradCheck, Dense) {
  Rng rng(10);
  ParamStore p;
  p.add("x", random_tensor(rng, {4, 5}));
  p.add("W", random_tensor(rng, {5, 3}));
  p.add("b", random_tensor(rng, {3}));
  expect_grads_match([](Tape& t, ParamStore& s) {
    return project(t, dense(t, t.param(s.at("x")), t.param(s.at("W")), t.param(s.at("b"))), 1);
  }, p);
}

TEST(GradCheck, Conv1x1) {
  Rng rng(11);
  ParamStore p;
  p.add("x", random_tensor(rng, {3, 4, 5}));
  p.add("W", random_tensor(rng, {5, 2}));
  p.add("b", random_tensor(rng, {2}));
  expect_grads_match([](Tape& t, ParamStore& s) {
    return project(t, conv1d_1x1(t, t.param(s.at("x")), t.param(s.at("W")), t.param(s.at("b"))), 2);
  }, p);
}

TEST(GradCheck, BatchNormTrainAndInfer) {
  for (const Mode mode : {Mode::kTrain, Mode::kInfer}) {
    for (const Shape& shape : {Shape{2, 3, 4}, Shape{7, 4}}) {
      Rng rng(12);
      ParamStore p;
      p.add("x", random_tensor(rng, shape, -2.0, 2.0));
      p.add("g", random_tensor(rng, {4}, 0.5, 1.5));
      p.add("b", random_tensor(rng, {4}));
      p.add("rm", random_tensor(rng, {4}), false);
      p.add("rv", random_tensor(rng, {4}, 0.5, 2.0), false);
      expect_grads_match([mode](Tape& t, ParamStore& s) {
        return project(t, batchnorm(t, t.param(s.at("x")), t.param(s.at("g")), t.param(s.at("b")),
                                    s.at("rm").value, s.at("rv").value, mode), 3);
      }, p);
    }
  }
}

TEST(GradCheck, ReluAwayFromKink) {
  Rng rng(13);
  ParamStore p;
  Tensor x(Shape{5, 4});
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = (i % 2 ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  p.add("x", x);
  expect_grads_match([](Tape& t, ParamStore& s) { return project(t, relu(t, t.param(s.at("x"))), 4); }, p);
}

TEST(GradCheck, AveragePool) {
  Rng rng(14);
  ParamStore p;
  p.add("x", random_tensor(rng, {3, 5, 2}));
  expect_grads_match([](Tape& t, ParamStore& s) { return project(t, avg_pool_time(t, t.param(s.at("x"))), 5); }, p);
}

TEST(GradCheck, Losses) {
  const std::vector<int> labels{0, 3, 1, 2, 3};
  Rng rng(15);
  ParamStore p;
  p.add("z", random_tensor(rng, {5, 4}, -3.0, 3.0));
  expect_grads_match([&](Tape& t, ParamStore& s) { return softmax_cross_entropy(t, t.param(s.at("z")), labels); }, p);
  expect_grads_match([](Tape& t, ParamStore& s) { return fl_loss(t, t.param(s.at("z")), 0); }, p);
  expect_grads_match([&](Tape& t, ParamStore& s) { return al_loss(t, t.param(s.at("z")), labels); }, p);
}

TEST(GradCheck, DetectsAWrongBackward) {
  ParamStore p;
  p.add("x", tv(Shape{3}, {0.5, -1.0, 2.0}));
  const Fragment broken = [](Tape& t, ParamStore& s) {
    const VarId x = t.param(s.at("x"));
    Matrix sq = t.value(x).mat().array().square().matrix();
    // d(x^2)/dx is 2x; this backward claims 3x.
    const VarId y = t.record(Tensor(t.value(x).shape(), sq), true, [x](Tape& tt, const Matrix& g) {
      tt.accumulate(x, (3.0 * tt.value(x).mat().array() * g.array()).matrix());
    }, "broken_square");
    return weighted_sum(t, y, tv(Shape{3}, {1, 1, 1}));
  };
  const GradCheckReport r = grad_check(broken, p);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.failures.size(), 3u);
  EXPECT_NEAR(r.worst.rel_error, 1.0 / 3.0, 1e-6);
}

TEST(Losses, UniformLogitClosedForms) {
  for (int k : {2, 4, 6, 10}) {
    Tape t;
    const VarId z = t.constant(Tensor(Shape{3, k}));
    const std::vector<int> labels{0, k - 1, 1};
    EXPECT_NEAR(t.value(softmax_cross_entropy(t, z, labels)).item(), std::log(k), 1e-9);
    EXPECT_NEAR(t.value(al_loss(t, z, labels)).item(), (k - 1) * std::log(k), 1e-9);
  }
}

TEST(Losses, FlIsCrossEntropyWithConstantLabels) {
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    Tape t;
    const VarId z = t.constant(random_tensor(rng, {8, 6}, -5.0, 5.0));
    const int clean = static_cast<int>(rng.uniform_index(6));
    const std::vector<int> labels(8, clean);
    EXPECT_NEAR(t.value(fl_loss(t, z, clean)).item(),
                t.value(softmax_cross_entropy(t, z, labels)).item(), 1e-12);
  }
}

TEST(Losses, AntiLabelMinimizerOverTheSimplex) {
  // Mirror descent on the simplex for f(p) = -sum_{j != y} log p_j.
  const int m = 6, y = 2;
  std::vector<double> p(m, 1.0 / m);
  for (int it = 0; it < 200; ++it) {
    double total = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j != y) p[j] *= std::exp(0.05 / p[j]);
      total += p[j];
    }
    for (double& v : p) v /= total;
  }
  EXPECT_LT(p[y], 1e-3);
  for (int j = 0; j < m; ++j) {
    if (j != y) {
      EXPECT_NEAR(p[j], 1.0 / (m - 1), 1e-3);
    }
  }
  Tensor logits(Shape{1, m});
  for (int j = 0; j < m; ++j) logits.data()[j] = std::log(p[j]);
  Tape t;
  const std::vector<int> labels{y};
  EXPECT_NEAR(t.value(al_loss(t, t.constant(logits), labels)).item(), (m - 1) * std::log(m - 1.0), 1e-6);
}

TEST(Losses, LabelValidation) {
  Tape t;
  const VarId z = t.constant(Tensor(Shape{2, 3}));
  EXPECT_THROW(softmax_cross_entropy(t, z, std::vector<int>{0}), Error);
  EXPECT_THROW(softmax_cross_entropy(t, z, std::vector<int>{0, 3}), Error);
  EXPECT_THROW(al_loss(t, t.constant(Tensor(Shape{2, 1})), std::vector<int>{0, 0}), Error);
}

TEST(Losses, LogSoftmaxIsStableForLargeLogits) {
  Matrix z(1, 3);
  z << 1000.0, 0.0, -1000.0;
  const Matrix lp = log_softmax(z);
  EXPECT_NEAR(lp(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(lp(0, 1), -1000.0, 1e-9);
  EXPECT_TRUE(all_finite(lp));
}

TEST(Losses, AccuracyTakesFirstMaximum) {
  Matrix z(3, 3);
  z << 1, 1, 0,
       0, 2, 1,
       5, 0, 5;
  EXPECT_DOUBLE_EQ(accuracy(z, std::vector<int>{0, 1, 2}), 2.0 / 3.0);
}

// Textbook Adam, written out independently.
struct ReferenceAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double w, double g) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    return w - 0.01 * mh / (std::sqrt(vh) + 1e-8);
  }
};

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  ParamStore s;
  s.add("w", Tensor(Shape{1}));
  s.at("w").grad.data()[0] = 1.0;
  AdamState st;
  adam_step(s, st);
  EXPECT_NEAR(s.at("w").value.data()[0], -0.01, 1e-9);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, MatchesReferenceOverManySteps) {
  ParamStore s;
  s.add("w", tv(Shape{3}, {0.3, -0.2, 1.0}));
  AdamState st;
  std::vector<ReferenceAdam> ref(3);
  std::vector<double> w{0.3, -0.2, 1.0};
  Rng rng(17);
  for (int it = 0; it < 50; ++it) {
    for (int i = 0; i < 3; ++i) {
      const double g = rng.normal();
      s.at("w").grad.data()[i] = g;
      w[i] = ref[i].step(w[i], g);
    }
    adam_step(s, st);
  }
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.at("w").value.data()[i], w[i], 1e-12);
}

TEST(Adam, SkipsFrozenParametersAndRejectsNonFiniteGradients) {
  ParamStore s;
  s.add("w", tv(Shape{2}, {1.0, 2.0}));
  s.add("rm", tv(Shape{2}, {5.0, 5.0}), false);
  s.at("rm").grad.data()[0] = 1.0;
  s.at("w").grad.data()[0] = 1.0;
  AdamState st;
  adam_step(s, st);
  EXPECT_EQ(s.at("rm").value.data()[0], 5.0);
  EXPECT_EQ(st.first_moment.count("rm"), 0u);

  const Tensor before = s.at("w").value;
  s.at("w").grad.data()[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(adam_step(s, st), NumericError);
  EXPECT_EQ(s.at("w").value, before);
  EXPECT_EQ(st.step, 1);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  mtan::testing::TempDir dir;
  Rng rng(18);
  ParamStore s;
  s.add("a.w", random_tensor(rng, {3, 4}));
  s.add("a.rm", random_tensor(rng, {4}), false);
  AdamState st;
  for (int i = 0; i < 3; ++i) {
    for (auto& [n, p] : s.entries()) p.grad = random_tensor(rng, p.value.shape());
    adam_step(s, st);
  }
  Checkpoint c;
  c.put_params("p/", s);
  c.put_adam("opt/", st);
  c.put_int("n", -42);
  c.put_double("x", 0.1);
  c.put_bytes("txt", std::string("a\0b", 3));
  c.save(dir / "c.ckpt");

  const Checkpoint back = Checkpoint::load(dir / "c.ckpt");
  EXPECT_EQ(back.names(), c.names());
  ParamStore s2;
  s2.add("a.w", Tensor(Shape{3, 4}));
  s2.add("a.rm", Tensor(Shape{4}), false);
  back.get_params("p/", s2);
  EXPECT_EQ(s2.at("a.w").value, s.at("a.w").value);
  EXPECT_EQ(s2.at("a.rm").value, s.at("a.rm").value);
  AdamState st2;
  back.get_adam("opt/", st2);
  EXPECT_EQ(st2.step, 3);
  EXPECT_EQ(st2.first_moment.at("a.w"), st.first_moment.at("a.w"));
  EXPECT_EQ(st2.second_moment.at("a.w"), st.second_moment.at("a.w"));
  EXPECT_EQ(back.get_int("n"), -42);
  EXPECT_EQ(back.get_double("x"), 0.1);
  EXPECT_EQ(back.get_bytes("txt"), std::string("a\0b", 3));
  EXPECT_THROW(back.get_int("x"), Error);
  EXPECT_THROW(back.get_tensor("nope"), Error);

  ParamStore wrong;
  wrong.add("a.w", Tensor(Shape{4, 3}));
  EXPECT_THROW(back.get_params("p/", wrong), Error);
}

TEST(Checkpoint, RejectsCorruptFiles) {
  mtan::testing::TempDir dir;
  Checkpoint c;
  c.put_tensor("t", tv(Shape{2}, {1, 2}));
  c.save(dir / "c.ckpt");
  {
    std::ofstream(dir / "c.ckpt", std::ios::app | std::ios::binary) << 'x';
  }
  EXPECT_THROW(Checkpoint::load(dir / "c.ckpt"), FormatError);
  std::ofstream(dir / "bad.ckpt", std::ios::binary) << "NOTACKPT";
  EXPECT_THROW(Checkpoint::load(dir / "bad.ckpt"), FormatError);
  c.save(dir / "short.ckpt");
  std::filesystem::resize_file(dir / "short.ckpt", std::filesystem::file_size(dir / "short.ckpt") - 3);
  EXPECT_THROW(Checkpoint::load(dir / "short.ckpt"), FormatError);
}

}  // namespace
}  // namespace mtan::nn
