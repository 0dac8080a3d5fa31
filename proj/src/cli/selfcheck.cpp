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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "mtan/cli/commands.hpp"
#include "mtan/common/random.hpp"
#include "mtan/eval/eer.hpp"
#include "mtan/model/mtan.hpp"
#include "mtan/nn/grad_check.hpp"
#include "mtan/nn/losses.hpp"
#include "mtan/nn/ops.hpp"

namespace mtan::cli {

namespace {

using nn::Matrix;
using nn::ParamStore;
using nn::Shape;
using nn::Tape;
using nn::Tensor;
using nn::VarId;

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so ReLU kinks stay outside the FD stencil.
Tensor off_zero_tensor(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double m = rng.uniform(0.1, 1.0);
    t.data()[i] = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

struct Suite {
  std::string name;
  ParamStore params;
  nn::Fragment fragment;
};

// Reduces an op output to a scalar with fixed random weights so every output
// element contributes a distinct upstream gradient.
VarId project(Tape& tape, VarId y, std::uint64_t seed) {
  Rng rng(seed);
  return nn::weighted_sum(tape, y, random_tensor(rng, tape.value(y).shape()));
}

std::vector<Suite> gradient_suites() {
  Rng rng(2024);
  std::vector<Suite> suites;
  {
    Suite s{"dense", {}, {}};
    s.params.add("x", random_tensor(rng, {4, 5}));
    s.params.add("W", random_tensor(rng, {5, 3}));
    s.params.add("b", random_tensor(rng, {3}));
    s.fragment = [](Tape& t, ParamStore& p) {
      return project(t, nn::dense(t, t.param(p.at("x")), t.param(p.at("W")), t.param(p.at("b"))), 1);
    };
    suites.push_back(std::move(s));
  }
  {
    Suite s{"conv1d_1x1", {}, {}};
    s.params.add("x", random_tensor(rng, {2, 3, 4}));
    s.params.add("W", random_tensor(rng, {4, 3}));
    s.params.add("b", random_tensor(rng, {3}));
    s.fragment = [](Tape& t, ParamStore& p) {
      return project(t, nn::conv1d_1x1(t, t.param(p.at("x")), t.param(p.at("W")), t.param(p.at("b"))), 2);
    };
    suites.push_back(std::move(s));
  }
  for (const bool rank3 : {true, false}) {
    Suite s{rank3 ? "batchnorm_conv_train" : "batchnorm_dense_train", {}, {}};
    s.params.add("x", random_tensor(rng, rank3 ? Shape{2, 4, 3} : Shape{6, 3}));
    s.params.add("gamma", random_tensor(rng, {3}, 0.5, 1.5));
    s.params.add("beta", random_tensor(rng, {3}));
    s.params.add("running_mean", Tensor(Shape{3}), false);
    s.params.add("running_var", Tensor(Shape{3}), false);
    s.fragment = [](Tape& t, ParamStore& p) {
      return project(t,
                     nn::batchnorm(t, t.param(p.at("x")), t.param(p.at("gamma")),
                                   t.param(p.at("beta")), p.at("running_mean").value,
                                   p.at("running_var").value, nn::Mode::kTrain),
                     3);
    };
    suites.push_back(std::move(s));
  }
  {
    Suite s{"batchnorm_infer", {}, {}};
    s.params.add("x", random_tensor(rng, {5, 3}));
    s.params.add("gamma", random_tensor(rng, {3}, 0.5, 1.5));
    s.params.add("beta", random_tensor(rng, {3}));
    s.params.add("running_mean", random_tensor(rng, {3}), false);
    s.params.add("running_var", random_tensor(rng, {3}, 0.5, 2.0), false);
    s.fragment = [](Tape& t, ParamStore& p) {
      return project(t,
                     nn::batchnorm(t, t.param(p.at("x")), t.param(p.at("gamma")),
                                   t.param(p.at("beta")), p.at("running_mean").value,
                                   p.at("running_var").value, nn::Mode::kInfer),
                     4);
    };
    suites.push_back(std::move(s));
  }
  {
    Suite s{"relu", {}, {}};
    s.params.add("x", off_zero_tensor(rng, {4, 5}));
    s.fragment = [](Tape& t, ParamStore& p) { return project(t, nn::relu(t, t.param(p.at("x"))), 5); };
    suites.push_back(std::move(s));
  }
  {
    Suite s{"avg_pool_time", {}, {}};
    s.params.add("x", random_tensor(rng, {3, 4, 2}));
    s.fragment = [](Tape& t, ParamStore& p) {
      return project(t, nn::avg_pool_time(t, t.param(p.at("x"))), 6);
    };
    suites.push_back(std::move(s));
  }
  const std::vector<int> labels{0, 2, 1, 3, 2};
  {
    Suite s{"cross_entropy", {}, {}};
    s.params.add("z", random_tensor(rng, {5, 4}, -2.0, 2.0));
    s.fragment = [labels](Tape& t, ParamStore& p) {
      return nn::softmax_cross_entropy(t, t.param(p.at("z")), labels);
    };
    suites.push_back(std::move(s));
  }
  {
    Suite s{"fl_loss", {}, {}};
    s.params.add("z", random_tensor(rng, {5, 4}, -2.0, 2.0));
    s.fragment = [](Tape& t, ParamStore& p) { return nn::fl_loss(t, t.param(p.at("z")), 0); };
    suites.push_back(std::move(s));
  }
  {
    Suite s{"al_loss", {}, {}};
    s.params.add("z", random_tensor(rng, {5, 4}, -2.0, 2.0));
    s.fragment = [labels](Tape& t, ParamStore& p) {
      return nn::al_loss(t, t.param(p.at("z")), labels);
    };
    suites.push_back(std::move(s));
  }
  return suites;
}

// Squares its input but reports twice the true gradient.
VarId broken_square(Tape& tape, VarId x) {
  Matrix y = tape.value(x).mat().array().square().matrix();
  auto backward = [x](Tape& t, const Matrix& g) {
    t.accumulate(x, (4.0 * t.value(x).mat().array() * g.array()).matrix());
  };
  return tape.record(Tensor(tape.value(x).shape(), std::move(y)), tape.requires_grad(x), backward,
                     "broken_square");
}

double midpoint_oracle_eer(const std::vector<double>& tar, const std::vector<double>& non) {
  std::vector<double> all(tar);
  all.insert(all.end(), non.begin(), non.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> cuts{all.front() - 1.0};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) cuts.push_back(0.5 * (all[i] + all[i + 1]));
  cuts.push_back(all.back() + 1.0);
  double pf = 1.0, pr = 0.0;
  for (double c : cuts) {
    const double far = static_cast<double>(std::count_if(non.begin(), non.end(), [&](double s) { return s >= c; })) / non.size();
    const double frr = static_cast<double>(std::count_if(tar.begin(), tar.end(), [&](double s) { return s < c; })) / tar.size();
    if (far - frr <= 0.0) {
      if (far == frr) return far;
      const double lambda = (pf - pr) / ((pf - pr) - (far - frr));
      return pf + lambda * (far - pf);
    }
    pf = far;
    pr = frr;
  }
  return 0.5;
}

}  // namespace

bool cmd_selfcheck(std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  bool all_ok = true;
  const auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "PASS" : "FAIL") << "  " << name << "  " << detail << '\n';
    all_ok = all_ok && ok;
  };

  for (auto& suite : gradient_suites()) {
    const nn::GradCheckReport r = nn::grad_check(suite.fragment, suite.params);
    report("grad:" + suite.name, r.passed,
           "max_rel_err=" + corpus::format_double(r.max_rel_error) + " checked=" +
               std::to_string(r.checked));
  }
  {
    Rng rng(7);
    ParamStore p;
    p.add("x", random_tensor(rng, {3, 4}));
    const auto r = nn::grad_check(
        [](Tape& t, ParamStore& ps) { return project(t, broken_square(t, t.param(ps.at("x"))), 8); }, p);
    report("grad:negative_control_detected", !r.passed,
           "max_rel_err=" + corpus::format_double(r.max_rel_error));
  }
  {
    model::ModelConfig c;
    c.num_speakers = 3;
    c.num_noise_classes = 3;
    c.conv_channels = 4;
    c.conv_layers = 2;
    c.fc_dims = {5, 4};
    c.feature_dim = 3;
    model::MtanParams params = model::init_params(c, 5);
    Rng rng(11);
    const Tensor x = random_tensor(rng, {4, 3, 3});
    const std::vector<int> spk{0, 1, 2, 1}, noise{0, 2, 1, 1};
    const nn::Fragment fragment = [&](Tape& t, ParamStore&) {
      const VarId e = model::encode(t, t.constant(x), params, nn::Mode::kTrain, model::Binding::kTrainable);
      const VarId lc = nn::softmax_cross_entropy(t, model::classify(t, e, params, model::Binding::kFrozen), spk);
      const VarId lv = nn::al_loss(t, model::discriminate(t, e, params, model::Binding::kFrozen), noise);
      return nn::add(t, lc, nn::scale(t, lv, 0.7));
    };
    const auto r = nn::grad_check(fragment, params.encoder);
    report("grad:encoder_objective_al", r.passed,
           "max_rel_err=" + corpus::format_double(r.max_rel_error) + " checked=" + std::to_string(r.checked));
  }

  const auto loss_of = [](const Matrix& z, const std::function<VarId(Tape&, VarId)>& f) {
    Tape t;
    return t.value(f(t, t.constant(Tensor::from_matrix(z)))).item();
  };
  {
    const Matrix z = Matrix::Constant(4, 6, 0.3);
    const std::vector<int> y{0, 5, 2, 3};
    const double ce = loss_of(z, [&](Tape& t, VarId v) { return nn::softmax_cross_entropy(t, v, y); });
    const double al = loss_of(z, [&](Tape& t, VarId v) { return nn::al_loss(t, v, y); });
    report("loss:uniform_ce_ln6", std::abs(ce - std::log(6.0)) < 1e-9, corpus::format_double(ce));
    report("loss:uniform_al_5ln6", std::abs(al - 5.0 * std::log(6.0)) < 1e-9, corpus::format_double(al));
  }
  {
    Matrix z(1, 2);
    z << 1.0, 0.0;
    const std::vector<int> y{0};
    const double ce = loss_of(z, [&](Tape& t, VarId v) { return nn::softmax_cross_entropy(t, v, y); });
    report("loss:ce_two_class", std::abs(ce - std::log1p(std::exp(-1.0))) < 1e-12, corpus::format_double(ce));
  }
  {
    Rng rng(3);
    const Matrix z = random_tensor(rng, {7, 5}, -3.0, 3.0).mat();
    const std::vector<int> clean(7, 0);
    const double fl = loss_of(z, [](Tape& t, VarId v) { return nn::fl_loss(t, v, 0); });
    const double ce = loss_of(z, [&](Tape& t, VarId v) { return nn::softmax_cross_entropy(t, v, clean); });
    report("loss:fl_equals_constant_label_ce", fl == ce, corpus::format_double(fl - ce));
    const Matrix shifted = (z.array() + 1000.0).matrix();
    const double fl_shift = loss_of(shifted, [](Tape& t, VarId v) { return nn::fl_loss(t, v, 0); });
    report("loss:shift_invariance", std::abs(fl_shift - fl) < 1e-6, corpus::format_double(fl_shift - fl));
  }

  {
    const std::vector<double> tar{0.9, 0.8, 0.2}, non{0.7, 0.1, 0.1};
    const double eer = eval::compute_eer(tar, non).eer;
    report("eer:hand_case_one_third", std::abs(eer - 1.0 / 3.0) < 1e-12, corpus::format_double(eer));
    Rng rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> t(2 + rng.uniform_index(60)), n(2 + rng.uniform_index(60));
      for (auto& s : t) s = std::round(rng.normal() * 4.0 + 2.0) / 4.0;
      for (auto& s : n) s = std::round(rng.normal() * 4.0) / 4.0;
      worst = std::max(worst, std::abs(eval::compute_eer(t, n).eer - midpoint_oracle_eer(t, n)));
    }
    report("eer:midpoint_oracle", worst < 1e-9, "max_abs_diff=" + corpus::format_double(worst));
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << (all_ok ? "selfcheck passed" : "selfcheck FAILED") << " in "
      << corpus::format_double(std::round(seconds * 1000.0) / 1000.0) << " s\n";
  return all_ok;
}

}  // namespace mtan::cli
