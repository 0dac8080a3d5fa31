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

#include "mtan/eval/probe.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mtan/common/error.hpp"
#include "mtan/common/random.hpp"
#include "mtan/nn/adam.hpp"
#include "mtan/nn/losses.hpp"
#include "mtan/nn/ops.hpp"

namespace mtan::eval {

namespace {

nn::Matrix rows_of(const nn::Matrix& x, const std::vector<Eigen::Index>& idx) {
  nn::Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

std::vector<int> labels_of(const std::vector<int>& labels, const std::vector<Eigen::Index>& idx) {
  std::vector<int> out;
  for (auto i : idx) out.push_back(labels[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

ProbeResult noise_probe(const nn::Matrix& x, const std::vector<int>& labels,
                        const std::vector<std::string>& groups, int num_classes,
                        const ProbeOptions& options) {
  if (num_classes < 2) throw Error("noise probe needs at least two classes");
  if (static_cast<std::size_t>(x.rows()) != labels.size() || labels.size() != groups.size()) {
    throw Error("noise probe: rows, labels and groups differ in length");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw Error("noise probe: label out of range");
  }
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw Error("noise probe: test_fraction must lie in (0, 1)");
  }

  const std::set<std::string> distinct(groups.begin(), groups.end());
  std::vector<std::string> unique(distinct.begin(), distinct.end());
  Rng rng(derive_seed(options.seed, "probe-split"));
  for (std::size_t i = unique.size(); i > 1; --i) {
    std::swap(unique[i - 1], unique[rng.uniform_index(i)]);
  }
  const auto n_test = static_cast<std::size_t>(
      std::llround(options.test_fraction * static_cast<double>(unique.size())));
  const std::set<std::string> test_groups(unique.begin(),
                                          unique.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<Eigen::Index> train_idx, test_idx;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    (test_groups.count(groups[i]) ? test_idx : train_idx).push_back(static_cast<Eigen::Index>(i));
  }
  if (train_idx.size() < 2 || test_idx.empty()) throw Error("noise probe: degenerate split");

  nn::Matrix train_x = rows_of(x, train_idx);
  nn::Matrix test_x = rows_of(x, test_idx);
  const Eigen::RowVectorXd mean = train_x.colwise().mean();
  Eigen::RowVectorXd sd = (train_x.rowwise() - mean).array().square().colwise().mean().sqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (!(sd(j) > 1e-12)) sd(j) = 1.0;
  }
  train_x = ((train_x.rowwise() - mean).array().rowwise() / sd.array()).matrix();
  test_x = ((test_x.rowwise() - mean).array().rowwise() / sd.array()).matrix();
  const std::vector<int> train_y = labels_of(labels, train_idx);
  const std::vector<int> test_y = labels_of(labels, test_idx);

  nn::ParamStore probe;
  Rng init(derive_seed(options.seed, "probe-init"));
  probe.add("probe.W", nn::glorot_uniform(init, x.cols(), num_classes));
  probe.add("probe.b", nn::Tensor(nn::Shape{num_classes}));
  nn::AdamState adam;
  adam.options.lr = options.lr;
  const nn::Tensor train_t = nn::Tensor::from_matrix(train_x);
  for (int step = 0; step < options.steps; ++step) {
    probe.zero_grad();
    nn::Tape tape;
    const auto logits = nn::dense(tape, tape.constant(train_t), tape.param(probe.at("probe.W")),
                                  tape.param(probe.at("probe.b")));
    tape.backward(nn::softmax_cross_entropy(tape, logits, train_y));
    nn::adam_step(probe, adam);
  }

  const auto predict = [&](const nn::Matrix& m) {
    nn::Matrix logits = m * probe.at("probe.W").value.mat();
    logits.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(probe.at("probe.b").value.data(),
                                                             num_classes);
    return logits;
  };
  ProbeResult r;
  r.train_accuracy = nn::accuracy(predict(train_x), train_y);
  r.test_accuracy = nn::accuracy(predict(test_x), test_y);
  r.chance = 1.0 / num_classes;
  r.train_size = train_idx.size();
  r.test_size = test_idx.size();
  return r;
}

}  // namespace mtan::eval
