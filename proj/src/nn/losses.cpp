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

#include "mtan/nn/losses.hpp"

#include <vector>

#include "mtan/common/error.hpp"

namespace mtan::nn {

namespace {

void check_labels(const Matrix& logits, std::span<const int> labels, const char* op) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows() || labels.empty()) {
    throw Error(std::string(op) + ": label count does not match batch");
  }
  for (int y : labels) {
    if (y < 0 || y >= logits.cols()) throw Error(std::string(op) + ": label out of range");
  }
}

}  // namespace

Matrix log_softmax(const Matrix& logits) {
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  Matrix shifted = logits.colwise() - row_max;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
  shifted.colwise() -= lse;
  return shifted;
}

VarId softmax_cross_entropy(Tape& tape, VarId logits, std::span<const int> labels) {
  const Matrix& z = tape.value(logits).mat();
  check_labels(z, labels, "softmax_cross_entropy");
  const Matrix logp = log_softmax(z);
  const auto batch = static_cast<double>(z.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) loss -= logp(i, labels[i]);
  loss /= batch;

  std::vector<int> ys(labels.begin(), labels.end());
  auto backward = [logits, ys = std::move(ys), logp, batch](Tape& t, const Matrix& g) {
    Matrix grad = logp.array().exp().matrix();
    for (Eigen::Index i = 0; i < grad.rows(); ++i) grad(i, ys[i]) -= 1.0;
    t.accumulate(logits, grad * (g(0, 0) / batch));
  };
  return tape.record(Tensor::scalar(loss), tape.requires_grad(logits), backward,
                     "softmax_cross_entropy");
}

VarId fl_loss(Tape& tape, VarId logits, int clean_index) {
  const std::vector<int> labels(tape.value(logits).mat().rows(), clean_index);
  return softmax_cross_entropy(tape, logits, labels);
}

VarId al_loss(Tape& tape, VarId logits, std::span<const int> labels) {
  const Matrix& z = tape.value(logits).mat();
  if (z.cols() < 2) throw Error("anti-label undefined for fewer than two classes");
  check_labels(z, labels, "al_loss");
  const Matrix logp = log_softmax(z);
  const auto batch = static_cast<double>(z.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      if (j != labels[i]) loss -= logp(i, j);
    }
  }
  loss /= batch;

  std::vector<int> ys(labels.begin(), labels.end());
  auto backward = [logits, ys = std::move(ys), logp, batch](Tape& t, const Matrix& g) {
    // d/dz_k of sum_{j != y} -log p_j = (M - 1) p_k - [k != y]
    const double wrong = static_cast<double>(logp.cols() - 1);
    Matrix grad = (logp.array().exp() * wrong - 1.0).matrix();
    for (Eigen::Index i = 0; i < grad.rows(); ++i) grad(i, ys[i]) += 1.0;
    t.accumulate(logits, grad * (g(0, 0) / batch));
  };
  return tape.record(Tensor::scalar(loss), tape.requires_grad(logits), backward, "al_loss");
}

double accuracy(const Matrix& logits, std::span<const int> labels) {
  check_labels(logits, labels, "accuracy");
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    correct += best == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace mtan::nn
