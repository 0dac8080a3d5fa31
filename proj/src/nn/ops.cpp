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

#include "mtan/nn/ops.hpp"

#include <utility>

#include "mtan/common/error.hpp"

namespace mtan::nn {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(message);
}

VarId affine(Tape& tape, VarId input, VarId weights, VarId bias, Shape out_shape,
             const char* op) {
  const Matrix& x = tape.value(input).mat();
  const Matrix& w = tape.value(weights).mat();
  const Tensor& b = tape.value(bias);
  require(tape.value(weights).rank() == 2 && x.cols() == w.rows(),
          std::string(op) + ": input channels do not match weights");
  require(b.size() == static_cast<std::size_t>(w.cols()),
          std::string(op) + ": bias size does not match weights");

  Matrix y(x.rows(), w.cols());
  y.noalias() = x * w;
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data(), w.cols());

  const bool needs = tape.requires_grad(input) || tape.requires_grad(weights) ||
                     tape.requires_grad(bias);
  auto backward = [input, weights, bias](Tape& t, const Matrix& gy) {
    if (t.requires_grad(input)) {
      Matrix gx(gy.rows(), t.value(weights).mat().rows());
      gx.noalias() = gy * t.value(weights).mat().transpose();
      t.accumulate(input, std::move(gx));
    }
    if (t.requires_grad(weights)) {
      Matrix gw(t.value(weights).mat().rows(), gy.cols());
      gw.noalias() = t.value(input).mat().transpose() * gy;
      t.accumulate(weights, std::move(gw));
    }
    if (t.requires_grad(bias)) {
      const Eigen::RowVectorXd gb = gy.colwise().sum();
      t.accumulate(bias, Eigen::Map<const Matrix>(gb.data(), t.value(bias).mat().rows(),
                                                   t.value(bias).mat().cols()));
    }
  };
  return tape.record(Tensor(std::move(out_shape), std::move(y)), needs, backward, op);
}

}  // namespace

VarId conv1d_1x1(Tape& tape, VarId input, VarId weights, VarId bias) {
  const Tensor& x = tape.value(input);
  require(x.rank() == 3, "conv1d_1x1: input must be batch x time x channels");
  return affine(tape, input, weights, bias,
                Shape{x.dim(0), x.dim(1), tape.value(weights).mat().cols()}, "conv1d_1x1");
}

VarId dense(Tape& tape, VarId input, VarId weights, VarId bias) {
  const Tensor& x = tape.value(input);
  require(x.rank() == 2, "dense: input must be batch x channels");
  return affine(tape, input, weights, bias, Shape{x.dim(0), tape.value(weights).mat().cols()},
                "dense");
}

VarId batchnorm(Tape& tape, VarId input, VarId scale, VarId shift, Tensor& running_mean,
                Tensor& running_var, Mode mode, const BatchNormOptions& options) {
  const Tensor& xt = tape.value(input);
  const Matrix& x = xt.mat();
  const Eigen::Index n = x.rows(), c = x.cols();
  require(tape.value(scale).size() == static_cast<std::size_t>(c) &&
              tape.value(shift).size() == static_cast<std::size_t>(c) &&
              running_mean.size() == static_cast<std::size_t>(c) &&
              running_var.size() == static_cast<std::size_t>(c),
          "batchnorm: channel count mismatch");
  const double* gamma = tape.value(scale).data();
  const double* beta = tape.value(shift).data();

  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(c), var = Eigen::RowVectorXd::Zero(c);
  if (mode == Mode::kTrain) {
    require(n >= 2, "batchnorm: train mode needs at least two samples per channel");
    // Row-major storage: accumulate row by row so the inner loop runs over channels.
    for (Eigen::Index r = 0; r < n; ++r) mean += x.row(r);
    mean /= static_cast<double>(n);
    for (Eigen::Index r = 0; r < n; ++r) var += (x.row(r) - mean).array().square().matrix();
    var /= static_cast<double>(n);
    auto rm = Eigen::Map<Eigen::RowVectorXd>(running_mean.data(), c);
    auto rv = Eigen::Map<Eigen::RowVectorXd>(running_var.data(), c);
    rm = (1.0 - options.momentum) * rm + options.momentum * mean;
    rv = (1.0 - options.momentum) * rv + options.momentum * var;
  } else {
    mean = Eigen::Map<const Eigen::RowVectorXd>(running_mean.data(), c);
    var = Eigen::Map<const Eigen::RowVectorXd>(running_var.data(), c);
  }
  const Eigen::RowVectorXd inv_std = (var.array() + options.eps).rsqrt().matrix();
  Matrix xhat(n, c), y(n, c);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double* xr = x.row(r).data();
    double* hr = xhat.row(r).data();
    double* yr = y.row(r).data();
    for (Eigen::Index j = 0; j < c; ++j) {
      hr[j] = (xr[j] - mean[j]) * inv_std[j];
      yr[j] = hr[j] * gamma[j] + beta[j];
    }
  }

  const bool needs =
      tape.requires_grad(input) || tape.requires_grad(scale) || tape.requires_grad(shift);
  auto backward = [input, scale, shift, mode, xhat = std::move(xhat), inv_std](
                      Tape& t, const Matrix& gy) {
    const Eigen::Index rows = gy.rows(), cols = gy.cols();
    Eigen::RowVectorXd sum_g = Eigen::RowVectorXd::Zero(cols);
    Eigen::RowVectorXd sum_gx = Eigen::RowVectorXd::Zero(cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double* gr = gy.row(r).data();
      const double* hr = xhat.row(r).data();
      for (Eigen::Index j = 0; j < cols; ++j) {
        sum_g[j] += gr[j];
        sum_gx[j] += gr[j] * hr[j];
      }
    }
    if (t.requires_grad(scale)) t.accumulate(scale, Eigen::Map<const Matrix>(sum_gx.data(), 1, cols));
    if (t.requires_grad(shift)) t.accumulate(shift, Eigen::Map<const Matrix>(sum_g.data(), 1, cols));
    if (t.requires_grad(input)) {
      const double* gamma = t.value(scale).data();
      Eigen::RowVectorXd k(cols), a(cols), b(cols);
      const double inv_n = 1.0 / static_cast<double>(rows);
      for (Eigen::Index j = 0; j < cols; ++j) {
        // Train mode: gx = k * (gy - mean(gy) - xhat * mean(gy * xhat)) with k = gamma / std.
        k[j] = gamma[j] * inv_std[j];
        a[j] = mode == Mode::kTrain ? sum_g[j] * inv_n : 0.0;
        b[j] = mode == Mode::kTrain ? sum_gx[j] * inv_n : 0.0;
      }
      Matrix gx(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const double* gr = gy.row(r).data();
        const double* hr = xhat.row(r).data();
        double* out = gx.row(r).data();
        for (Eigen::Index j = 0; j < cols; ++j) out[j] = k[j] * (gr[j] - a[j] - hr[j] * b[j]);
      }
      t.accumulate(input, std::move(gx));
    }
  };
  return tape.record(Tensor(xt.shape(), std::move(y)), needs, backward, "batchnorm");
}

VarId relu(Tape& tape, VarId input) {
  const Tensor& x = tape.value(input);
  Matrix y = x.mat().cwiseMax(0.0);
  auto backward = [input](Tape& t, const Matrix& gy) {
    const Matrix& xv = t.value(input).mat();
    Matrix gx(gy.rows(), gy.cols());
    const double* xs = xv.data();
    const double* gs = gy.data();
    double* out = gx.data();
    for (Eigen::Index i = 0; i < gy.size(); ++i) out[i] = xs[i] > 0.0 ? gs[i] : 0.0;
    t.accumulate(input, std::move(gx));
  };
  return tape.record(Tensor(x.shape(), std::move(y)), tape.requires_grad(input), backward,
                     "relu");
}

VarId avg_pool_time(Tape& tape, VarId input) {
  const Tensor& x = tape.value(input);
  require(x.rank() == 3, "avg_pool_time: input must be batch x time x channels");
  const Eigen::Index batch = x.dim(0), frames = x.dim(1), c = x.dim(2);
  require(frames >= 1, "avg_pool_time: no frames");
  Matrix y(batch, c);
  for (Eigen::Index b = 0; b < batch; ++b) {
    y.row(b) = x.mat().middleRows(b * frames, frames).colwise().mean();
  }
  auto backward = [input, batch, frames, c](Tape& t, const Matrix& gy) {
    Matrix gx(batch * frames, c);
    const double inv = 1.0 / static_cast<double>(frames);
    for (Eigen::Index b = 0; b < batch; ++b) {
      gx.middleRows(b * frames, frames).rowwise() = gy.row(b) * inv;
    }
    t.accumulate(input, std::move(gx));
  };
  return tape.record(Tensor(Shape{batch, c}, std::move(y)), tape.requires_grad(input),
                     backward, "avg_pool_time");
}

VarId add(Tape& tape, VarId a, VarId b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  require(x.shape() == y.shape(), "add: shape mismatch");
  Matrix sum = x.mat() + y.mat();
  auto backward = [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  };
  return tape.record(Tensor(x.shape(), std::move(sum)),
                     tape.requires_grad(a) || tape.requires_grad(b), backward, "add");
}

VarId scale(Tape& tape, VarId input, double factor) {
  const Tensor& x = tape.value(input);
  Matrix y = x.mat() * factor;
  auto backward = [input, factor](Tape& t, const Matrix& g) { t.accumulate(input, g * factor); };
  return tape.record(Tensor(x.shape(), std::move(y)), tape.requires_grad(input), backward,
                     "scale");
}

VarId stop_gradient(Tape& tape, VarId input) { return tape.constant(tape.value(input)); }

VarId weighted_sum(Tape& tape, VarId input, const Tensor& weights) {
  const Tensor& x = tape.value(input);
  require(x.shape() == weights.shape(), "weighted_sum: shape mismatch");
  const double s = x.mat().cwiseProduct(weights.mat()).sum();
  auto backward = [input, w = weights.mat()](Tape& t, const Matrix& g) {
    t.accumulate(input, w * g(0, 0));
  };
  return tape.record(Tensor::scalar(s), tape.requires_grad(input), backward, "weighted_sum");
}

}  // namespace mtan::nn
