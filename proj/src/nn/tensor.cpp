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

#include "mtan/nn/tensor.hpp"

#include <sstream>

#include "mtan/common/error.hpp"

namespace mtan::nn {

namespace {

std::pair<Eigen::Index, Eigen::Index> view_of(const Shape& shape) {
  if (shape.size() > 3) throw Error("tensor rank above 3 is not supported");
  if (shape.empty()) return {1, 1};
  Eigen::Index rows = 1;
  for (std::size_t i = 0; i + 1 < shape.size(); ++i) {
    if (shape[i] < 0) throw Error("negative tensor dimension");
    rows *= shape[i];
  }
  if (shape.back() < 0) throw Error("negative tensor dimension");
  return {rows, shape.back()};
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  const auto [rows, cols] = view_of(shape_);
  data_ = Matrix::Zero(rows, cols);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : Tensor(std::move(shape)) {
  if (values.size() != size()) {
    throw Error("tensor " + shape_string(shape_) + " given " + std::to_string(values.size()) +
                " values");
  }
  std::copy(values.begin(), values.end(), data_.data());
}

Tensor::Tensor(Shape shape, Matrix data) : shape_(std::move(shape)), data_(std::move(data)) {
  const auto [rows, cols] = view_of(shape_);
  if (data_.rows() != rows || data_.cols() != cols) {
    throw Error("matrix does not match tensor shape " + shape_string(shape_));
  }
}

Tensor Tensor::scalar(double value) {
  Tensor t;
  t.data_(0, 0) = value;
  return t;
}

Tensor Tensor::from_matrix(Matrix data) {
  Shape shape{data.rows(), data.cols()};
  return Tensor(std::move(shape), std::move(data));
}

double Tensor::item() const {
  if (size() != 1) throw Error("item() on tensor of shape " + shape_string(shape_));
  return data_(0, 0);
}

// x * 0 is NaN exactly when x is NaN or Inf, and the sum vectorizes.
bool all_finite(const Matrix& m) { return (m.array() * 0.0).sum() == 0.0; }

void Tensor::check_finite(std::string_view context) const {
  if (!all_finite(data_)) {
    throw NumericError("non-finite value in " + std::string(context));
  }
}

}  // namespace mtan::nn
