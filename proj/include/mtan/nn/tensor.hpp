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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mtan::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Shape = std::vector<std::int64_t>;

std::string shape_string(const Shape& shape);

/// True when no entry is NaN or Inf.
bool all_finite(const Matrix& m);

/// Dense 64-bit tensor of rank 0..3.
///
/// Storage is a row-major matrix whose column count is the last dimension
/// and whose row count is the product of the leading ones, so a
/// batch x time x channel activation is viewed as (batch*time) x channel.
/// A rank-0 tensor is a 1 x 1 matrix.
class Tensor {
 public:
  Tensor() : Tensor(Shape{}) {}
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);
  Tensor(Shape shape, Matrix data);

  static Tensor scalar(double value);
  static Tensor from_matrix(Matrix data);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

  Matrix& mat() { return data_; }
  const Matrix& mat() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> values() const { return {data_.data(), size()}; }

  /// Value of a single-element tensor.
  double item() const;

  /// Throws NumericError naming `context` if any entry is NaN or Inf.
  void check_finite(std::string_view context) const;

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  Shape shape_;
  Matrix data_;
};

}  // namespace mtan::nn
