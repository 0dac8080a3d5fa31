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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mtan/nn/adam.hpp"
#include "mtan/nn/param_store.hpp"
#include "mtan/nn/tensor.hpp"

namespace mtan::nn {

/// Named binary records; loads reproduce saved values bit for bit.
///
/// File layout (little-endian):
///   "MTANCKPT" | u32 version (=1) | u32 record_count
///   per record, in name order:
///     u32 name_length | name | u8 dtype | u32 rank | rank x u64 dims |
///     u64 payload_bytes | payload
/// dtype 0 = float64 values, 1 = int64 values, 2 = raw bytes (rank 1).
class Checkpoint {
 public:
  enum class DType : std::uint8_t { kFloat64 = 0, kInt64 = 1, kBytes = 2 };

  void put_tensor(const std::string& name, const Tensor& tensor);
  void put_int(const std::string& name, std::int64_t value);
  void put_double(const std::string& name, double value);
  void put_bytes(const std::string& name, const std::string& bytes);

  Tensor get_tensor(const std::string& name) const;
  std::int64_t get_int(const std::string& name) const;
  double get_double(const std::string& name) const;
  std::string get_bytes(const std::string& name) const;
  bool contains(const std::string& name) const { return records_.count(name) != 0; }

  /// Stores every parameter (trainable or not) under `prefix + name`.
  void put_params(const std::string& prefix, const ParamStore& params);
  /// Loads every parameter of `params` from `prefix + name`; shapes must match.
  void get_params(const std::string& prefix, ParamStore& params) const;
  void put_adam(const std::string& prefix, const AdamState& state);
  void get_adam(const std::string& prefix, AdamState& state) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  std::vector<std::string> names() const;

 private:
  struct Record {
    DType dtype = DType::kFloat64;
    Shape shape;
    std::vector<double> f64;
    std::vector<std::int64_t> i64;
    std::string bytes;
  };
  const Record& record(const std::string& name, DType dtype) const;
  std::map<std::string, Record> records_;
};

}  // namespace mtan::nn
