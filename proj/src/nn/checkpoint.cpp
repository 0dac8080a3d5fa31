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

#include "mtan/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mtan/common/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoints assume a little-endian host");

namespace mtan::nn {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string take(std::size_t n) {
    need(n);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError("truncated checkpoint");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::put_tensor(const std::string& name, const Tensor& tensor) {
  Record r;
  r.dtype = DType::kFloat64;
  r.shape = tensor.shape();
  r.f64.assign(tensor.values().begin(), tensor.values().end());
  records_[name] = std::move(r);
}

void Checkpoint::put_int(const std::string& name, std::int64_t value) {
  Record r;
  r.dtype = DType::kInt64;
  r.i64 = {value};
  records_[name] = std::move(r);
}

void Checkpoint::put_double(const std::string& name, double value) {
  put_tensor(name, Tensor::scalar(value));
}

void Checkpoint::put_bytes(const std::string& name, const std::string& bytes) {
  Record r;
  r.dtype = DType::kBytes;
  r.shape = {static_cast<std::int64_t>(bytes.size())};
  r.bytes = bytes;
  records_[name] = std::move(r);
}

const Checkpoint::Record& Checkpoint::record(const std::string& name, DType dtype) const {
  const auto it = records_.find(name);
  if (it == records_.end()) throw FormatError("checkpoint has no record '" + name + "'");
  if (it->second.dtype != dtype) throw FormatError("checkpoint record '" + name + "' has wrong type");
  return it->second;
}

Tensor Checkpoint::get_tensor(const std::string& name) const {
  const Record& r = record(name, DType::kFloat64);
  return Tensor(r.shape, r.f64);
}

std::int64_t Checkpoint::get_int(const std::string& name) const {
  const Record& r = record(name, DType::kInt64);
  if (r.i64.size() != 1) throw FormatError("record '" + name + "' is not a scalar");
  return r.i64[0];
}

double Checkpoint::get_double(const std::string& name) const {
  return get_tensor(name).item();
}

std::string Checkpoint::get_bytes(const std::string& name) const {
  return record(name, DType::kBytes).bytes;
}

void Checkpoint::put_params(const std::string& prefix, const ParamStore& params) {
  for (const auto& [name, p] : params.entries()) put_tensor(prefix + name, p.value);
}

void Checkpoint::get_params(const std::string& prefix, ParamStore& params) const {
  for (auto& [name, p] : params.entries()) params.assign(name, get_tensor(prefix + name));
}

void Checkpoint::put_adam(const std::string& prefix, const AdamState& state) {
  put_double(prefix + "lr", state.options.lr);
  put_double(prefix + "beta1", state.options.beta1);
  put_double(prefix + "beta2", state.options.beta2);
  put_double(prefix + "eps", state.options.eps);
  put_int(prefix + "step", state.step);
  for (const auto& [name, m] : state.first_moment) put_tensor(prefix + "m/" + name, m);
  for (const auto& [name, v] : state.second_moment) put_tensor(prefix + "v/" + name, v);
}

void Checkpoint::get_adam(const std::string& prefix, AdamState& state) const {
  state.options.lr = get_double(prefix + "lr");
  state.options.beta1 = get_double(prefix + "beta1");
  state.options.beta2 = get_double(prefix + "beta2");
  state.options.eps = get_double(prefix + "eps");
  state.step = get_int(prefix + "step");
  state.first_moment.clear();
  state.second_moment.clear();
  const std::string m_prefix = prefix + "m/", v_prefix = prefix + "v/";
  for (const auto& [name, r] : records_) {
    if (name.rfind(m_prefix, 0) == 0) {
      state.first_moment.emplace(name.substr(m_prefix.size()), get_tensor(name));
    } else if (name.rfind(v_prefix, 0) == 0) {
      state.second_moment.emplace(name.substr(v_prefix.size()), get_tensor(name));
    }
  }
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  for (const auto& [name, r] : records_) out.push_back(name);
  return out;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(records_.size()));
  for (const auto& [name, r] : records_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(r.dtype));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.shape.size()));
    for (auto d : r.shape) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    switch (r.dtype) {
      case DType::kFloat64:
        put<std::uint64_t>(out, r.f64.size() * 8);
        out.append(reinterpret_cast<const char*>(r.f64.data()), r.f64.size() * 8);
        break;
      case DType::kInt64:
        put<std::uint64_t>(out, r.i64.size() * 8);
        out.append(reinterpret_cast<const char*>(r.i64.data()), r.i64.size() * 8);
        break;
      case DType::kBytes:
        put<std::uint64_t>(out, r.bytes.size());
        out += r.bytes;
        break;
    }
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write checkpoint " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw Error("write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  Reader in(std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>()));
  if (in.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw FormatError(path.string() + ": not a checkpoint");
  }
  if (in.get<std::uint32_t>() != kVersion) throw FormatError(path.string() + ": unsupported version");
  const auto count = in.get<std::uint32_t>();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = in.take(in.get<std::uint32_t>());
    Record r;
    const auto dtype = in.get<std::uint8_t>();
    if (dtype > 2) throw FormatError("bad dtype in checkpoint record '" + name + "'");
    r.dtype = static_cast<DType>(dtype);
    const auto rank = in.get<std::uint32_t>();
    std::size_t elements = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      r.shape.push_back(static_cast<std::int64_t>(in.get<std::uint64_t>()));
      elements *= static_cast<std::size_t>(r.shape.back());
    }
    const auto bytes = in.get<std::uint64_t>();
    std::string payload = in.take(bytes);
    switch (r.dtype) {
      case DType::kFloat64:
        if (bytes != elements * 8) throw FormatError("bad payload size for '" + name + "'");
        r.f64.resize(elements);
        std::memcpy(r.f64.data(), payload.data(), bytes);
        break;
      case DType::kInt64:
        r.i64.resize(bytes / 8);
        std::memcpy(r.i64.data(), payload.data(), bytes);
        break;
      case DType::kBytes:
        r.bytes = std::move(payload);
        break;
    }
    ckpt.records_[name] = std::move(r);
  }
  if (!in.done()) throw FormatError(path.string() + ": trailing bytes");
  return ckpt;
}

}  // namespace mtan::nn
