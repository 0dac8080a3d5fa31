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

#include "mtan/corpus/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "mtan/common/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

namespace mtan::corpus {

AudioClip::AudioClip(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (samples_.empty()) throw Error("audio clip has no samples");
  if (sample_rate_ <= 0) throw Error("audio clip sample rate must be positive");
  for (double s : samples_) {
    if (!std::isfinite(s)) throw NumericError("audio clip has non-finite sample");
  }
}

double mean_power(std::span<const double> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return acc / static_cast<double>(samples.size());
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

template <typename T>
void put(std::ofstream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
  if (offset + sizeof(T) > buf.size()) throw FormatError("truncated WAV file");
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  return value;
}

}  // namespace

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t format =
      encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t block_align = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(clip.size() * block_align);
  const auto rate = static_cast<std::uint32_t>(clip.sample_rate());

  os.write("RIFF", 4);
  put<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put<std::uint32_t>(os, 16);
  put<std::uint16_t>(os, format);
  put<std::uint16_t>(os, 1);
  put<std::uint32_t>(os, rate);
  put<std::uint32_t>(os, rate * block_align);
  put<std::uint16_t>(os, static_cast<std::uint16_t>(block_align));
  put<std::uint16_t>(os, bits);
  os.write("data", 4);
  put<std::uint32_t>(os, data_bytes);

  if (encoding == WavEncoding::kPcm16) {
    for (double s : clip.samples()) {
      const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32767.0);
      put<std::int16_t>(os, static_cast<std::int16_t>(scaled));
    }
  } else {
    for (double s : clip.samples()) put<float>(os, static_cast<float>(s));
  }
  if (!os) throw Error("write failed for " + path.string());
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(path.string() + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const auto size = get<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      format = get<std::uint16_t>(buf, body);
      channels = get<std::uint16_t>(buf, body + 2);
      rate = get<std::uint32_t>(buf, body + 4);
      bits = get<std::uint16_t>(buf, body + 14);
      if (format == 0xFFFE) format = get<std::uint16_t>(buf, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(path.string() + ": data before fmt");
      if (channels != 1) throw FormatError(path.string() + ": only mono is supported");
      if (body + size > buf.size()) throw FormatError(path.string() + ": truncated data");
      std::vector<double> samples;
      if (format == kFormatPcm && bits == 16) {
        samples.resize(size / 2);
        for (std::size_t i = 0; i < samples.size(); ++i) {
          samples[i] = get<std::int16_t>(buf, body + 2 * i) / 32767.0;
        }
      } else if (format == kFormatFloat && bits == 32) {
        samples.resize(size / 4);
        for (std::size_t i = 0; i < samples.size(); ++i) {
          samples[i] = get<float>(buf, body + 4 * i);
        }
      } else if (format == kFormatFloat && bits == 64) {
        samples.resize(size / 8);
        for (std::size_t i = 0; i < samples.size(); ++i) {
          samples[i] = get<double>(buf, body + 8 * i);
        }
      } else {
        throw FormatError(path.string() + ": unsupported sample encoding");
      }
      return AudioClip(std::move(samples), static_cast<int>(rate));
    }
    pos = body + size + (size & 1);
  }
  throw FormatError(path.string() + ": no data chunk");
}

}  // namespace mtan::corpus
