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

#include "mtan/trainer/config.hpp"

#include <charconv>
#include <fstream>

#include "mtan/common/error.hpp"
#include "mtan/corpus/manifest.hpp"

namespace mtan::trainer {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_int(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error("config key '" + key + "': '" + text + "' is not an integer");
  }
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    return corpus::parse_double(text);
  } catch (const std::exception&) {
    throw Error("config key '" + key + "': '" + text + "' is not a number");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw Error("batch_size must be at least 2");
  if (crop_frames < 1) throw Error("crop_frames must be positive");
  if (cycles < 0) throw Error("cycles must be non-negative");
  if (!(lr > 0.0)) throw Error("lr must be positive");
  if (encoder_steps_per_cycle < 1 || cd_steps_per_cycle < 1) {
    throw Error("steps per cycle must be at least 1");
  }
  if (!(0.0 <= alpha && alpha < theta && theta <= 1.0)) {
    throw Error("thresholds must satisfy 0 <= alpha < theta <= 1");
  }
  if (window_K < 1) throw Error("window_K must be at least 1");
  if (!(adjust_factor > 0.0 && adjust_factor < 1.0)) {
    throw Error("adjust_factor must lie in (0, 1)");
  }
  if (!(beta >= 0.0) || !(gamma > 0.0)) throw Error("need beta >= 0 and gamma > 0");
  if (checkpoint_interval < 0 || dev_interval < 0) throw Error("intervals must be non-negative");
}

void set_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "batch_size") c.batch_size = parse_int<int>(key, value);
  else if (key == "crop_frames") c.crop_frames = parse_int<int>(key, value);
  else if (key == "cycles") c.cycles = parse_int<int>(key, value);
  else if (key == "lr") c.lr = parse_real(key, value);
  else if (key == "encoder_steps_per_cycle") c.encoder_steps_per_cycle = parse_int<int>(key, value);
  else if (key == "cd_steps_per_cycle") c.cd_steps_per_cycle = parse_int<int>(key, value);
  else if (key == "alpha") c.alpha = parse_real(key, value);
  else if (key == "theta") c.theta = parse_real(key, value);
  else if (key == "window_K") c.window_K = parse_int<int>(key, value);
  else if (key == "adjust_factor") c.adjust_factor = parse_real(key, value);
  else if (key == "seed") c.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "beta") c.beta = parse_real(key, value);
  else if (key == "gamma") c.gamma = parse_real(key, value);
  else if (key == "low_accuracy_action") {
    if (value == "lower_beta") c.low_accuracy_action = LowAccuracyAction::kLowerBeta;
    else if (value == "raise_gamma") c.low_accuracy_action = LowAccuracyAction::kRaiseGamma;
    else throw Error("low_accuracy_action must be lower_beta or raise_gamma");
  }
  else if (key == "checkpoint_interval") c.checkpoint_interval = parse_int<int>(key, value);
  else if (key == "dev_interval") c.dev_interval = parse_int<int>(key, value);
  else throw Error("unknown config key '" + key + "'");
}

TrainConfig read_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(base, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  base.validate();
  return base;
}

void write_train_config(const std::filesystem::path& path, const TrainConfig& c) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write config " + path.string());
  const auto real = [](double v) { return corpus::format_double(v); };
  os << "batch_size = " << c.batch_size << "\n"
     << "crop_frames = " << c.crop_frames << "\n"
     << "cycles = " << c.cycles << "\n"
     << "lr = " << real(c.lr) << "\n"
     << "encoder_steps_per_cycle = " << c.encoder_steps_per_cycle << "\n"
     << "cd_steps_per_cycle = " << c.cd_steps_per_cycle << "\n"
     << "alpha = " << real(c.alpha) << "\n"
     << "theta = " << real(c.theta) << "\n"
     << "window_K = " << c.window_K << "\n"
     << "adjust_factor = " << real(c.adjust_factor) << "\n"
     << "seed = " << c.seed << "\n"
     << "beta = " << real(c.beta) << "\n"
     << "gamma = " << real(c.gamma) << "\n"
     << "low_accuracy_action = "
     << (c.low_accuracy_action == LowAccuracyAction::kLowerBeta ? "lower_beta" : "raise_gamma")
     << "\n"
     << "checkpoint_interval = " << c.checkpoint_interval << "\n"
     << "dev_interval = " << c.dev_interval << "\n";
  if (!os) throw Error("write failed for " + path.string());
}

}  // namespace mtan::trainer
