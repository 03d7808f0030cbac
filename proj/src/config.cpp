// Copyright 2026 The tvret Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tvr/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tvr {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  if (!(is >> out) || !is.eof()) throw std::invalid_argument("config: bad value '" + v + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean '" + v + "' for " + key);
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "epochs") epochs = parse_number<int>(key, value);
  else if (key == "max_steps") max_steps = parse_number<long>(key, value);
  else if (key == "lr") adam.lr = parse_number<double>(key, value);
  else if (key == "beta1") adam.beta1 = parse_number<double>(key, value);
  else if (key == "beta2") adam.beta2 = parse_number<double>(key, value);
  else if (key == "adam_eps") adam.eps = parse_number<double>(key, value);
  else if (key == "w") w = parse_number<double>(key, value);
  else if (key == "dim") model.dim = parse_number<Eigen::Index>(key, value);
  else if (key == "heads") model.heads = parse_number<int>(key, value);
  else if (key == "temporal_layers") model.temporal_layers = parse_number<int>(key, value);
  else if (key == "frames") model.frames = parse_number<int>(key, value);
  else if (key == "centers") model.centers = parse_number<int>(key, value);
  else if (key == "tdb_variant") model.tdb_variant = parse_tdb_variant(value);
  else if (key == "tab_variant") model.tab_variant = parse_tab_variant(value);
  else if (key == "keep_difference_tokens") model.keep_difference_tokens = parse_bool(key, value);
  else if (key == "literal_eq7") model.literal_eq7 = parse_bool(key, value);
  else if (key == "tokens") tokens = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "data") data = value;
  else if (key == "checkpoint") checkpoint = value;
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (epochs < 0 || max_steps < 0) throw std::invalid_argument("config: epochs and max_steps must be >= 0");
  if (!(adam.lr > 0.0) || !(adam.eps > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw std::invalid_argument("config: invalid Adam settings");
  }
  check_fusion_weight(w);
  if (model.centers < 1) throw std::invalid_argument("config: centers must be >= 1");
  if (model.dim < 1 || model.heads < 1 || model.dim % model.heads != 0) {
    throw std::invalid_argument("config: dim must be a positive multiple of heads");
  }
  if (model.temporal_layers < 0) throw std::invalid_argument("config: temporal_layers must be >= 0");
  if (model.frames < 2) throw std::invalid_argument("config: frames must be >= 2");
  if (model.tab_variant == TabVariant::Tdb || model.tab_variant == TabVariant::Transformer) {
    if (model.frames < 3) throw std::invalid_argument("config: half-rate alignment path needs frames >= 3");
  }
  if (tokens < 1) throw std::invalid_argument("config: tokens must be >= 1");
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "batch_size = " << batch_size << "\n"
     << "epochs = " << epochs << "\n"
     << "max_steps = " << max_steps << "\n"
     << "lr = " << number(adam.lr) << "\n"
     << "beta1 = " << number(adam.beta1) << "\n"
     << "beta2 = " << number(adam.beta2) << "\n"
     << "adam_eps = " << number(adam.eps) << "\n"
     << "w = " << number(w) << "\n"
     << "dim = " << model.dim << "\n"
     << "heads = " << model.heads << "\n"
     << "temporal_layers = " << model.temporal_layers << "\n"
     << "frames = " << model.frames << "\n"
     << "centers = " << model.centers << "\n"
     << "tdb_variant = " << to_string(model.tdb_variant) << "\n"
     << "tab_variant = " << to_string(model.tab_variant) << "\n"
     << "keep_difference_tokens = " << (model.keep_difference_tokens ? "true" : "false") << "\n"
     << "literal_eq7 = " << (model.literal_eq7 ? "true" : "false") << "\n"
     << "tokens = " << tokens << "\n"
     << "seed = " << seed << "\n";
  return os.str();
}

std::uint64_t TrainConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool seed_from_env(std::uint64_t& seed) {
  const char* v = std::getenv("TVE_SEED");
  if (v == nullptr || *v == '\0') return false;
  std::istringstream is(v);
  std::uint64_t s = 0;
  if (!(is >> s) || !is.eof()) throw std::invalid_argument(std::string("TVE_SEED: not an unsigned integer: ") + v);
  seed = s;
  return true;
}

}  // namespace tvr
