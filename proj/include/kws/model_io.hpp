// Copyright (c) 2026 The tdnn-kws Authors
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

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kws/error.hpp"
#include "kws/model.hpp"

namespace kws {

// TDNNKWS1 model file:
//   "TDNNKWS1"                 8-byte magic
//   u32 version (= 1)          little-endian
//   u32 header_bytes           little-endian
//   header                     UTF-8 "key=value" lines
//   payload                    per layer in order phone-1.., word-1..:
//                              weights (in x out, row-major by input), then
//                              biases, all little-endian float32
inline constexpr char kModelMagic[8] = {'T', 'D', 'N', 'N', 'K', 'W', 'S', '1'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace model_io_detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("bad number '" + s + "' for header key " + key);
  }
  return v;
}

inline long long parse_int(const std::string& s, const std::string& key) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("bad integer '" + s + "' for header key " + key);
  }
  return v;
}

inline std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(' ');
    out += format_double(values[i]);
  }
  return out;
}

inline std::vector<double> split_doubles(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok, key));
  return out;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

inline void put_floats(std::string& out, const std::vector<float>& values) {
  for (float f : values) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    put_u32(out, bits);
  }
}

class Header {
 public:
  explicit Header(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("header line without '=': " + line);
      entries_[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }

  const std::string& str(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw FormatError("header is missing key " + key);
    return it->second;
  }
  long long integer(const std::string& key) const { return parse_int(str(key), key); }
  double real(const std::string& key) const { return parse_double(str(key), key); }

 private:
  std::map<std::string, std::string> entries_;
};

struct LayerDecl {
  std::string name;
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::kLinear;
};

inline LayerDecl parse_layer(const std::string& s, const std::string& key) {
  std::istringstream in(s);
  LayerDecl d;
  std::string act;
  long long in_dim = 0, out_dim = 0;
  if (!(in >> d.name >> in_dim >> out_dim >> act)) throw FormatError("bad layer declaration for " + key);
  if (in_dim <= 0 || out_dim <= 0 || in_dim > (1 << 24) || out_dim > (1 << 24)) {
    throw DimensionError("implausible layer dimensions in " + key);
  }
  d.in_dim = static_cast<int>(in_dim);
  d.out_dim = static_cast<int>(out_dim);
  d.activation = parse_activation(act);
  return d;
}

}  // namespace model_io_detail

inline std::string serialize_model(const TdnnModel& model) {
  namespace d = model_io_detail;
  model.validate();
  std::ostringstream h;
  const auto& net = model.net;
  const auto& fe = model.frontend;
  h << "feature_dim=" << net.feature_dim << '\n'
    << "left_context=" << net.phone.left_context << '\n'
    << "right_context=" << net.phone.right_context << '\n'
    << "pooled_context=" << net.word.pooled_context << '\n'
    << "pool_size=" << net.word.pool_size << '\n'
    << "pool_stride=" << net.word.pool_stride << '\n'
    << "phone_layers=" << net.phone.layers.size() << '\n';
  for (std::size_t i = 0; i < net.phone.layers.size(); ++i) {
    const auto& l = net.phone.layers[i];
    h << "phone." << i << '=' << l.name << ' ' << l.in_dim << ' ' << l.out_dim << ' ' << to_string(l.activation) << '\n';
  }
  h << "word_layers=" << net.word.layers.size() << '\n';
  for (std::size_t i = 0; i < net.word.layers.size(); ++i) {
    const auto& l = net.word.layers[i];
    h << "word." << i << '=' << l.name << ' ' << l.in_dim << ' ' << l.out_dim << ' ' << to_string(l.activation) << '\n';
  }
  h << "frontend.sample_rate=" << fe.sample_rate << '\n'
    << "frontend.frame_length_ms=" << d::format_double(fe.frame_length_ms) << '\n'
    << "frontend.frame_shift_ms=" << d::format_double(fe.frame_shift_ms) << '\n'
    << "frontend.num_mel_bins=" << fe.num_mel_bins << '\n'
    << "frontend.low_freq=" << d::format_double(fe.low_freq) << '\n'
    << "frontend.high_freq=" << d::format_double(fe.high_freq) << '\n'
    << "frontend.preemph=" << d::format_double(fe.preemph) << '\n'
    << "frontend.log_floor=" << d::format_double(fe.log_floor) << '\n'
    << "classes=" << model.keyword_names.size() << '\n';
  for (std::size_t i = 0; i < model.keyword_names.size(); ++i) h << "class." << i << '=' << model.keyword_names[i] << '\n';
  h << "normalizer.mean=" << d::join_doubles(model.normalizer.mean) << '\n'
    << "normalizer.inv_std=" << d::join_doubles(model.normalizer.inv_std) << '\n';
  const std::string header = h.str();

  std::string out(kModelMagic, sizeof(kModelMagic));
  d::put_u32(out, kModelVersion);
  d::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  net.for_each_layer([&](const DenseLayer<float>& l) {
    d::put_floats(out, l.weights);
    d::put_floats(out, l.bias);
  });
  return out;
}

inline TdnnModel deserialize_model(const std::string& bytes) {
  namespace d = model_io_detail;
  if (bytes.size() < sizeof(kModelMagic) || std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw BadMagicError("not a TDNNKWS1 model file (bad magic)");
  }
  std::size_t pos = sizeof(kModelMagic);
  if (bytes.size() < pos + 8) throw TruncatedError("model file truncated inside the preamble");
  const std::uint32_t version = d::get_u32(bytes.data() + pos);
  if (version != kModelVersion) {
    throw VersionMismatchError("model file version " + std::to_string(version) + ", expected " +
                               std::to_string(kModelVersion));
  }
  const std::uint32_t header_bytes = d::get_u32(bytes.data() + pos + 4);
  pos += 8;
  if (bytes.size() - pos < header_bytes) throw TruncatedError("model file truncated inside the header");
  const d::Header h(bytes.substr(pos, header_bytes));
  pos += header_bytes;

  TdnnModel model;
  auto& net = model.net;
  auto as_int = [&](const std::string& key) { return static_cast<int>(h.integer(key)); };
  net.feature_dim = as_int("feature_dim");
  net.phone.left_context = as_int("left_context");
  net.phone.right_context = as_int("right_context");
  net.word.pooled_context = as_int("pooled_context");
  net.word.pool_size = as_int("pool_size");
  net.word.pool_stride = as_int("pool_stride");
  const long long phone_layers = h.integer("phone_layers");
  const long long word_layers = h.integer("word_layers");
  if (phone_layers <= 0 || phone_layers > 64 || word_layers <= 0 || word_layers > 64) {
    throw DimensionError("implausible layer count in header");
  }
  for (long long i = 0; i < phone_layers; ++i) {
    const std::string key = "phone." + std::to_string(i);
    const auto decl = d::parse_layer(h.str(key), key);
    net.phone.layers.emplace_back(decl.name, decl.in_dim, decl.out_dim, decl.activation);
  }
  for (long long i = 0; i < word_layers; ++i) {
    const std::string key = "word." + std::to_string(i);
    const auto decl = d::parse_layer(h.str(key), key);
    net.word.layers.emplace_back(decl.name, decl.in_dim, decl.out_dim, decl.activation);
  }
  auto& fe = model.frontend;
  fe.sample_rate = as_int("frontend.sample_rate");
  fe.frame_length_ms = h.real("frontend.frame_length_ms");
  fe.frame_shift_ms = h.real("frontend.frame_shift_ms");
  fe.num_mel_bins = as_int("frontend.num_mel_bins");
  fe.low_freq = h.real("frontend.low_freq");
  fe.high_freq = h.real("frontend.high_freq");
  fe.preemph = h.real("frontend.preemph");
  fe.log_floor = h.real("frontend.log_floor");
  const long long classes = h.integer("classes");
  if (classes < 0 || classes > 100000) throw DimensionError("implausible class count in header");
  for (long long i = 0; i < classes; ++i) model.keyword_names.push_back(h.str("class." + std::to_string(i)));
  model.normalizer.mean = d::split_doubles(h.str("normalizer.mean"), "normalizer.mean");
  model.normalizer.inv_std = d::split_doubles(h.str("normalizer.inv_std"), "normalizer.inv_std");

  // Check the declared shapes chain before trusting them to size the payload.
  {
    int expected = net.feature_dim * net.phone.splice_width();
    for (const auto& l : net.phone.layers) {
      if (l.in_dim != expected) throw DimensionError(l.name + ": declared input " + std::to_string(l.in_dim) +
                                                     " does not match producer output " + std::to_string(expected));
      expected = l.out_dim;
    }
    expected = net.phone.out_dim() * net.word.pooled_context;
    for (const auto& l : net.word.layers) {
      if (l.in_dim != expected) throw DimensionError(l.name + ": declared input " + std::to_string(l.in_dim) +
                                                     " does not match producer output " + std::to_string(expected));
      expected = l.out_dim;
    }
  }

  std::size_t payload_floats = 0;
  net.for_each_layer([&](const DenseLayer<float>& l) { payload_floats += l.weights.size() + l.bias.size(); });
  const std::size_t available = bytes.size() - pos;
  if (available < payload_floats * 4) {
    throw TruncatedError("model payload truncated: expected " + std::to_string(payload_floats) + " floats, found " +
                         std::to_string(available / 4));
  }
  if (available > payload_floats * 4) throw FormatError("trailing bytes after model payload");
  auto read_block = [&](std::vector<float>& dst) {
    for (float& f : dst) {
      f = std::bit_cast<float>(d::get_u32(bytes.data() + pos));
      pos += 4;
    }
  };
  net.for_each_layer([&](DenseLayer<float>& l) {
    read_block(l.weights);
    read_block(l.bias);
  });
  model.validate();
  return model;
}

inline void save_model(const TdnnModel& model, const std::string& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path);
}

inline TdnnModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace kws
