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

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "kws/error.hpp"
#include "kws/features.hpp"
#include "kws/random.hpp"

namespace kws {

enum class Activation { kRelu, kLinear };

inline const char* to_string(Activation a) { return a == Activation::kRelu ? "relu" : "linear"; }

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kLinear;
  throw FormatError("unknown activation '" + s + "'");
}

// Fully connected layer. Weights are row-major by input index:
// weights[i * out_dim + o] connects input i to output o.
template <typename S>
struct DenseLayer {
  std::string name;
  int in_dim = 0;
  int out_dim = 0;
  std::vector<S> weights;
  std::vector<S> bias;
  Activation activation = Activation::kLinear;

  DenseLayer() = default;
  DenseLayer(std::string layer_name, int in, int out, Activation act)
      : name(std::move(layer_name)),
        in_dim(in),
        out_dim(out),
        weights(static_cast<std::size_t>(in) * out, S(0)),
        bias(static_cast<std::size_t>(out), S(0)),
        activation(act) {}

  // Multiplicative weights only; biases are not counted.
  std::int64_t weight_count() const { return static_cast<std::int64_t>(in_dim) * out_dim; }

  S& w(int i, int o) { return weights[static_cast<std::size_t>(i) * out_dim + o]; }
  const S& w(int i, int o) const { return weights[static_cast<std::size_t>(i) * out_dim + o]; }

  void validate() const {
    if (in_dim <= 0 || out_dim <= 0) throw DimensionError(name + ": dimensions must be positive");
    if (weights.size() != static_cast<std::size_t>(in_dim) * out_dim || bias.size() != static_cast<std::size_t>(out_dim)) {
      throw DimensionError(name + ": weight/bias sizes do not match " + std::to_string(in_dim) + "x" +
                           std::to_string(out_dim));
    }
    for (const S& v : weights) {
      if (!std::isfinite(static_cast<double>(v))) throw NumericError(name + ": non-finite weight");
    }
    for (const S& v : bias) {
      if (!std::isfinite(static_cast<double>(v))) throw NumericError(name + ": non-finite bias");
    }
  }

  template <typename T>
  DenseLayer<T> cast() const {
    DenseLayer<T> out(name, in_dim, out_dim, activation);
    for (std::size_t i = 0; i < weights.size(); ++i) out.weights[i] = static_cast<T>(weights[i]);
    for (std::size_t i = 0; i < bias.size(); ++i) out.bias[i] = static_cast<T>(bias[i]);
    return out;
  }

  // Glorot-uniform weights in +-sqrt(6 / (in + out)); zero biases.
  void init_uniform(Rng& rng) {
    const double limit = std::sqrt(6.0 / (in_dim + out_dim));
    for (S& v : weights) v = static_cast<S>(rng.uniform(-limit, limit));
    std::fill(bias.begin(), bias.end(), S(0));
  }
};

// Frame-level stage: spliced context -> phone scores (softmax dropped).
template <typename S>
struct PhoneNet {
  std::vector<DenseLayer<S>> layers;
  int left_context = 5;
  int right_context = 5;

  int splice_width() const { return left_context + 1 + right_context; }
  int out_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
};

// Keyword stage over max-pooled phone vectors.
template <typename S>
struct WordNet {
  std::vector<DenseLayer<S>> layers;
  int pooled_context = 17;
  int pool_size = 5;
  int pool_stride = 4;

  // Consecutive phone outputs covered by one keyword output.
  int phone_window() const { return (pooled_context - 1) * pool_stride + pool_size; }
  int num_classes() const { return layers.empty() ? 0 : layers.back().out_dim; }
};

template <typename S>
struct TdnnNetwork {
  int feature_dim = 41;
  PhoneNet<S> phone;
  WordNet<S> word;

  int num_classes() const { return word.num_classes(); }
  int phone_dim() const { return phone.out_dim(); }

  // Input frames seen by one keyword output: phone window plus splice.
  int receptive_field() const { return word.phone_window() + phone.splice_width() - 1; }

  std::int64_t phone_mults() const {
    std::int64_t n = 0;
    for (const auto& l : phone.layers) n += l.weight_count();
    return n;
  }
  std::int64_t word_mults() const {
    std::int64_t n = 0;
    for (const auto& l : word.layers) n += l.weight_count();
    return n;
  }
  std::int64_t param_count() const { return phone_mults() + word_mults(); }

  std::int64_t bias_count() const {
    std::int64_t n = 0;
    for (const auto& l : phone.layers) n += l.out_dim;
    for (const auto& l : word.layers) n += l.out_dim;
    return n;
  }

  template <typename F>
  void for_each_layer(F&& f) {
    for (auto& l : phone.layers) f(l);
    for (auto& l : word.layers) f(l);
  }
  template <typename F>
  void for_each_layer(F&& f) const {
    for (const auto& l : phone.layers) f(l);
    for (const auto& l : word.layers) f(l);
  }

  // Checks that every layer's input matches what feeds it, including the
  // context splice in front of the phone stage and the pooled window in
  // front of the keyword stage.
  void validate() const {
    if (feature_dim <= 0) throw DimensionError("feature dimension must be positive");
    if (phone.left_context < 0 || phone.right_context < 0) throw DimensionError("negative splice context");
    if (word.pooled_context <= 0 || word.pool_size <= 0 || word.pool_stride <= 0) {
      throw DimensionError("pooling geometry must be positive");
    }
    if (phone.layers.empty() || word.layers.empty()) throw DimensionError("both stages need at least one layer");
    int expected = feature_dim * phone.splice_width();
    for (const auto& l : phone.layers) {
      l.validate();
      if (l.in_dim != expected) {
        throw DimensionError(l.name + ": input dim " + std::to_string(l.in_dim) + " but producer gives " +
                             std::to_string(expected));
      }
      expected = l.out_dim;
    }
    expected = phone.out_dim() * word.pooled_context;
    for (const auto& l : word.layers) {
      l.validate();
      if (l.in_dim != expected) {
        throw DimensionError(l.name + ": input dim " + std::to_string(l.in_dim) + " but producer gives " +
                             std::to_string(expected));
      }
      expected = l.out_dim;
    }
    if (num_classes() < 2) throw DimensionError("keyword stage needs at least one keyword plus filler");
  }

  template <typename T>
  TdnnNetwork<T> cast() const {
    TdnnNetwork<T> out;
    out.feature_dim = feature_dim;
    out.phone.left_context = phone.left_context;
    out.phone.right_context = phone.right_context;
    out.word.pooled_context = word.pooled_context;
    out.word.pool_size = word.pool_size;
    out.word.pool_stride = word.pool_stride;
    for (const auto& l : phone.layers) out.phone.layers.push_back(l.template cast<T>());
    for (const auto& l : word.layers) out.word.layers.push_back(l.template cast<T>());
    return out;
  }
};

// Layer sizes for a network. Defaults reproduce the published layout:
// 41-dim input, 11-frame splice, three 128-unit hidden layers, 132 phone
// outputs, 17 pooled frames (size 5, stride 4), one 64-unit hidden layer.
struct Architecture {
  int feature_dim = 41;
  int left_context = 5;
  int right_context = 5;
  std::vector<int> phone_hidden = {128, 128, 128};
  int phone_dim = 132;
  int pooled_context = 17;
  int pool_size = 5;
  int pool_stride = 4;
  std::vector<int> word_hidden = {64};
  int num_classes = 2;
};

template <typename S>
TdnnNetwork<S> build_network(const Architecture& arch, std::uint64_t seed) {
  if (arch.num_classes < 2) throw ConfigError("need at least one keyword plus filler");
  TdnnNetwork<S> net;
  net.feature_dim = arch.feature_dim;
  net.phone.left_context = arch.left_context;
  net.phone.right_context = arch.right_context;
  net.word.pooled_context = arch.pooled_context;
  net.word.pool_size = arch.pool_size;
  net.word.pool_stride = arch.pool_stride;

  Rng rng(seed);
  int in = arch.feature_dim * (arch.left_context + 1 + arch.right_context);
  int index = 1;
  for (int h : arch.phone_hidden) {
    net.phone.layers.emplace_back("phone-" + std::to_string(index++), in, h, Activation::kRelu);
    in = h;
  }
  net.phone.layers.emplace_back("phone-" + std::to_string(index), in, arch.phone_dim, Activation::kLinear);
  in = arch.phone_dim * arch.pooled_context;
  index = 1;
  for (int h : arch.word_hidden) {
    net.word.layers.emplace_back("word-" + std::to_string(index++), in, h, Activation::kRelu);
    in = h;
  }
  net.word.layers.emplace_back("word-" + std::to_string(index), in, arch.num_classes, Activation::kLinear);
  net.for_each_layer([&](DenseLayer<S>& l) { l.init_uniform(rng); });
  net.validate();
  return net;
}

inline std::string default_filler_name() { return "filler"; }

// Complete deployable model: weights plus everything needed to turn audio
// into keyword posteriors.
struct TdnnModel {
  TdnnNetwork<float> net;
  FrontendConfig frontend;
  FeatureNormalizer normalizer;
  // Softmax output order; the last entry names the filler class.
  std::vector<std::string> keyword_names;

  int num_classes() const { return net.num_classes(); }
  int num_keywords() const { return net.num_classes() - 1; }
  int filler_index() const { return net.num_classes() - 1; }

  void validate() const {
    net.validate();
    frontend.validate();
    normalizer.validate();
    if (net.feature_dim != frontend.num_mel_bins) {
      throw DimensionError("network expects " + std::to_string(net.feature_dim) + "-dim features, frontend produces " +
                           std::to_string(frontend.num_mel_bins));
    }
    if (normalizer.dim() != static_cast<std::size_t>(net.feature_dim)) {
      throw DimensionError("normalizer dimension does not match feature dimension");
    }
    if (keyword_names.size() != static_cast<std::size_t>(num_classes())) {
      throw DimensionError("expected " + std::to_string(num_classes()) + " class names, got " +
                           std::to_string(keyword_names.size()));
    }
    for (const auto& name : keyword_names) {
      if (name.empty() || name.find_first_of("\r\n") != std::string::npos) {
        throw FormatError("class names must be non-empty single-line strings");
      }
    }
  }
};

inline std::vector<std::string> default_class_names(int num_keywords) {
  std::vector<std::string> names;
  for (int k = 0; k < num_keywords; ++k) names.push_back("keyword" + std::to_string(k));
  names.push_back(default_filler_name());
  return names;
}

inline TdnnModel build_model(const Architecture& arch, std::uint64_t seed = 0) {
  TdnnModel model;
  model.net = build_network<float>(arch, seed);
  model.frontend.num_mel_bins = arch.feature_dim;
  model.normalizer = FeatureNormalizer::identity(static_cast<std::size_t>(arch.feature_dim));
  model.keyword_names = default_class_names(arch.num_classes - 1);
  return model;
}

inline TdnnModel build_default(int num_keywords, std::uint64_t seed = 0) {
  if (num_keywords < 1) throw ConfigError("num_keywords must be at least 1");
  Architecture arch;
  arch.num_classes = num_keywords + 1;
  return build_model(arch, seed);
}

template <typename S>
std::int64_t param_count(const DenseLayer<S>& layer) {
  return layer.weight_count();
}

inline std::int64_t param_count(const TdnnModel& model) { return model.net.param_count(); }

// Per-layer table: Layer, Inputs, Outputs, # Weights, and a total row.
inline std::string summary(const TdnnModel& model) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "Layer" << std::right << std::setw(8) << "Inputs" << std::setw(9) << "Outputs"
      << std::setw(12) << "# Weights" << "  Activation\n";
  model.net.for_each_layer([&](const DenseLayer<float>& l) {
    out << std::left << std::setw(10) << l.name << std::right << std::setw(8) << l.in_dim << std::setw(9) << l.out_dim
        << std::setw(12) << l.weight_count() << "  " << to_string(l.activation) << '\n';
  });
  out << std::left << std::setw(10) << "Total" << std::right << std::setw(8) << "" << std::setw(9) << ""
      << std::setw(12) << model.net.param_count() << '\n';
  out << "biases: " << model.net.bias_count() << ", receptive field: " << model.net.receptive_field()
      << " frames, classes: ";
  for (std::size_t i = 0; i < model.keyword_names.size(); ++i) out << (i ? "," : "") << model.keyword_names[i];
  out << '\n';
  return out.str();
}

}  // namespace kws
