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

#include <cstring>
#include <string>

#include <gtest/gtest.h>

#include "kws/model.hpp"
#include "kws/model_io.hpp"

namespace kws {
namespace {

TEST(BuildDefault, ReproducesPublishedLayerTable) {
  const auto model = build_default(1);
  const std::vector<std::int64_t> expected = {57728, 16384, 16384, 16896, 143616, 128};
  std::vector<std::int64_t> got;
  model.net.for_each_layer([&](const DenseLayer<float>& l) { got.push_back(param_count(l)); });
  EXPECT_EQ(got, expected);
  EXPECT_EQ(param_count(model), 251136);
  EXPECT_EQ(model.net.word.layers.back().in_dim, 64);
  EXPECT_EQ(model.net.word.layers.back().out_dim, 2);
}

TEST(BuildDefault, TenKeywords) {
  const auto model = build_default(10);
  EXPECT_EQ(model.net.word.layers.back().out_dim, 11);
  // 451*128 + 2*128*128 + 128*132 + 2244*64 + 64*11
  EXPECT_EQ(param_count(model), 451 * 128 + 2 * 128 * 128 + 128 * 132 + 2244 * 64 + 64 * 11);
  EXPECT_EQ(param_count(model), 251712);
  EXPECT_EQ(model.keyword_names.size(), 11u);
  EXPECT_EQ(model.keyword_names.back(), "filler");
}

TEST(BuildDefault, DimensionChaining) {
  const auto model = build_default(1);
  EXPECT_EQ(model.net.phone.layers.front().in_dim, 41 * 11);
  EXPECT_EQ(model.net.word.layers.front().in_dim, 132 * 17);
  EXPECT_EQ(model.net.word.phone_window(), 69);
  EXPECT_EQ(model.net.receptive_field(), 79);
  EXPECT_EQ(model.net.phone.layers[3].activation, Activation::kLinear);
  EXPECT_EQ(model.net.phone.layers[0].activation, Activation::kRelu);
  EXPECT_EQ(model.net.word.layers[0].activation, Activation::kRelu);
}

TEST(BuildDefault, RejectsZeroKeywords) { EXPECT_THROW(build_default(0), ConfigError); }

TEST(BuildDefault, GlorotInitIsSeededAndBounded) {
  const auto a = build_default(1, 42);
  const auto b = build_default(1, 42);
  const auto c = build_default(1, 43);
  EXPECT_EQ(a.net.phone.layers[0].weights, b.net.phone.layers[0].weights);
  EXPECT_NE(a.net.phone.layers[0].weights, c.net.phone.layers[0].weights);
  a.net.for_each_layer([](const DenseLayer<float>& l) {
    const double limit = std::sqrt(6.0 / (l.in_dim + l.out_dim));
    for (float w : l.weights) EXPECT_LE(std::fabs(w), limit);
    for (float v : l.bias) EXPECT_EQ(v, 0.0f);
  });
}

TEST(ParamCount, OneByOneLayer) {
  DenseLayer<float> l("x", 1, 1, Activation::kLinear);
  EXPECT_EQ(param_count(l), 1);
}

TEST(Validate, CatchesBrokenChain) {
  auto model = build_default(1);
  model.net.phone.layers[1] = DenseLayer<float>("phone-2", 100, 128, Activation::kRelu);
  EXPECT_THROW(model.validate(), DimensionError);
}

TEST(Summary, ListsEveryLayerAndTotal) {
  const std::string s = summary(build_default(1));
  for (const char* name : {"phone-1", "phone-4", "word-1", "word-2", "251136", "57728", "143616"}) {
    EXPECT_NE(s.find(name), std::string::npos) << name;
  }
}

TdnnModel populated_model() {
  auto model = build_default(2, 9);
  model.keyword_names = {"yes", "no", "filler"};
  model.normalizer.mean.assign(41, 0.0);
  model.normalizer.inv_std.assign(41, 0.0);
  for (int d = 0; d < 41; ++d) {
    model.normalizer.mean[d] = 0.1 * d - 1.0 / 3.0;
    model.normalizer.inv_std[d] = 1.0 / (1.0 + d / 7.0);
  }
  model.net.word.layers[1].bias = {0.25f, -1e-7f, 3.0f};
  model.frontend.preemph = 0.95;
  return model;
}

TEST(ModelIo, RoundTripIsBitExact) {
  const auto model = populated_model();
  const std::string bytes = serialize_model(model);
  const auto back = deserialize_model(bytes);
  EXPECT_EQ(serialize_model(back), bytes);
  EXPECT_EQ(back.keyword_names, model.keyword_names);
  EXPECT_EQ(back.normalizer.mean, model.normalizer.mean);
  EXPECT_EQ(back.normalizer.inv_std, model.normalizer.inv_std);
  EXPECT_EQ(back.frontend.preemph, 0.95);
  for (std::size_t i = 0; i < model.net.phone.layers.size(); ++i) {
    EXPECT_EQ(0, std::memcmp(back.net.phone.layers[i].weights.data(), model.net.phone.layers[i].weights.data(),
                             model.net.phone.layers[i].weights.size() * sizeof(float)));
  }
}

TEST(ModelIo, MagicVersionTruncationAndDimensionErrorsAreDistinct) {
  const std::string good = serialize_model(build_default(1, 1));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_model(bad_magic), BadMagicError);

  std::string bad_version = good;
  bad_version[8] = 2;
  EXPECT_THROW(deserialize_model(bad_version), VersionMismatchError);

  // Drop 10 floats from the end of the payload.
  EXPECT_THROW(deserialize_model(good.substr(0, good.size() - 40)), TruncatedError);
  EXPECT_THROW(deserialize_model(good.substr(0, 20)), TruncatedError);

  std::string bad_dims = good;
  const auto pos = bad_dims.find("phone.1=phone-2 128 128");
  ASSERT_NE(pos, std::string::npos);
  bad_dims.replace(pos, std::strlen("phone.1=phone-2 128 128"), "phone.1=phone-2 127 128");
  EXPECT_THROW(deserialize_model(bad_dims), DimensionError);
}

TEST(ModelIo, Phone1MissingTenFloatsIsTruncation) {
  // Payload cut inside the phone-1 weight block (declared 451x128).
  const auto model = build_default(1, 2);
  const std::string bytes = serialize_model(model);
  const std::size_t header_end = bytes.size() - 4 * (model.net.param_count() + model.net.bias_count());
  const std::string cut = bytes.substr(0, header_end + 4 * (451 * 128 - 10));
  EXPECT_THROW(deserialize_model(cut), TruncatedError);
}

TEST(ModelIo, FileErrors) {
  EXPECT_THROW(load_model("/nonexistent/dir/model.kws"), IoError);
  const std::string path = ::testing::TempDir() + "/roundtrip.kws";
  const auto model = populated_model();
  save_model(model, path);
  EXPECT_EQ(serialize_model(load_model(path)), serialize_model(model));
}

}  // namespace
}  // namespace kws
