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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "kws/cost.hpp"
#include "kws/inference.hpp"
#include "kws/model.hpp"
#include "test_util.hpp"

namespace kws {
namespace {

using kws::testing::oracle_dense_chain;
using kws::testing::oracle_softmax;
using kws::testing::random_frames;

const TdnnModel& shared_model() {
  static const TdnnModel model = [] {
    auto m = build_default(2, 1234);
    // Non-zero biases so the bias path is exercised.
    Rng rng(77);
    m.net.for_each_layer([&](DenseLayer<float>& l) {
      for (auto& b : l.bias) b = static_cast<float>(rng.uniform(-0.1, 0.1));
    });
    return m;
  }();
  return model;
}

TEST(PhoneForward, ZeroInputZeroBiasGivesZero) {
  const auto model = build_default(1, 5);
  const std::vector<float> x(451, 0.0f);
  const auto y = phone_forward<float>(x, model.net);
  ASSERT_EQ(y.size(), 132u);
  for (float v : y) EXPECT_EQ(v, 0.0f);
}

TEST(PhoneForward, MatchesDenseChainOracle) {
  const auto& model = shared_model();
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<float> x(451);
    std::vector<double> xd(451);
    for (int i = 0; i < 451; ++i) xd[i] = x[i] = static_cast<float>(rng.normal());
    const auto y = phone_forward<float>(x, model.net);
    const auto ref = oracle_dense_chain(model.net.phone.layers, xd);
    ASSERT_EQ(y.size(), ref.size());
    for (std::size_t o = 0; o < y.size(); ++o) EXPECT_NEAR(y[o], ref[o], 1e-5 * std::max(1.0, std::fabs(ref[o])));
  }
}

TEST(PhoneForward, RejectsNanAndWrongShape) {
  const auto& model = shared_model();
  std::vector<float> x(451, 0.5f);
  x[100] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(phone_forward<float>(x, model.net), InputError);
  EXPECT_THROW(phone_forward<float>(std::vector<float>(450, 0.0f), model.net), ShapeError);
}

TEST(PoolMax, IdenticalVectors) {
  const std::vector<float> v = {1.0f, -2.0f, 3.5f};
  const std::vector<std::vector<float>> window(5, v);
  EXPECT_EQ(pool_max<float>(window, 5), v);
}

TEST(PoolMax, ScaledOneHots) {
  std::vector<std::vector<float>> window(5, std::vector<float>(132, 0.0f));
  for (int k = 0; k < 5; ++k) window[k][k * 7] = static_cast<float>(k + 1);
  const auto out = pool_max<float>(window, 5);
  for (int d = 0; d < 132; ++d) {
    const float expected = (d % 7 == 0 && d / 7 < 5) ? static_cast<float>(d / 7 + 1) : 0.0f;
    EXPECT_EQ(out[d], expected);
  }
}

TEST(PoolMax, MatchesBruteForceAndChecksLength) {
  Rng rng(8);
  std::vector<std::vector<float>> window(5, std::vector<float>(132));
  for (auto& v : window) {
    for (auto& x : v) x = static_cast<float>(rng.normal());
  }
  const auto out = pool_max<float>(window, 5);
  for (int d = 0; d < 132; ++d) {
    float m = -std::numeric_limits<float>::infinity();
    for (const auto& v : window) m = std::max(m, v[d]);
    EXPECT_EQ(out[d], m);
  }
  window.pop_back();
  EXPECT_THROW(pool_max<float>(window, 5), ShapeError);
}

TEST(WordForward, ZeroNetworkIsUniform) {
  auto model = build_default(1, 1);
  for (auto& l : model.net.word.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0f);
    std::fill(l.bias.begin(), l.bias.end(), 0.0f);
  }
  const auto p = word_forward<float>(std::vector<float>(2244, 0.3f), model.net);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0], 0.5f);
  EXPECT_EQ(p[1], 0.5f);
}

TEST(WordForward, HugeEqualLogitsDoNotOverflow) {
  auto model = build_default(1, 1);
  auto& last = model.net.word.layers.back();
  std::fill(last.weights.begin(), last.weights.end(), 0.0f);
  last.bias = {1000.0f, 1000.0f};
  const auto p = word_forward<float>(std::vector<float>(2244, 1.0f), model.net);
  EXPECT_EQ(p[0], 0.5f);
  EXPECT_EQ(p[1], 0.5f);
}

TEST(WordForward, MatchesDenseSoftmaxOracle) {
  const auto& model = shared_model();
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<float> x(2244);
    std::vector<double> xd(2244);
    for (int i = 0; i < 2244; ++i) xd[i] = x[i] = static_cast<float>(rng.uniform(0.0, 2.0));
    const auto p = word_forward<float>(x, model.net);
    const auto ref = oracle_softmax(oracle_dense_chain(model.net.word.layers, xd));
    double sum = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      EXPECT_NEAR(p[c], ref[c], 1e-5);
      sum += p[c];
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
  EXPECT_THROW(word_forward<float>(std::vector<float>(10, 0.0f), model.net), ShapeError);
}

TEST(SmoothScores, ConstantSequenceUnchanged) {
  const std::vector<std::vector<float>> raw(20, std::vector<float>{0.25f, 0.75f});
  for (const auto& s : smooth_scores(raw, 9)) {
    EXPECT_EQ(s[0], 0.25);
    EXPECT_EQ(s[1], 0.75);
  }
}

TEST(SmoothScores, ImpulseResponseOfCausalMean) {
  std::vector<std::vector<float>> raw(20, std::vector<float>{0.0f});
  raw[0][0] = 1.0f;
  const auto s = smooth_scores(raw, 9);
  for (int t = 0; t < 20; ++t) {
    const double expected = t <= 8 ? 1.0 / (t + 1) : 0.0;
    EXPECT_DOUBLE_EQ(s[t][0], expected) << "t=" << t;
  }
}

TEST(SmoothScores, MatchesBruteForceWindowedMean) {
  Rng rng(6);
  std::vector<std::vector<float>> raw(200, std::vector<float>(3));
  for (auto& r : raw) {
    for (auto& v : r) v = static_cast<float>(rng.uniform());
  }
  for (int width : {1, 2, 9, 31}) {
    const auto s = smooth_scores(raw, width);
    for (std::size_t t = 0; t < raw.size(); ++t) {
      for (int c = 0; c < 3; ++c) {
        long double acc = 0;
        int n = 0;
        for (int k = 0; k < width && k <= static_cast<int>(t); ++k, ++n) acc += raw[t - k][c];
        EXPECT_NEAR(s[t][c], static_cast<double>(acc / n), 1e-12);
      }
    }
  }
  EXPECT_THROW(smooth_scores(raw, 0), ConfigError);
}

// Counts keyword outputs by enumerating every placement of the receptive
// field [t - rf + 1, t] inside [0, length) on the output grid.
int enumerate_outputs(int length, int receptive_field, int first_frame, int stride) {
  int count = 0;
  for (int t = 0; t < length; ++t) {
    const bool fits = t - receptive_field + 1 >= 0;
    const bool on_grid = t >= first_frame && (t - first_frame) % stride == 0;
    if (fits && on_grid) ++count;
  }
  return count;
}

TEST(BatchForward, ContextArithmetic) {
  const auto& model = shared_model();
  Rng rng(1);
  EXPECT_EQ(make_plan(model.net, SkipMode::kNone).receptive_field(), 79);
  EXPECT_EQ(batch_forward(random_frames(79, 41, rng), model.net).size(), 1u);
  EXPECT_EQ(batch_forward(random_frames(78, 41, rng), model.net).size(), 0u);
  for (int length : {79, 80, 83, 120}) {
    const auto trace = batch_forward(random_frames(length, 41, rng), model.net);
    EXPECT_EQ(static_cast<int>(trace.size()), enumerate_outputs(length, 79, 78, 1)) << length;
    EXPECT_EQ(trace.samples.front().frame_index, 78);
  }
  EXPECT_EQ(batch_forward(random_frames(83, 41, rng), model.net).size(), 5u);
}

TEST(BatchForward, SkipModeGeometry) {
  const auto& model = shared_model();
  const auto s2 = make_plan(model.net, SkipMode::kStride2);
  EXPECT_EQ(s2.pool_members, 3);
  EXPECT_EQ(s2.receptive_field(), 79);
  const auto s4 = make_plan(model.net, SkipMode::kStride4);
  EXPECT_EQ(s4.pool_members, 1);
  EXPECT_EQ(s4.receptive_field(), 75);
  Rng rng(2);
  for (int length : {74, 75, 79, 100, 131}) {
    const auto frames = random_frames(length, 41, rng);
    EXPECT_EQ(static_cast<int>(batch_forward(frames, model.net, SkipMode::kStride2).size()),
              enumerate_outputs(length, 79, 78, 2));
    EXPECT_EQ(static_cast<int>(batch_forward(frames, model.net, SkipMode::kStride4).size()),
              enumerate_outputs(length, 75, 74, 4));
  }
}

TEST(PushFrame, WarmUpProducesNothing) {
  const auto& model = shared_model();
  StreamState state(model.net, SkipMode::kNone, true);
  Rng rng(4);
  const auto frames = random_frames(78, 41, rng);
  for (int i = 0; i < 78; ++i) {
    const auto step = push_frame(state, frames[i], model, 0.5);
    EXPECT_FALSE(step.sample.has_value());
    if (i < 10) {
      EXPECT_EQ(state.counter->phone_evals, 0) << i;
    }
  }
  EXPECT_EQ(state.counter->phone_evals, 68);
  EXPECT_EQ(state.counter->word_evals, 0);
}

TEST(PushFrame, RejectsUnnormalizedAndNonFinite) {
  const auto& model = shared_model();
  StreamState state(model.net);
  Rng rng(4);
  auto frame = random_frames(1, 41, rng)[0];
  frame.normalized = false;
  EXPECT_THROW(push_frame(state, frame, model, 0.5), InputError);
  frame.normalized = true;
  frame.values[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(push_frame(state, frame, model, 0.5), InputError);
  EXPECT_EQ(state.frame_counter, 0);
  frame.values.resize(40);
  EXPECT_THROW(push_frame(state, frame, model, 0.5), ShapeError);
}

void expect_traces_equal(const PosteriorTrace& a, const PosteriorTrace& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].frame_index, b.samples[i].frame_index);
    for (std::size_t c = 0; c < a.samples[i].raw.size(); ++c) {
      EXPECT_NEAR(a.samples[i].raw[c], b.samples[i].raw[c], tol);
      EXPECT_NEAR(a.samples[i].smoothed[c], b.samples[i].smoothed[c], tol);
    }
  }
}

TEST(PushFrame, StreamingMatchesBatchInEveryMode) {
  const auto& model = shared_model();
  Rng rng(10);
  const auto frames = random_frames(260, 41, rng);
  for (SkipMode mode : {SkipMode::kNone, SkipMode::kStride2, SkipMode::kStride4}) {
    StreamState state(model.net, mode);
    StreamOutput out;
    push_frames(state, frames, model, 0.5, out);
    expect_traces_equal(out.trace, batch_forward(frames, model.net, mode), 1e-6);
    for (const auto& s : out.trace.samples) {
      double sum = 0.0;
      for (float p : s.raw) sum += p;
      EXPECT_NEAR(sum, 1.0, 1e-5);
    }
  }
}

TEST(PushFrame, FillerOnlyModelNeverFires) {
  auto model = build_default(1, 3);
  auto& last = model.net.word.layers.back();
  std::fill(last.weights.begin(), last.weights.end(), 0.0f);
  last.bias = {-4.0f, 4.0f};
  StreamState state(model.net);
  Rng rng(5);
  StreamOutput out;
  push_frames(state, random_frames(300, 41, rng), model, 0.5, out);
  EXPECT_EQ(out.trace.size(), 222u);
  EXPECT_TRUE(out.events.empty());
}

TEST(SetSkipMode, Stride4PhoneEvaluationCount) {
  const auto& model = shared_model();
  Rng rng(13);
  for (int length : {11, 12, 50, 101, 203}) {
    StreamState state(model.net, SkipMode::kStride4, true);
    StreamOutput out;
    push_frames(state, random_frames(length, 41, rng), model, 0.5, out);
    // Enumerate evaluated positions: every 4th of the length - 10 positions.
    int evaluated = 0;
    for (int p = 0; p < length - 10; ++p) evaluated += (p % 4 == 0);
    EXPECT_EQ(state.counter->phone_evals, evaluated);
    EXPECT_EQ(state.counter->phone_evals, (length - 10 + 3) / 4);
  }
}

TEST(SetSkipMode, NoneMatchesDefaultPathAndSwitchRewarms) {
  const auto& model = shared_model();
  Rng rng(14);
  const auto frames = random_frames(150, 41, rng);
  StreamState a(model.net);
  StreamState b(model.net, SkipMode::kStride4);
  set_skip_mode(b, model.net, SkipMode::kNone);
  StreamOutput oa, ob;
  push_frames(a, frames, model, 0.5, oa);
  push_frames(b, frames, model, 0.5, ob);
  expect_traces_equal(oa.trace, ob.trace, 0.0);

  // Switching mid-stream keeps the splice but discards pooled state.
  StreamState c(model.net);
  StreamOutput oc;
  push_frames(c, std::span(frames).first(100), model, 0.5, oc);
  const auto before = oc.trace.size();
  set_skip_mode(c, model.net, SkipMode::kStride2);
  push_frames(c, std::span(frames).subspan(100, 50), model, 0.5, oc);
  EXPECT_EQ(oc.trace.size(), before);
  EXPECT_THROW(parse_skip_mode("3"), ConfigError);
}

PosteriorTrace random_trace(Rng& rng, std::size_t n, int classes) {
  PosteriorTrace t;
  t.num_classes = classes;
  std::vector<std::vector<float>> raw(n, std::vector<float>(static_cast<std::size_t>(classes)));
  for (auto& r : raw) {
    double sum = 0.0;
    for (auto& v : r) sum += (v = static_cast<float>(std::pow(rng.uniform(), 3.0)));
    for (auto& v : r) v = static_cast<float>(v / sum);
  }
  const auto sm = smooth_scores(raw, 9);
  for (std::size_t i = 0; i < n; ++i) t.samples.push_back({static_cast<std::int64_t>(i), raw[i], sm[i]});
  return t;
}

TEST(Trigger, RaisingThresholdNeverAddsEvents) {
  Rng rng(17);
  const std::vector<std::string> names = {"a", "b", "filler"};
  for (int trial = 0; trial < 50; ++trial) {
    const auto trace = random_trace(rng, 400, 3);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double th = 0.0; th <= 1.0001; th += 0.05) {
      const auto events = detect_events(trace, names, th);
      EXPECT_LE(events.size(), prev);
      prev = events.size();
      for (const auto& e : events) EXPECT_GE(e.smoothed_score, th);
    }
  }
}

TEST(Trigger, OneEventPerCandidateAndRefractoryMerge) {
  PosteriorTrace t;
  t.num_classes = 2;
  auto add = [&](std::int64_t f, double kw) {
    t.samples.push_back({f, {static_cast<float>(kw), static_cast<float>(1 - kw)}, {kw, 1 - kw}});
  };
  for (int f = 0; f < 10; ++f) add(f, 0.1);
  for (int f = 10; f < 20; ++f) add(f, 0.9);   // candidate, fires at 10
  for (int f = 20; f < 30; ++f) add(f, 0.2);   // gap of 10 frames
  for (int f = 30; f < 40; ++f) add(f, 0.95);  // same candidate (within 30)
  for (int f = 40; f < 100; ++f) add(f, 0.1);
  for (int f = 100; f < 105; ++f) add(f, 0.8);  // new candidate
  const auto events = detect_events(t, {"kw", "filler"}, 0.5);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].frame_index, 10);
  EXPECT_EQ(events[0].onset_frame, 10);
  EXPECT_EQ(events[1].frame_index, 100);
  EXPECT_TRUE(detect_events(t, {"kw", "filler"}, 1.0 + 1e-9).empty());
}

TEST(Cost, InstrumentedStreamMatchesAnalytic) {
  const auto& model = shared_model();
  Rng rng(30);
  const auto frames = random_frames(1200, 41, rng);
  for (SkipMode mode : {SkipMode::kNone, SkipMode::kStride2, SkipMode::kStride4}) {
    StreamState state(model.net, mode, true);
    StreamOutput out;
    push_frames(state, frames, model, 0.5, out);
    const auto measured = measured_mulps(state, model.net);
    const auto analytic = mulps(model.net, mode);
    EXPECT_NEAR(measured.total_mults_per_second / analytic.total_mults_per_second, 1.0, 0.02) << to_string(mode);
  }
  StreamState plain(model.net);
  EXPECT_THROW(measured_mulps(plain, model.net), UnsupportedError);
  StreamState empty(model.net, SkipMode::kNone, true);
  EXPECT_EQ(measured_mulps(empty, model.net).counted_mults, 0);
  EXPECT_EQ(measured_mulps(empty, model.net).total_mults_per_second, 0.0);
}

}  // namespace
}  // namespace kws
