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

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "kws/eval.hpp"
#include "kws/training.hpp"
#include "matching_oracle.hpp"
#include "test_util.hpp"

namespace kws {
namespace {

using kws::testing::random_frames;

DetectionEvent event_at(int keyword, std::int64_t onset) {
  return DetectionEvent{keyword, "k" + std::to_string(keyword), onset + 5, onset, 0.9};
}

GroundTruth truth_of(std::vector<KeywordSpan> spans, double seconds) {
  GroundTruth t;
  t.spans = std::move(spans);
  t.total_audio_seconds = seconds;
  t.keyword_names = {"k0", "k1", "filler"};
  return t;
}

using testing::brute_force_matches;

TEST(Score, OneEventPerSpanIsPerfect) {
  const auto truth = truth_of({{0, 100, 150}, {1, 300, 340}, {0, 500, 560}}, 60.0);
  const auto s = score_detections({event_at(0, 120), event_at(1, 345), event_at(0, 600)}, truth);
  EXPECT_EQ(s.frr_percent, 0.0);
  EXPECT_EQ(s.fa_per_hour, 0.0);
}

TEST(Score, NoEventsMissesEverything) {
  std::vector<KeywordSpan> spans;
  for (int i = 0; i < 10; ++i) spans.push_back({i % 2, i * 1000, i * 1000 + 60});
  const auto s = score_detections({}, truth_of(spans, 3600.0));
  EXPECT_EQ(s.frr_percent, 100.0);
  EXPECT_EQ(s.fa_per_hour, 0.0);
}

TEST(Score, WrongKeywordLateOrDuplicateCountAsFalseAlarms) {
  const auto truth = truth_of({{0, 100, 150}}, 1800.0);
  const auto s = score_detections({event_at(1, 120), event_at(0, 201), event_at(0, 110), event_at(0, 130)}, truth);
  EXPECT_EQ(s.matched, 1);
  EXPECT_EQ(s.false_alarms, 3);
  EXPECT_DOUBLE_EQ(s.fa_per_hour, 6.0);
  EXPECT_EQ(s.frr_percent, 0.0);
  // Exactly at the tolerance edge still matches.
  EXPECT_EQ(score_detections({event_at(0, 200)}, truth).matched, 1);
}

TEST(Score, ZeroDurationIsUndefined) {
  EXPECT_THROW(score_detections({}, truth_of({}, 0.0)), UndefinedRateError);
  EXPECT_THROW(score_detections({}, truth_of({{0, 50, 40}}, 10.0)), InputError);
}

TEST(Score, MatchesExhaustiveMatcher) {
  Rng rng(2024);
  for (int trial = 0; trial < 3000; ++trial) {
    const int n_spans = static_cast<int>(rng.range(0, 8));
    const int n_events = static_cast<int>(rng.range(0, 8));
    std::vector<KeywordSpan> spans;
    std::int64_t t = rng.range(0, 30);
    for (int i = 0; i < n_spans; ++i) {
      const std::int64_t len = rng.range(5, 60);
      spans.push_back({static_cast<int>(rng.below(2)), t, t + len});
      t += len + rng.range(0, 40);
    }
    std::vector<DetectionEvent> events;
    for (int i = 0; i < n_events; ++i) events.push_back(event_at(static_cast<int>(rng.below(2)), rng.range(0, static_cast<int>(t) + 80)));
    std::sort(events.begin(), events.end(),
              [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
    const int tol = static_cast<int>(rng.range(0, 60));
    const auto expected = brute_force_matches(events, spans, tol);
    const auto s = score_detections(events, truth_of(spans, 100.0), tol);
    ASSERT_EQ(s.matched, expected) << "trial " << trial;
    EXPECT_DOUBLE_EQ(s.fa_per_hour, static_cast<double>(n_events - expected) * 36.0);
  }
}

// Trace whose keyword-0 score follows the given smoothed values.
PosteriorTrace trace_from(const std::vector<double>& k0, const std::vector<double>& k1 = {}) {
  PosteriorTrace trace;
  trace.num_classes = 3;
  for (std::size_t i = 0; i < k0.size(); ++i) {
    const double b = k1.empty() ? 0.0 : k1[i];
    trace.samples.push_back({static_cast<std::int64_t>(78 + i), {}, {k0[i], b, 1.0 - k0[i] - b}});
  }
  return trace;
}

TEST(Roc, ThresholdAboveOneRejectsEverything) {
  std::vector<double> k0(400, 0.05);
  for (int i = 100; i < 130; ++i) k0[i] = 0.95;
  const auto truth = truth_of({{0, 150, 200}}, 4.0);
  const auto roc = roc_sweep(trace_from(k0), truth, {1.0 + 1e-9});
  ASSERT_EQ(roc.points.size(), 1u);
  EXPECT_EQ(roc.points[0].frr_percent, 100.0);
  EXPECT_EQ(roc.points[0].fa_per_hour, 0.0);
  const auto full = roc_sweep(trace_from(k0), truth, {1.0 + 1e-9, 0.9, 0.5});
  EXPECT_EQ(full.points[1].frr_percent, 0.0);
}

TEST(Roc, RejectsBadInput) {
  const auto truth = truth_of({}, 4.0);
  EXPECT_THROW(roc_sweep(PosteriorTrace{}, truth, {0.5}), InputError);
  EXPECT_THROW(roc_sweep(trace_from({0.2, 0.3}), truth, {0.3, 0.5}), ConfigError);
  EXPECT_THROW(roc_sweep(trace_from({0.2, 0.3}), truth, {}), ConfigError);
}

TEST(Roc, MonotoneOverRandomTraces) {
  Rng rng(7);
  const auto thresholds = default_thresholds();
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2000;
    std::vector<double> k0(n), k1(n);
    // Random bumps of random height over a low floor.
    for (int i = 0; i < n; ++i) k0[i] = k1[i] = 0.02;
    for (int b = 0; b < 25; ++b) {
      const int at = rng.range(0, n - 60);
      const int len = rng.range(3, 50);
      const double h = rng.uniform(0.2, 0.97);
      auto& target = rng.below(2) ? k0 : k1;
      for (int i = at; i < at + len; ++i) target[i] = std::min(0.97, std::max(target[i], h * (0.7 + 0.3 * rng.uniform())));
    }
    for (int i = 0; i < n; ++i) {
      if (k0[i] + k1[i] > 0.99) k1[i] = 0.99 - k0[i];
    }
    std::vector<KeywordSpan> spans;
    for (std::int64_t t = rng.range(0, 100); t + 60 < n + 78; t += rng.range(90, 300)) {
      spans.push_back({static_cast<int>(rng.below(2)), t, t + rng.range(10, 60)});
    }
    const auto roc = roc_sweep(trace_from(k0, k1), truth_of(spans, 20.0), thresholds);
    ASSERT_TRUE(roc.monotone()) << "trial " << trial;
  }
}

TEST(Roc, FrrAtInterpolatesBetweenBracketingPoints) {
  RocCurve c;
  c.points = {{0.9, 40.0, 0.0}, {0.8, 20.0, 0.25}, {0.7, 10.0, 1.0}, {0.6, 5.0, 3.0}};
  EXPECT_DOUBLE_EQ(c.frr_at(0.25), 20.0);
  EXPECT_DOUBLE_EQ(c.frr_at(0.5), 20.0 + (0.25 / 0.75) * (10.0 - 20.0));
  EXPECT_DOUBLE_EQ(c.frr_at(0.0), 40.0);
  EXPECT_DOUBLE_EQ(c.frr_at(10.0), 5.0);
  // Without a zero-FA point the curve starts from (0, 100).
  RocCurve d;
  d.points = {{0.5, 0.0, 2.0}};
  EXPECT_DOUBLE_EQ(d.frr_at(0.5), 75.0);
  EXPECT_THROW(RocCurve{}.frr_at(), InputError);
}

TEST(Classify, PicksPeakKeywordAboveThreshold) {
  std::vector<double> k0(50, 0.1), k1(50, 0.1);
  k1[20] = 0.7;
  k0[30] = 0.6;
  EXPECT_EQ(classify_trace(trace_from(k0, k1)), 1);
  EXPECT_EQ(classify_trace(trace_from(k0, k1), 0.8), 2);
  EXPECT_EQ(classify_trace(PosteriorTrace{.num_classes = 3, .samples = {}}), 2);
}

// Keyword k: +2 burst on a band of 10 dims for 40 frames.
LabeledFrameSet burst_stream(std::size_t frames, Rng& rng, std::vector<KeywordSpan>* spans_out) {
  LabeledFrameSet set;
  set.features = random_frames(frames, 41, rng, 0.5);
  std::vector<KeywordSpan> spans;
  for (std::int64_t t = 40; t + 140 < static_cast<std::int64_t>(frames); t += 40 + rng.range(60, 120)) {
    const int k = static_cast<int>(rng.below(2));
    spans.push_back({k, t, t + 40});
    for (std::int64_t f = t; f < t + 40; ++f) {
      for (int d = 0; d < 10; ++d) set.features[f].values[k == 0 ? d : 31 + d] += 2.0;
    }
  }
  set.word_labels = align_word_labels(static_cast<std::int64_t>(frames), spans, 79, 2);
  if (spans_out) *spans_out = spans;
  return set;
}

const TdnnModel& burst_model() {
  static const TdnnModel model = [] {
    Rng rng(10);
    LabeledCorpus train;
    for (int i = 0; i < 4; ++i) train.push_back(burst_stream(1500, rng, nullptr));
    TrainConfig cfg;
    cfg.epochs = 3;
    TdnnModel m = build_default(2, 5);
    m.net = train_word_stage(m.net.phone, Architecture{.num_classes = 3}, train, cfg);
    return m;
  }();
  return model;
}

std::vector<FeatureFrame> clip_with(int keyword, Rng& rng) {
  auto frames = random_frames(98, 41, rng, 0.5);
  if (keyword >= 0) {
    for (int f = 30; f < 70; ++f) {
      for (int d = 0; d < 10; ++d) frames[f].values[keyword == 0 ? d : 31 + d] += 2.0;
    }
  }
  return frames;
}

TEST(Classify, KeywordClipsAndSilence) {
  const auto& model = burst_model();
  Rng rng(31);
  EXPECT_EQ(classify_utterance(model, clip_with(0, rng)), 0);
  EXPECT_EQ(classify_utterance(model, clip_with(1, rng)), 1);
  EXPECT_EQ(classify_utterance(model, clip_with(-1, rng)), 2);
  std::vector<FeatureFrame> silence(98, FeatureFrame{0, std::vector<double>(41, 0.0), true});
  EXPECT_EQ(classify_utterance(model, silence), 2);
  // Too short for the receptive field.
  EXPECT_EQ(classify_utterance(model, std::span(silence).first(50)), 2);
}

TEST(Classify, MatchesOfflineClassifierOnStreamedTrace) {
  const auto& model = burst_model();
  Rng rng(32);
  int agree = 0, correct = 0;
  for (int i = 0; i < 30; ++i) {
    const int truth = static_cast<int>(rng.below(3)) - 1;
    const auto clip = clip_with(truth, rng);
    StreamState state(model.net, SkipMode::kNone);
    StreamOutput out;
    push_frames(state, clip, model, 0.5, out);
    // Offline classifier: peak per keyword over the exported trace.
    double p0 = 0, p1 = 0;
    for (const auto& s : out.trace.samples) {
      p0 = std::max(p0, s.smoothed[0]);
      p1 = std::max(p1, s.smoothed[1]);
    }
    const int offline = std::max(p0, p1) < 0.5 ? 2 : (p1 > p0 ? 1 : 0);
    const int got = classify_utterance(model, clip);
    agree += got == offline;
    correct += got == (truth < 0 ? 2 : truth);
  }
  EXPECT_EQ(agree, 30);
  EXPECT_GE(correct, 28);
}

AudioStream tone(std::size_t n, float amp) {
  AudioStream a;
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.samples[i] = amp * static_cast<float>(std::sin(0.05 * static_cast<double>(i)));
  return a;
}

TEST(Derivative, TwoClipsOffsetBookkeeping) {
  std::vector<LabeledClip> clips{{tone(16000, 0.1f), 0}, {tone(8000, 0.2f), 1}};
  MixSpec spec;
  spec.amplitude_low_db = spec.amplitude_high_db = 0.0;
  spec.gap_min_seconds = spec.gap_max_seconds = 0.25;
  spec.seed = 5;
  const auto a = make_derivative_stream(clips, spec);
  const auto b = make_derivative_stream(clips, spec);
  EXPECT_EQ(a.audio.samples, b.audio.samples);
  ASSERT_EQ(a.sample_spans.size(), 2u);
  const auto len1 = static_cast<std::int64_t>(clips[a.order[0]].audio.samples.size());
  const auto len2 = static_cast<std::int64_t>(clips[a.order[1]].audio.samples.size());
  EXPECT_EQ(a.sample_spans[0].begin, 0);
  EXPECT_EQ(a.sample_spans[0].end, len1);
  EXPECT_EQ(a.sample_spans[1].begin, len1 + 4000);
  EXPECT_EQ(a.sample_spans[1].end, len1 + 4000 + len2);
  EXPECT_EQ(a.truth.spans[0].end_frame, len1 / 160);
  EXPECT_DOUBLE_EQ(a.truth.total_audio_seconds, static_cast<double>(len1 + 4000 + len2) / 16000.0);
  a.truth.validate();
}

TEST(Derivative, GainInDecibels) {
  std::vector<LabeledClip> clips{{tone(4000, 0.8f), 0}};
  MixSpec spec;
  spec.amplitude_low_db = spec.amplitude_high_db = 20.0 * std::log10(0.5);
  const auto out = make_derivative_stream(clips, spec);
  for (std::size_t i = 0; i < 4000; ++i) EXPECT_NEAR(out.audio.samples[i], 0.5f * clips[0].audio.samples[i], 1e-6);
  spec.amplitude_low_db = spec.amplitude_high_db = -6.02;
  const auto rounded = make_derivative_stream(clips, spec);
  for (std::size_t i = 0; i < 4000; ++i) EXPECT_NEAR(rounded.audio.samples[i], 0.5f * clips[0].audio.samples[i], 1e-4);
}

TEST(Derivative, LengthIsClipsPlusGaps) {
  Rng rng(3);
  std::vector<LabeledClip> clips;
  std::size_t total = 0;
  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<std::size_t>(rng.range(2000, 20000));
    clips.push_back({tone(n, 0.1f), i % 3 == 0 ? -1 : i % 2});
    total += n;
  }
  MixSpec spec;
  spec.gap_min_seconds = 0.0;
  spec.gap_max_seconds = 0.5;
  spec.seed = 9;
  const auto out = make_derivative_stream(clips, spec);
  // Recover the gaps: total length minus clip lengths equals the silence inserted.
  std::size_t placed = 0;
  for (auto i : out.order) placed += clips[i].audio.samples.size();
  EXPECT_EQ(placed, total);
  std::size_t gap_sum = 0;
  Rng replay(spec.seed);
  std::vector<std::size_t> order(100);
  std::iota(order.begin(), order.end(), 0);
  replay.shuffle(order);
  EXPECT_EQ(order, out.order);
  for (int i = 0; i < 100; ++i) {
    const auto g = static_cast<std::size_t>(std::llround(replay.uniform(0.0, 0.5) * 16000));
    if (i > 0) gap_sum += g;
  }
  EXPECT_EQ(out.audio.samples.size(), total + gap_sum);
  EXPECT_EQ(out.truth.spans.size(), 66u);  // i % 3 == 0 are fillers
  out.truth.validate();
  EXPECT_THROW(make_derivative_stream({}, spec), InputError);
  spec.amplitude_low_db = 5;
  spec.amplitude_high_db = -5;
  EXPECT_THROW(make_derivative_stream(clips, spec), ConfigError);
}

TEST(Mix, HighSnrLeavesCleanSignal) {
  Rng rng(1);
  const auto clean = tone(16000, 0.3f);
  const auto noise = white_noise(16000, rng, 0.5);
  const auto out = mix_noise(clean, noise, 120.0);
  for (std::size_t i = 0; i < clean.samples.size(); ++i) EXPECT_NEAR(out.audio.samples[i], clean.samples[i], 1e-5);
}

TEST(Mix, EqualPowerAtZeroDbHasUnitScale) {
  Rng rng(2);
  const auto clean = white_noise(20000, rng, 0.2);
  AudioStream noise = clean;
  std::reverse(noise.samples.begin(), noise.samples.end());
  EXPECT_NEAR(mix_noise(clean, noise, 0.0).noise_scale, 1.0, 1e-9);
}

TEST(Mix, WhiteNoiseAtTenDb) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const auto clean = tone(48000, 0.3f);
    const auto noise = white_noise(48000, rng, 0.5);
    const auto out = mix_noise(clean, noise, 10.0, seed);
    ASSERT_EQ(out.clipped_fraction, 0.0);
    EXPECT_NEAR(measure_snr_db(clean, out.audio), 10.0, 0.1);
  }
}

TEST(Mix, ShortNoiseLoopsWithSeededOffset) {
  Rng rng(4);
  const auto clean = tone(30000, 0.3f);
  const auto noise = pink_noise(7000, rng, 0.3);
  const auto a = mix_noise(clean, noise, 5.0, 11);
  const auto b = mix_noise(clean, noise, 5.0, 11);
  EXPECT_EQ(a.audio.samples, b.audio.samples);
  EXPECT_LT(a.noise_offset, 7000u);
  EXPECT_NEAR(measure_snr_db(clean, a.audio), 5.0, 0.1);
  // Residual repeats with the noise period.
  const double r0 = a.audio.samples[100] - clean.samples[100];
  const double r1 = a.audio.samples[7100] - clean.samples[7100];
  EXPECT_NEAR(r0, r1, 1e-6);
}

TEST(Mix, ErrorsAndClipping) {
  Rng rng(5);
  const auto noise = white_noise(1000, rng, 0.5);
  AudioStream silent;
  silent.samples.assign(1000, 0.0f);
  EXPECT_THROW(mix_noise(silent, noise, 10.0), UndefinedRateError);
  EXPECT_THROW(mix_noise(tone(1000, 0.3f), AudioStream{}, 10.0), InputError);
  EXPECT_THROW(mix_noise(tone(1000, 0.3f), silent, 10.0), UndefinedRateError);
  const auto loud = mix_noise(tone(1000, 0.99f), noise, -10.0);
  EXPECT_GT(loud.clipped_fraction, 0.0);
  for (float s : loud.audio.samples) EXPECT_LE(std::abs(s), 1.0f);
}

TEST(Noise, PinkNoiseHasMoreLowFrequencyEnergy) {
  Rng rng(6);
  const auto pink = pink_noise(1 << 15, rng, 0.5);
  // First difference acts as a high-pass; white noise would keep about twice
  // its power, pink noise keeps far less.
  double p = 0, d = 0;
  for (std::size_t i = 1; i < pink.samples.size(); ++i) {
    p += pink.samples[i] * pink.samples[i];
    const double diff = pink.samples[i] - pink.samples[i - 1];
    d += diff * diff;
  }
  EXPECT_LT(d / p, 1.0);
  Rng again(6);
  EXPECT_EQ(pink_noise(1 << 15, again, 0.5).samples, pink.samples);
}

}  // namespace
}  // namespace kws
