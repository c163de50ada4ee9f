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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kws/eval.hpp"
#include "kws/features.hpp"
#include "kws/inference.hpp"
#include "kws/model.hpp"
#include "kws/synth.hpp"
#include "kws/training.hpp"

// Two-stage recipe on harness data: phone pretraining, then keyword training
// on derivative streams, then evaluation on held-out streams.
namespace kws {

inline LabeledFrameSet phone_frame_set(const synth::Utterance& u, const FrontendConfig& fc) {
  LabeledFrameSet set;
  set.features = extract_fbank(u.audio, fc);
  set.phone_labels = synth::frame_labels(u, fc);
  set.phone_labels.resize(set.features.size(), kUnlabeled);
  return set;
}

inline LabeledFrameSet word_frame_set(const AudioStream& audio, const GroundTruth& truth, const FrontendConfig& fc,
                                      int receptive_field, int filler_index) {
  LabeledFrameSet set;
  set.features = extract_fbank(audio, fc);
  set.word_labels = align_word_labels(static_cast<std::int64_t>(set.features.size()), truth.spans, receptive_field,
                                      filler_index);
  return set;
}

inline FeatureNormalizer fit_corpus_normalizer(const std::vector<const LabeledCorpus*>& corpora) {
  std::vector<std::span<const FeatureFrame>> parts;
  for (const auto* c : corpora) {
    for (const auto& s : *c) parts.emplace_back(s.features);
  }
  return fit_normalizer(parts);
}

inline void normalize_corpus(LabeledCorpus& corpus, const FeatureNormalizer& norm) {
  for (auto& s : corpus) {
    for (auto& f : s.features) f = norm.apply(f);
  }
}

struct EvalStream {
  std::vector<FeatureFrame> features;  // normalized
  GroundTruth truth;
};

struct PreparedData {
  FrontendConfig frontend;
  FeatureNormalizer normalizer;
  std::vector<std::string> class_names;
  LabeledCorpus phone_train;
  LabeledCorpus word_train;
  LabeledCorpus word_dev;  // held-out labeled outputs for accuracy
  std::vector<EvalStream> test;
};

// Generates and featurizes everything. The normalizer is fit on the training
// portions only.
inline PreparedData prepare_harness_data(const synth::Harness& h, double dev_seconds = 300.0) {
  PreparedData d;
  d.class_names = h.class_names();
  const int filler = static_cast<int>(d.class_names.size()) - 1;
  const int field = build_default(h.config.num_keywords).net.receptive_field();
  Rng seeds(h.config.seed ^ 0x5eedULL);
  for (const auto& u : h.phone_corpus(h.config.phone_corpus_seconds, seeds.below(1ull << 62))) {
    d.phone_train.push_back(phone_frame_set(u, d.frontend));
  }
  for (const auto& s : h.streams(h.config.train_seconds, false, seeds.below(1ull << 62))) {
    d.word_train.push_back(word_frame_set(s.audio, s.truth, d.frontend, field, filler));
  }
  d.normalizer = fit_corpus_normalizer({&d.phone_train, &d.word_train});
  normalize_corpus(d.phone_train, d.normalizer);
  normalize_corpus(d.word_train, d.normalizer);
  const std::uint64_t dev_seed = seeds.below(1ull << 62);
  if (dev_seconds > 0.0) {
    for (const auto& s : h.streams(dev_seconds, true, dev_seed)) {
      d.word_dev.push_back(word_frame_set(s.audio, s.truth, d.frontend, field, filler));
    }
    normalize_corpus(d.word_dev, d.normalizer);
  }
  for (const auto& s : h.streams(h.config.test_seconds, true, seeds.below(1ull << 62))) {
    EvalStream e;
    e.features = d.normalizer.apply(extract_fbank(s.audio, d.frontend));
    e.truth = s.truth;
    d.test.push_back(std::move(e));
  }
  return d;
}

// ROC pooled over several streams: matches and false alarms are summed, and
// rates use the total duration.
inline RocCurve pooled_roc(const std::vector<PosteriorTrace>& traces, const std::vector<GroundTruth>& truths,
                           const std::vector<double>& thresholds, int tolerance_frames = kMatchToleranceFrames) {
  if (traces.size() != truths.size()) throw ShapeError("one ground truth per trace required");
  if (traces.empty()) throw InputError("no traces to evaluate");
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] < thresholds[i - 1])) throw ConfigError("thresholds must be strictly descending");
  }
  double seconds = 0.0;
  std::int64_t spans = 0;
  for (const auto& t : truths) {
    seconds += t.total_audio_seconds;
    spans += static_cast<std::int64_t>(t.spans.size());
  }
  if (!(seconds > 0.0)) throw UndefinedRateError("false alarms per hour undefined for zero-length audio");
  RocCurve curve;
  for (double th : thresholds) {
    std::int64_t matched = 0, false_alarms = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const auto events = detect_events(traces[i], truths[i].keyword_names, th);
      const auto m = max_matching(events, truths[i].spans, tolerance_frames);
      matched += m;
      false_alarms += static_cast<std::int64_t>(events.size()) - m;
    }
    const double frr = spans == 0 ? 0.0 : 100.0 * static_cast<double>(spans - matched) / static_cast<double>(spans);
    curve.points.push_back({th, frr, static_cast<double>(false_alarms) / (seconds / 3600.0)});
  }
  return curve;
}

inline RocCurve evaluate_streams(const TdnnNetwork<float>& net, const std::vector<EvalStream>& streams, SkipMode mode,
                                 const std::vector<double>& thresholds = default_thresholds()) {
  std::vector<PosteriorTrace> traces;
  std::vector<GroundTruth> truths;
  for (const auto& s : streams) {
    traces.push_back(batch_forward(s.features, net, mode));
    truths.push_back(s.truth);
  }
  return pooled_roc(traces, truths, thresholds);
}

// Mean per-class recall over held-out word outputs; insensitive to the
// filler majority.
inline double balanced_accuracy(const TdnnNetwork<float>& net, const LabeledCorpus& corpus,
                                SkipMode mode = SkipMode::kNone) {
  const int classes = net.num_classes();
  std::vector<std::int64_t> hit(static_cast<std::size_t>(classes), 0), total(static_cast<std::size_t>(classes), 0);
  for (const auto& set : corpus) {
    const auto trace = batch_forward(set.features, net, mode);
    for (const auto& s : trace.samples) {
      const int y = set.word_labels[static_cast<std::size_t>(s.frame_index)];
      if (y == kUnlabeled) continue;
      const auto top = std::max_element(s.raw.begin(), s.raw.end()) - s.raw.begin();
      ++total[static_cast<std::size_t>(y)];
      hit[static_cast<std::size_t>(y)] += top == y;
    }
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    if (total[c] == 0) continue;
    sum += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
    ++present;
  }
  return present ? sum / present : 0.0;
}

inline TdnnModel assemble_model(TdnnNetwork<float> net, const PreparedData& d) {
  TdnnModel m;
  m.net = std::move(net);
  m.frontend = d.frontend;
  m.normalizer = d.normalizer;
  m.keyword_names = d.class_names;
  m.validate();
  return m;
}

}  // namespace kws
