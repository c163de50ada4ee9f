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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kws/error.hpp"
#include "kws/features.hpp"
#include "kws/model.hpp"
#include "kws/ring_buffer.hpp"

namespace kws {

// Frame skipping: the phone stage runs on every stride-th phone position and
// the keyword stage on every stride-th frame.
enum class SkipMode { kNone = 1, kStride2 = 2, kStride4 = 4 };

inline int stride_of(SkipMode mode) { return static_cast<int>(mode); }

inline std::string to_string(SkipMode mode) {
  switch (mode) {
    case SkipMode::kNone: return "none";
    case SkipMode::kStride2: return "stride2";
    case SkipMode::kStride4: return "stride4";
  }
  return "unknown";
}

inline SkipMode parse_skip_mode(std::string_view s) {
  if (s == "none" || s == "1" || s == "0") return SkipMode::kNone;
  if (s == "2" || s == "stride2" || s == "skip2") return SkipMode::kStride2;
  if (s == "4" || s == "stride4" || s == "skip4") return SkipMode::kStride4;
  throw ConfigError("unknown skip mode '" + std::string(s) + "' (expected none, 2 or 4)");
}

// Evaluation schedule for one network and skip mode. Positions index phone
// outputs: position p splices frames [p, p + splice_width).
//
// A pooled slot ending at position q takes the elementwise max over the
// computed phone vectors in [q - pool_size + 1, q]. When the phone stage
// already runs at the pooling stride there is nothing left to pool, and
// each slot is a single phone vector. A keyword output at position p reads
// pooled_context slots ending at p, p - pool_stride, p - 2 * pool_stride, ...
struct EvalPlan {
  int stride = 1;
  int pool_members = 5;
  int slot_spacing = 4;  // computed phone vectors between consecutive slots
  int pooled_context = 17;
  int splice_width = 11;

  int pool_stride() const { return slot_spacing * stride; }
  int phone_window() const { return (pooled_context - 1) * pool_stride() + (pool_members - 1) * stride + 1; }
  int first_output_position() const { return phone_window() - 1; }
  int receptive_field() const { return phone_window() + splice_width - 1; }
  std::int64_t frame_of_position(std::int64_t position) const { return position + splice_width - 1; }
  bool is_output_position(std::int64_t p) const { return p >= first_output_position() && p % stride == 0; }
};

template <typename S>
EvalPlan make_plan(const TdnnNetwork<S>& net, SkipMode mode) {
  const int stride = stride_of(mode);
  if (net.word.pool_stride % stride != 0) {
    throw ConfigError("skip mode " + to_string(mode) + " needs a pooling stride divisible by " +
                      std::to_string(stride));
  }
  EvalPlan plan;
  plan.stride = stride;
  plan.pool_members = stride >= net.word.pool_stride ? 1 : (net.word.pool_size - 1) / stride + 1;
  plan.slot_spacing = net.word.pool_stride / stride;
  plan.pooled_context = net.word.pooled_context;
  plan.splice_width = net.phone.splice_width();
  return plan;
}

// y = act(b + x W). Adds in_dim * out_dim to *mults when counting.
template <typename S>
void dense_forward(const DenseLayer<S>& layer, std::span<const S> in, std::span<S> out,
                   std::int64_t* mults = nullptr) {
  const int n_out = layer.out_dim;
  S* y = out.data();
  std::copy(layer.bias.begin(), layer.bias.end(), y);
  const S* w = layer.weights.data();
  for (int i = 0; i < layer.in_dim; ++i, w += n_out) {
    const S x = in[i];
    for (int o = 0; o < n_out; ++o) y[o] += x * w[o];
  }
  if (layer.activation == Activation::kRelu) {
    for (int o = 0; o < n_out; ++o) y[o] = y[o] > S(0) ? y[o] : S(0);
  }
  if (mults != nullptr) *mults += layer.weight_count();
}

// Reusable ping-pong buffers for chained dense layers.
template <typename S>
struct LayerScratch {
  std::vector<S> a;
  std::vector<S> b;
};

template <typename S>
void run_layers(const std::vector<DenseLayer<S>>& layers, std::span<const S> in, std::vector<S>& out,
                LayerScratch<S>& scratch, std::int64_t* mults = nullptr) {
  std::span<const S> cur = in;
  std::vector<S>* bufs[2] = {&scratch.a, &scratch.b};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    std::vector<S>& dst = (i + 1 == layers.size()) ? out : *bufs[i % 2];
    dst.resize(static_cast<std::size_t>(layers[i].out_dim));
    dense_forward(layers[i], cur, std::span<S>(dst), mults);
    cur = dst;
  }
}

template <typename S>
std::vector<S> softmax(std::span<const S> logits) {
  double top = -std::numeric_limits<double>::infinity();
  for (S v : logits) top = std::max(top, static_cast<double>(v));
  std::vector<double> e(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - top);
    sum += e[i];
  }
  std::vector<S> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<S>(e[i] / sum);
  return out;
}

namespace inference_detail {

template <typename S>
void check_finite(std::span<const S> v, const char* what) {
  for (S x : v) {
    if (!std::isfinite(static_cast<double>(x))) throw InputError(std::string(what) + " contains a non-finite value");
  }
}

}  // namespace inference_detail

// Spliced context (feature_dim * splice_width) -> phone vector.
template <typename S>
std::vector<S> phone_forward(std::span<const S> spliced, const TdnnNetwork<S>& net) {
  const auto expected = static_cast<std::size_t>(net.feature_dim * net.phone.splice_width());
  if (spliced.size() != expected) {
    throw ShapeError("phone stage expects " + std::to_string(expected) + " inputs, got " +
                     std::to_string(spliced.size()));
  }
  inference_detail::check_finite(spliced, "phone-stage input");
  std::vector<S> out;
  LayerScratch<S> scratch;
  run_layers(net.phone.layers, spliced, out, scratch);
  return out;
}

// Elementwise max over a window; on ties the earliest vector wins.
template <typename S>
void pool_max_into(std::span<const std::vector<S>* const> window, std::span<S> out) {
  std::copy(window[0]->begin(), window[0]->end(), out.begin());
  for (std::size_t m = 1; m < window.size(); ++m) {
    const auto& v = *window[m];
    for (std::size_t d = 0; d < out.size(); ++d) {
      if (v[d] > out[d]) out[d] = v[d];
    }
  }
}

template <typename S>
std::vector<S> pool_max(std::span<const std::vector<S>> window, std::size_t expected_length) {
  if (window.size() != expected_length) {
    throw ShapeError("pooling window must hold " + std::to_string(expected_length) + " vectors, got " +
                     std::to_string(window.size()));
  }
  if (window.empty()) return {};
  std::vector<const std::vector<S>*> ptrs;
  for (const auto& v : window) {
    if (v.size() != window[0].size()) throw ShapeError("pooling window vectors differ in length");
    ptrs.push_back(&v);
  }
  std::vector<S> out(window[0].size());
  pool_max_into<S>(ptrs, out);
  return out;
}

// Flattened pooled window (oldest slot first) -> class probabilities.
template <typename S>
std::vector<S> word_forward(std::span<const S> pooled_window, const TdnnNetwork<S>& net) {
  const auto expected = static_cast<std::size_t>(net.phone_dim() * net.word.pooled_context);
  if (pooled_window.size() != expected) {
    throw ShapeError("keyword stage expects " + std::to_string(expected) + " inputs, got " +
                     std::to_string(pooled_window.size()));
  }
  inference_detail::check_finite(pooled_window, "keyword-stage input");
  std::vector<S> logits;
  LayerScratch<S> scratch;
  run_layers(net.word.layers, pooled_window, logits, scratch);
  return softmax<S>(logits);
}

// Causal moving average: out[t] is the mean of rows max(0, t-width+1)..t.
// Rows are summed oldest first in double precision.
template <typename Rows>
std::vector<double> window_mean(const Rows& rows, std::size_t count, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& r = rows(i);
    for (std::size_t c = 0; c < dim; ++c) out[c] += static_cast<double>(r[c]);
  }
  for (double& v : out) v /= static_cast<double>(count);
  return out;
}

inline constexpr int kSmoothingWidth = 9;

inline std::vector<std::vector<double>> smooth_scores(const std::vector<std::vector<float>>& raw,
                                                      int width = kSmoothingWidth) {
  if (width < 1) throw ConfigError("smoothing width must be at least 1");
  std::vector<std::vector<double>> out;
  out.reserve(raw.size());
  for (std::size_t t = 0; t < raw.size(); ++t) {
    const std::size_t begin = t + 1 >= static_cast<std::size_t>(width) ? t + 1 - width : 0;
    const std::size_t count = t + 1 - begin;
    out.push_back(window_mean([&](std::size_t i) -> const std::vector<float>& { return raw[begin + i]; }, count,
                              raw[t].size()));
  }
  return out;
}

struct PosteriorSample {
  std::int64_t frame_index = 0;
  std::vector<float> raw;
  std::vector<double> smoothed;
};

struct PosteriorTrace {
  int num_classes = 0;
  std::vector<PosteriorSample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
};

struct DetectionEvent {
  int keyword_index = 0;
  std::string keyword_name;
  std::int64_t frame_index = 0;  // output frame at which the trigger fired
  std::int64_t onset_frame = 0;  // first frame of the candidate that fired
  double smoothed_score = 0.0;
};

inline constexpr int kRefractoryFrames = 30;

// Threshold trigger over smoothed posteriors.
//
// A keyword candidate is a run of outputs in which that keyword is the top
// class; runs separated by at most `refractory_frames` are one candidate.
// Candidates do not depend on the threshold. A candidate fires once, at its
// first output whose smoothed score reaches the threshold, so the events for
// a higher threshold are always a subset of those for a lower one.
class KeywordTrigger {
 public:
  explicit KeywordTrigger(int num_classes = 2, int refractory_frames = kRefractoryFrames)
      : num_classes_(num_classes), refractory_(refractory_frames), state_(static_cast<std::size_t>(num_classes)) {}

  int num_classes() const { return num_classes_; }
  int refractory_frames() const { return refractory_; }

  void reset() { std::fill(state_.begin(), state_.end(), Candidate{}); }

  // Returns the firing keyword index, if any.
  std::optional<int> update(std::int64_t frame, std::span<const double> smoothed, double threshold) {
    int top = 0;
    for (int c = 1; c < num_classes_; ++c) {
      if (smoothed[c] > smoothed[top]) top = c;
    }
    if (top == num_classes_ - 1) return std::nullopt;
    Candidate& cand = state_[static_cast<std::size_t>(top)];
    if (!cand.active || frame - cand.last_top_frame > refractory_) {
      cand.active = true;
      cand.fired = false;
      cand.onset = frame;
    }
    cand.last_top_frame = frame;
    if (!cand.fired && smoothed[top] >= threshold) {
      cand.fired = true;
      return top;
    }
    return std::nullopt;
  }

  std::int64_t onset(int keyword) const { return state_[static_cast<std::size_t>(keyword)].onset; }

 private:
  struct Candidate {
    bool active = false;
    bool fired = false;
    std::int64_t onset = 0;
    std::int64_t last_top_frame = 0;
  };

  int num_classes_;
  int refractory_;
  std::vector<Candidate> state_;
};

inline std::vector<DetectionEvent> detect_events(const PosteriorTrace& trace, const std::vector<std::string>& names,
                                                 double threshold, int refractory_frames = kRefractoryFrames) {
  KeywordTrigger trigger(trace.num_classes, refractory_frames);
  std::vector<DetectionEvent> events;
  for (const auto& s : trace.samples) {
    if (const auto k = trigger.update(s.frame_index, s.smoothed, threshold)) {
      events.push_back(DetectionEvent{*k, *k < static_cast<int>(names.size()) ? names[*k] : std::to_string(*k),
                                      s.frame_index, trigger.onset(*k), s.smoothed[*k]});
    }
  }
  return events;
}

// Reference evaluation without caching: every phone vector, pooled slot and
// keyword output is computed directly from the feature array.
inline PosteriorTrace batch_forward(std::span<const FeatureFrame> features, const TdnnNetwork<float>& net,
                                    SkipMode mode = SkipMode::kNone, int smoothing_width = kSmoothingWidth) {
  const EvalPlan plan = make_plan(net, mode);
  PosteriorTrace trace;
  trace.num_classes = net.num_classes();
  const auto length = static_cast<std::int64_t>(features.size());
  if (length < plan.receptive_field()) return trace;

  const int dim = net.feature_dim;
  const std::int64_t positions = length - plan.splice_width + 1;
  std::vector<std::vector<float>> phone(static_cast<std::size_t>(positions));
  std::vector<float> spliced(static_cast<std::size_t>(dim * plan.splice_width));
  LayerScratch<float> scratch;
  for (std::int64_t p = 0; p < positions; p += plan.stride) {
    for (int f = 0; f < plan.splice_width; ++f) {
      const auto& values = features[p + f].values;
      if (values.size() != static_cast<std::size_t>(dim)) throw ShapeError("feature dimension mismatch");
      for (int d = 0; d < dim; ++d) {
        const auto v = static_cast<float>(values[d]);
        if (!std::isfinite(v)) throw InputError("feature frame contains a non-finite value");
        spliced[f * dim + d] = v;
      }
    }
    run_layers(net.phone.layers, std::span<const float>(spliced), phone[p], scratch);
  }

  const auto phone_dim = static_cast<std::size_t>(net.phone_dim());
  std::vector<float> word_in(phone_dim * plan.pooled_context);
  std::vector<const std::vector<float>*> members(static_cast<std::size_t>(plan.pool_members));
  std::vector<std::vector<float>> raw;
  std::vector<std::int64_t> frames;
  for (std::int64_t p = plan.first_output_position(); p < positions; p += plan.stride) {
    for (int j = 0; j < plan.pooled_context; ++j) {
      const std::int64_t q = p - static_cast<std::int64_t>(plan.pooled_context - 1 - j) * plan.pool_stride();
      for (int m = 0; m < plan.pool_members; ++m) {
        members[m] = &phone[q - static_cast<std::int64_t>(plan.pool_members - 1 - m) * plan.stride];
      }
      pool_max_into<float>(members, std::span<float>(word_in).subspan(j * phone_dim, phone_dim));
    }
    std::vector<float> logits;
    run_layers(net.word.layers, std::span<const float>(word_in), logits, scratch);
    raw.push_back(softmax<float>(logits));
    frames.push_back(plan.frame_of_position(p));
  }
  const auto smoothed = smooth_scores(raw, smoothing_width);
  trace.samples.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    trace.samples[i] = PosteriorSample{frames[i], std::move(raw[i]), smoothed[i]};
  }
  return trace;
}

// Multiplication counter attached to a stream (see cost.hpp).
struct MultCounter {
  std::int64_t frames = 0;
  std::int64_t phone_evals = 0;
  std::int64_t word_evals = 0;
  std::int64_t phone_mults = 0;
  std::int64_t word_mults = 0;
  // Snapshot taken right after the first keyword output.
  std::int64_t frames_at_first_output = -1;
  std::int64_t mults_at_first_output = 0;
  std::int64_t phone_evals_at_first_output = 0;
  std::int64_t word_evals_at_first_output = 0;

  std::int64_t mults() const { return phone_mults + word_mults; }
};

// Everything needed to run the network incrementally over one stream. Each
// ring holds exactly what the next step of its level needs, so a new frame
// costs at most one phone evaluation and one keyword evaluation.
struct StreamState {
  RingBuffer<std::vector<float>> feature_ring;  // last splice_width frames
  RingBuffer<std::vector<float>> phone_ring;    // computed phone vectors feeding one pooled slot
  RingBuffer<std::vector<float>> pooled_ring;   // pooled slots spanning one keyword window
  RingBuffer<std::vector<float>> score_ring;    // last smoothing_width raw posteriors
  std::int64_t frame_counter = 0;
  SkipMode skip_mode = SkipMode::kNone;
  EvalPlan plan;
  KeywordTrigger trigger;
  std::optional<MultCounter> counter;

  // Scratch, reused across frames.
  std::vector<float> spliced;
  std::vector<float> word_in;
  std::vector<float> logits;
  LayerScratch<float> layer_scratch;

  StreamState(const TdnnNetwork<float>& net, SkipMode mode = SkipMode::kNone, bool count_mults = false,
              int smoothing_width = kSmoothingWidth, int refractory_frames = kRefractoryFrames)
      : feature_ring(static_cast<std::size_t>(net.phone.splice_width())),
        score_ring(static_cast<std::size_t>(smoothing_width)),
        trigger(net.num_classes(), refractory_frames) {
    if (smoothing_width < 1) throw ConfigError("smoothing width must be at least 1");
    net.validate();
    if (count_mults) counter.emplace();
    configure(net, mode);
  }

  // Switches skip mode between frames. Cached phone, pooled and score state
  // is discarded, so keyword outputs resume after a fresh warm-up.
  void set_skip_mode(const TdnnNetwork<float>& net, SkipMode mode) { configure(net, mode); }

  void reset() {
    feature_ring.clear();
    phone_ring.clear();
    pooled_ring.clear();
    score_ring.clear();
    trigger.reset();
    frame_counter = 0;
    if (counter) counter.emplace();
  }

 private:
  void configure(const TdnnNetwork<float>& net, SkipMode mode) {
    plan = make_plan(net, mode);
    skip_mode = mode;
    phone_ring = RingBuffer<std::vector<float>>(static_cast<std::size_t>(plan.pool_members));
    pooled_ring =
        RingBuffer<std::vector<float>>(static_cast<std::size_t>((plan.pooled_context - 1) * plan.slot_spacing + 1));
    score_ring.clear();
    trigger.reset();
  }
};

inline void set_skip_mode(StreamState& state, const TdnnNetwork<float>& net, SkipMode mode) {
  state.set_skip_mode(net, mode);
}

struct StepResult {
  std::optional<PosteriorSample> sample;
  std::optional<DetectionEvent> event;
};

// Consumes one normalized frame. Once the splice is full, a phone vector is
// computed on positions the skip mode keeps; a pooled slot follows as soon
// as its members are available, and a keyword output once the pooled window
// is full.
inline StepResult push_frame(StreamState& state, const FeatureFrame& frame, const TdnnModel& model, double threshold) {
  const auto& net = model.net;
  const int dim = net.feature_dim;
  if (!frame.normalized) throw InputError("frame " + std::to_string(frame.index) + " is not normalized");
  if (frame.values.size() != static_cast<std::size_t>(dim)) {
    throw ShapeError("frame has " + std::to_string(frame.values.size()) + " values, model expects " +
                     std::to_string(dim));
  }
  for (double v : frame.values) {
    if (!std::isfinite(static_cast<float>(v))) {
      throw InputError("frame " + std::to_string(frame.index) + " contains a non-finite value");
    }
  }
  auto& slot = state.feature_ring.push_slot();
  slot.resize(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) slot[d] = static_cast<float>(frame.values[d]);
  const std::int64_t current = state.frame_counter++;
  MultCounter* counter = state.counter ? &*state.counter : nullptr;
  if (counter) ++counter->frames;

  StepResult result;
  const EvalPlan& plan = state.plan;
  if (!state.feature_ring.full()) return result;
  const std::int64_t position = current - plan.splice_width + 1;
  if (position % plan.stride != 0) return result;

  state.spliced.resize(static_cast<std::size_t>(dim * plan.splice_width));
  for (int f = 0; f < plan.splice_width; ++f) {
    const auto& v = state.feature_ring.at(static_cast<std::size_t>(f));
    std::copy(v.begin(), v.end(), state.spliced.begin() + f * dim);
  }
  auto& phone = state.phone_ring.push_slot();
  std::int64_t* phone_mults = counter ? &counter->phone_mults : nullptr;
  run_layers(net.phone.layers, std::span<const float>(state.spliced), phone, state.layer_scratch, phone_mults);
  if (counter) ++counter->phone_evals;
  if (!state.phone_ring.full()) return result;

  std::vector<const std::vector<float>*> members(state.phone_ring.size());
  for (std::size_t m = 0; m < members.size(); ++m) members[m] = &state.phone_ring.at(m);
  auto& pooled = state.pooled_ring.push_slot();
  pooled.resize(phone.size());
  pool_max_into<float>(members, pooled);
  if (!state.pooled_ring.full()) return result;

  const std::size_t phone_dim = phone.size();
  state.word_in.resize(phone_dim * plan.pooled_context);
  for (int j = 0; j < plan.pooled_context; ++j) {
    const auto& p = state.pooled_ring.at(static_cast<std::size_t>(j * plan.slot_spacing));
    std::copy(p.begin(), p.end(), state.word_in.begin() + j * phone_dim);
  }
  std::int64_t* word_mults = counter ? &counter->word_mults : nullptr;
  run_layers(net.word.layers, std::span<const float>(state.word_in), state.logits, state.layer_scratch, word_mults);
  if (counter) {
    ++counter->word_evals;
    if (counter->frames_at_first_output < 0) {
      counter->frames_at_first_output = counter->frames;
      counter->mults_at_first_output = counter->mults();
      counter->phone_evals_at_first_output = counter->phone_evals;
      counter->word_evals_at_first_output = counter->word_evals;
    }
  }

  PosteriorSample sample;
  sample.frame_index = current;
  sample.raw = softmax<float>(state.logits);
  state.score_ring.push(sample.raw);
  sample.smoothed = window_mean([&](std::size_t i) -> const std::vector<float>& { return state.score_ring.at(i); },
                                state.score_ring.size(), sample.raw.size());
  if (const auto k = state.trigger.update(current, sample.smoothed, threshold)) {
    result.event = DetectionEvent{*k, model.keyword_names[static_cast<std::size_t>(*k)], current,
                                  state.trigger.onset(*k), sample.smoothed[static_cast<std::size_t>(*k)]};
  }
  result.sample = std::move(sample);
  return result;
}

// Streams a sequence of frames, collecting the trace and events.
struct StreamOutput {
  PosteriorTrace trace;
  std::vector<DetectionEvent> events;
};

inline void push_frames(StreamState& state, std::span<const FeatureFrame> frames, const TdnnModel& model,
                        double threshold, StreamOutput& out) {
  out.trace.num_classes = model.num_classes();
  for (const auto& f : frames) {
    auto step = push_frame(state, f, model, threshold);
    if (step.sample) out.trace.samples.push_back(std::move(*step.sample));
    if (step.event) out.events.push_back(std::move(*step.event));
  }
}

// Audio-in, events-out wrapper: frontend, normalizer and stream state.
class KeywordSpotter {
 public:
  KeywordSpotter(const TdnnModel& model, double threshold, SkipMode mode = SkipMode::kNone, bool count_mults = false)
      : model_(model), threshold_(threshold), extractor_(model.frontend), state_(model.net, mode, count_mults) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  }

  void accept_audio(std::span<const float> samples, StreamOutput& out) {
    out.trace.num_classes = model_.num_classes();
    for (const auto& raw : extractor_.accept(samples)) {
      auto step = push_frame(state_, model_.normalizer.apply(raw), model_, threshold_);
      if (step.sample) out.trace.samples.push_back(std::move(*step.sample));
      if (step.event) out.events.push_back(std::move(*step.event));
    }
  }

  const StreamState& state() const { return state_; }
  StreamState& state() { return state_; }

 private:
  const TdnnModel& model_;
  double threshold_;
  FbankExtractor extractor_;
  StreamState state_;
};

}  // namespace kws
