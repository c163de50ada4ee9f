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
#include <vector>

#include "kws/error.hpp"
#include "kws/features.hpp"
#include "kws/ground_truth.hpp"
#include "kws/inference.hpp"
#include "kws/log.hpp"
#include "kws/model.hpp"
#include "kws/random.hpp"

namespace kws {

inline constexpr int kMatchToleranceFrames = 50;
inline constexpr double kReferenceFaPerHour = 0.5;

struct DetectionScore {
  double frr_percent = 0.0;
  double fa_per_hour = 0.0;
  std::int64_t spans = 0;
  std::int64_t matched = 0;
  std::int64_t false_alarms = 0;
};

// An event can claim a span when it has the span's keyword and its onset lies
// in [start, end + tolerance]. Onsets do not move with the threshold, so a
// stricter threshold can only remove matches and false alarms.
inline bool event_matches(const DetectionEvent& e, const KeywordSpan& s, int tolerance_frames) {
  return e.keyword_index == s.keyword_index && e.onset_frame >= s.start_frame &&
         e.onset_frame <= s.end_frame + tolerance_frames;
}

// Maximum one-to-one matching between events and spans (augmenting paths).
inline std::int64_t max_matching(const std::vector<DetectionEvent>& events, const std::vector<KeywordSpan>& spans,
                                 int tolerance_frames) {
  std::vector<std::vector<int>> adj(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) {
    // Spans are sorted by start; only those starting before the onset qualify.
    const auto last = std::upper_bound(spans.begin(), spans.end(), events[e].onset_frame,
                                       [](std::int64_t f, const KeywordSpan& s) { return f < s.start_frame; });
    for (auto it = last; it != spans.begin();) {
      --it;
      if (it->end_frame + tolerance_frames < events[e].onset_frame) {
        // Spans do not overlap, so earlier ones end even earlier.
        break;
      }
      if (event_matches(events[e], *it, tolerance_frames)) adj[e].push_back(static_cast<int>(it - spans.begin()));
    }
  }
  std::vector<int> span_owner(spans.size(), -1);
  std::vector<int> seen(spans.size(), -1);
  std::int64_t matched = 0;
  // Iterative augmenting-path search keeps deep chains off the call stack.
  for (int root = 0; root < static_cast<int>(events.size()); ++root) {
    if (adj[root].empty()) continue;
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    std::vector<int> via;  // span chosen at each stack level
    bool found = false;
    while (!stack.empty() && !found) {
      auto& [e, next] = stack.back();
      if (next == adj[e].size()) {
        stack.pop_back();
        if (!via.empty()) via.pop_back();
        continue;
      }
      const int s = adj[e][next++];
      if (seen[s] == root) continue;
      seen[s] = root;
      via.push_back(s);
      if (span_owner[s] < 0) {
        found = true;
      } else {
        stack.emplace_back(span_owner[s], 0);
      }
    }
    if (!found) continue;
    for (std::size_t level = 0; level < via.size(); ++level) span_owner[via[level]] = stack[level].first;
    ++matched;
  }
  return matched;
}

inline DetectionScore score_detections(const std::vector<DetectionEvent>& events, const GroundTruth& truth,
                                       int tolerance_frames = kMatchToleranceFrames) {
  truth.validate();
  if (!(truth.total_audio_seconds > 0.0)) throw UndefinedRateError("false alarms per hour undefined for zero-length audio");
  if (tolerance_frames < 0) throw ConfigError("match tolerance must be non-negative");
  DetectionScore out;
  out.spans = static_cast<std::int64_t>(truth.spans.size());
  out.matched = max_matching(events, truth.spans, tolerance_frames);
  out.false_alarms = static_cast<std::int64_t>(events.size()) - out.matched;
  out.frr_percent = out.spans == 0 ? 0.0 : 100.0 * static_cast<double>(out.spans - out.matched) / static_cast<double>(out.spans);
  out.fa_per_hour = static_cast<double>(out.false_alarms) / (truth.total_audio_seconds / 3600.0);
  return out;
}

struct RocPoint {
  double threshold = 0.0;
  double frr_percent = 0.0;
  double fa_per_hour = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // thresholds descending

  // FRR at the given false-alarm rate, interpolating linearly in FA/hr
  // between the bracketing points. The curve implicitly starts at
  // (0 FA/hr, 100% FRR); beyond its last point the last FRR holds.
  double frr_at(double fa_per_hour = kReferenceFaPerHour) const {
    if (points.empty()) throw InputError("empty ROC curve");
    RocPoint prev{std::numeric_limits<double>::infinity(), 100.0, 0.0};
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      if (p.fa_per_hour > fa_per_hour) {
        if (prev.fa_per_hour >= fa_per_hour) return prev.frr_percent;
        const double t = (fa_per_hour - prev.fa_per_hour) / (p.fa_per_hour - prev.fa_per_hour);
        return prev.frr_percent + t * (p.frr_percent - prev.frr_percent);
      }
      prev = p;
    }
    return prev.frr_percent;
  }

  bool monotone() const {
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (points[i].frr_percent > points[i - 1].frr_percent || points[i].fa_per_hour < points[i - 1].fa_per_hour) {
        return false;
      }
    }
    return true;
  }
};

// 1.0 down to 0.0: a coarse linear part plus a fine grid near 1, where
// operating points at low false-alarm rates live.
inline std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 40; ++i) t.push_back(1.0 - 0.0025 * i);  // 1.0 .. 0.9
  for (int i = 1; i <= 89; ++i) t.push_back(0.9 - 0.01 * i);     // 0.89 .. 0.01
  t.push_back(0.0);
  return t;
}

inline RocCurve roc_sweep(const PosteriorTrace& trace, const GroundTruth& truth, const std::vector<double>& thresholds,
                          int tolerance_frames = kMatchToleranceFrames, int refractory_frames = kRefractoryFrames) {
  if (trace.empty()) throw InputError("cannot sweep an empty posterior trace");
  if (thresholds.empty()) throw ConfigError("no thresholds to sweep");
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] < thresholds[i - 1])) throw ConfigError("thresholds must be strictly descending");
  }
  RocCurve curve;
  for (double t : thresholds) {
    const auto events = detect_events(trace, truth.keyword_names, t, refractory_frames);
    const auto s = score_detections(events, truth, tolerance_frames);
    curve.points.push_back({t, s.frr_percent, s.fa_per_hour});
  }
  return curve;
}

inline constexpr double kDefaultClassifyThreshold = 0.5;

// Single-command clip: the keyword with the highest peak smoothed score,
// provided that peak reaches the threshold; otherwise filler.
inline int classify_trace(const PosteriorTrace& trace, double threshold = kDefaultClassifyThreshold) {
  const int filler = trace.num_classes - 1;
  if (trace.empty()) return filler;
  int best = filler;
  double best_score = -1.0;
  for (int k = 0; k < filler; ++k) {
    double peak = 0.0;
    for (const auto& s : trace.samples) peak = std::max(peak, s.smoothed[static_cast<std::size_t>(k)]);
    if (peak > best_score) {
      best_score = peak;
      best = k;
    }
  }
  return best_score >= threshold ? best : filler;
}

inline int classify_utterance(const TdnnModel& model, std::span<const FeatureFrame> features,
                              double threshold = kDefaultClassifyThreshold, SkipMode mode = SkipMode::kNone) {
  const auto trace = batch_forward(features, model.net, mode);
  if (trace.empty()) {
    log::warn("clip of " + std::to_string(features.size()) + " frames is shorter than the receptive field; classified as filler");
  }
  return classify_trace(trace, threshold);
}

// Derivative-stream synthesis.

struct MixSpec {
  double snr_db = 10.0;
  double amplitude_low_db = -10.0;
  double amplitude_high_db = 10.0;
  double gap_min_seconds = 0.0;
  double gap_max_seconds = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(amplitude_low_db <= amplitude_high_db)) throw ConfigError("amplitude range low must not exceed high");
    if (!(gap_min_seconds >= 0.0 && gap_min_seconds <= gap_max_seconds)) throw ConfigError("invalid gap range");
  }
};

// One command clip. Keyword clips carry keyword_index >= 0 and may mark the
// spoken part [active_begin, active_end) in samples; -1 for end means the
// whole clip. Fillers use keyword_index < 0.
struct LabeledClip {
  AudioStream audio;
  int keyword_index = -1;
  std::int64_t active_begin = 0;
  std::int64_t active_end = -1;
};

struct SampleSpan {
  int keyword_index = 0;
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

struct DerivativeStream {
  AudioStream audio;
  GroundTruth truth;
  std::vector<SampleSpan> sample_spans;
  std::vector<std::size_t> order;  // clip indices in stream order
  std::vector<double> gains_db;    // per placed clip
};

inline double db_to_gain(double db) { return std::pow(10.0, db / 20.0); }

inline DerivativeStream make_derivative_stream(const std::vector<LabeledClip>& clips, const MixSpec& spec,
                                               int frame_shift = 160) {
  if (clips.empty()) throw InputError("derivative stream needs at least one clip");
  spec.validate();
  const int rate = clips.front().audio.sample_rate;
  for (const auto& c : clips) {
    if (c.audio.sample_rate != rate) throw ConfigError("clips have different sample rates");
  }
  Rng rng(spec.seed);
  DerivativeStream out;
  out.audio.sample_rate = rate;
  out.order.resize(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) out.order[i] = i;
  rng.shuffle(out.order);

  std::size_t total = 0;
  std::vector<std::size_t> gaps(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    gaps[i] = static_cast<std::size_t>(std::llround(rng.uniform(spec.gap_min_seconds, spec.gap_max_seconds) * rate));
    total += clips[out.order[i]].audio.samples.size() + (i > 0 ? gaps[i] : 0);
  }
  out.audio.samples.reserve(total);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const LabeledClip& clip = clips[out.order[i]];
    if (i > 0) out.audio.samples.resize(out.audio.samples.size() + gaps[i], 0.0f);
    const double db = rng.uniform(spec.amplitude_low_db, spec.amplitude_high_db);
    const auto gain = static_cast<float>(db_to_gain(db));
    out.gains_db.push_back(db);
    const auto offset = static_cast<std::int64_t>(out.audio.samples.size());
    for (float s : clip.audio.samples) out.audio.samples.push_back(s * gain);
    if (clip.keyword_index >= 0) {
      const auto len = static_cast<std::int64_t>(clip.audio.samples.size());
      const std::int64_t b = std::clamp<std::int64_t>(clip.active_begin, 0, len);
      const std::int64_t e = clip.active_end < 0 ? len : std::clamp<std::int64_t>(clip.active_end, b, len);
      if (e > b) out.sample_spans.push_back({clip.keyword_index, offset + b, offset + e});
    }
  }
  out.truth.total_audio_seconds = static_cast<double>(out.audio.samples.size()) / rate;
  const auto frames = static_cast<std::int64_t>(out.audio.samples.size()) / frame_shift;
  for (const auto& s : out.sample_spans) {
    KeywordSpan span = span_from_samples(s.keyword_index, s.begin, s.end, frame_shift);
    span.end_frame = std::min(span.end_frame, std::max<std::int64_t>(frames, span.start_frame + 1));
    if (!out.truth.spans.empty()) span.start_frame = std::max(span.start_frame, out.truth.spans.back().end_frame);
    if (span.end_frame > span.start_frame) out.truth.spans.push_back(span);
  }
  return out;
}

inline double mean_square(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return acc / static_cast<double>(x.size());
}

struct MixResult {
  AudioStream audio;
  double noise_scale = 1.0;
  double clipped_fraction = 0.0;
  std::size_t noise_offset = 0;
};

// clean + g * noise with g chosen so the clean-to-scaled-noise power ratio is
// snr_db over the whole stream. Short noise loops from a random offset.
inline MixResult mix_noise(const AudioStream& clean, const AudioStream& noise, double snr_db, std::uint64_t seed = 0) {
  if (clean.sample_rate != noise.sample_rate) throw ConfigError("clean and noise sample rates differ");
  if (noise.samples.empty()) throw InputError("empty noise signal");
  if (!std::isfinite(snr_db)) throw ConfigError("SNR must be finite");
  const double p_clean = mean_square(clean.samples);
  if (!(p_clean > 0.0)) throw UndefinedRateError("SNR undefined for a silent clean stream");
  MixResult out;
  const std::size_t n = clean.samples.size();
  const std::size_t m = noise.samples.size();
  if (m < n) {
    Rng rng(seed);
    out.noise_offset = static_cast<std::size_t>(rng.below(m));
  }
  std::vector<float> looped(n);
  for (std::size_t i = 0; i < n; ++i) looped[i] = noise.samples[(out.noise_offset + i) % m];
  const double p_noise = mean_square(looped);
  if (!(p_noise > 0.0)) throw UndefinedRateError("SNR undefined for silent noise");
  out.noise_scale = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  out.audio.sample_rate = clean.sample_rate;
  out.audio.samples.resize(n);
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = clean.samples[i] + out.noise_scale * looped[i];
    if (v > 1.0 || v < -1.0) ++clipped;
    out.audio.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  out.clipped_fraction = n ? static_cast<double>(clipped) / static_cast<double>(n) : 0.0;
  if (clipped > 0) {
    log::warn("noise mixing clipped " + std::to_string(100.0 * out.clipped_fraction) + "% of samples");
  }
  return out;
}

// 10 log10(P_clean / P_residual) with residual = mixed - clean.
inline double measure_snr_db(const AudioStream& clean, const AudioStream& mixed) {
  if (clean.samples.size() != mixed.samples.size()) throw ShapeError("SNR needs equal-length signals");
  double pc = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    const double c = clean.samples[i];
    const double r = static_cast<double>(mixed.samples[i]) - c;
    pc += c * c;
    pn += r * r;
  }
  if (!(pn > 0.0) || !(pc > 0.0)) throw UndefinedRateError("SNR undefined for zero power");
  return 10.0 * std::log10(pc / pn);
}

inline AudioStream white_noise(std::size_t samples, Rng& rng, double amplitude = 0.1, int sample_rate = 16000) {
  AudioStream out;
  out.sample_rate = sample_rate;
  out.samples.resize(samples);
  for (auto& s : out.samples) s = static_cast<float>(amplitude * rng.uniform(-1.0, 1.0));
  return out;
}

// 1/f noise from white noise through a bank of first-order filters
// (Kellet's refined coefficients), peak-normalized to amplitude.
inline AudioStream pink_noise(std::size_t samples, Rng& rng, double amplitude = 0.1, int sample_rate = 16000) {
  AudioStream out;
  out.sample_rate = sample_rate;
  out.samples.resize(samples);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  std::vector<double> y(samples);
  double peak = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double w = rng.uniform(-1.0, 1.0);
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    y[i] = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
    b6 = w * 0.115926;
    peak = std::max(peak, std::abs(y[i]));
  }
  const double g = peak > 0.0 ? amplitude / peak : 0.0;
  for (std::size_t i = 0; i < samples; ++i) out.samples[i] = static_cast<float>(g * y[i]);
  return out;
}

}  // namespace kws
