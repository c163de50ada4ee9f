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
#include <cstdint>
#include <string>
#include <vector>

#include "kws/error.hpp"

namespace kws {

// Keyword occurrence in frame units, end exclusive.
struct KeywordSpan {
  int keyword_index = 0;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;

  std::int64_t length() const { return end_frame - start_frame; }
};

struct GroundTruth {
  std::vector<KeywordSpan> spans;
  double total_audio_seconds = 0.0;
  std::vector<std::string> keyword_names;  // optional, for reporting

  // Spans must be non-empty, sorted, non-overlapping and inside the stream.
  void validate(std::int64_t num_frames = -1) const {
    if (!(total_audio_seconds >= 0.0)) throw InputError("total audio duration must be non-negative");
    std::int64_t prev_end = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      const auto& s = spans[i];
      if (s.keyword_index < 0) throw InputError("negative keyword index in ground truth");
      if (s.start_frame < 0 || s.end_frame <= s.start_frame) throw InputError("empty or negative ground-truth span");
      if (i > 0 && s.start_frame < prev_end) throw InputError("ground-truth spans overlap or are unsorted");
      if (num_frames >= 0 && s.end_frame > num_frames) throw InputError("ground-truth span beyond end of stream");
      prev_end = s.end_frame;
    }
  }
};

// Sample offsets [begin, end) to frame indices: a frame belongs to the span
// if its hop starts inside it.
inline KeywordSpan span_from_samples(int keyword, std::int64_t begin, std::int64_t end, int frame_shift) {
  KeywordSpan s;
  s.keyword_index = keyword;
  s.start_frame = begin / frame_shift;
  s.end_frame = std::max(s.start_frame + 1, (end + frame_shift - 1) / frame_shift);
  return s;
}

// Target for every keyword output frame t. The output sees frames
// [t - receptive_field + 1, t]; it is labeled with a keyword when that window
// covers at least half of the keyword's span (largest coverage wins),
// otherwise with the filler class.
inline std::vector<int> align_word_labels(std::int64_t num_frames, const std::vector<KeywordSpan>& spans,
                                          int receptive_field, int filler_index, double min_coverage = 0.5) {
  std::vector<int> labels(static_cast<std::size_t>(std::max<std::int64_t>(num_frames, 0)), filler_index);
  for (std::int64_t t = 0; t < num_frames; ++t) {
    const std::int64_t lo = t - receptive_field + 1;
    double best = -1.0;
    for (const auto& s : spans) {
      if (s.start_frame > t) break;
      const std::int64_t overlap = std::min(s.end_frame, t + 1) - std::max(s.start_frame, lo);
      if (overlap <= 0) continue;
      const double coverage = static_cast<double>(overlap) / static_cast<double>(s.length());
      if (coverage >= min_coverage && coverage > best) {
        best = coverage;
        labels[static_cast<std::size_t>(t)] = s.keyword_index;
      }
    }
  }
  return labels;
}

}  // namespace kws
