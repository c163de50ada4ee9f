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
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "kws/error.hpp"
#include "kws/eval.hpp"
#include "kws/io.hpp"
#include "kws/synth.hpp"
#include "kws/wav.hpp"

// On-disk datasets:
//   label folders   DIR/<label>/*.wav, one command per clip (Speech Commands
//                   layout); folders starting with '_' are ignored
//   phone-labeled   DIR/*.wav with DIR/*.phones, one class per frame
//   streams         DIR/*.wav with DIR/*.json ground truth
namespace kws {

namespace fs = std::filesystem;

inline std::vector<std::string> gsc10_keywords() {
  return {"yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go"};
}

inline std::vector<std::string> gsc10_fillers() {
  return {"bed",  "bird", "cat",    "dog", "eight", "five", "four", "happy", "house", "marvin",
          "nine", "one",  "sheila", "six", "seven", "three", "tree", "two",   "wow",   "zero"};
}

inline std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline bool has_label_folders(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && e.path().filename().string().rfind('_', 0) != 0 && !sorted_files(e.path(), ".wav").empty()) {
      return true;
    }
  }
  return false;
}

// Bounds of the region within 30 dB of the loudest 10 ms block.
inline std::pair<std::int64_t, std::int64_t> speech_bounds(const AudioStream& a, double range_db = 30.0) {
  const std::int64_t block = std::max(1, a.sample_rate / 100);
  const auto n = static_cast<std::int64_t>(a.samples.size());
  std::vector<double> energy;
  for (std::int64_t b = 0; b < n; b += block) {
    energy.push_back(mean_square(std::span(a.samples).subspan(static_cast<std::size_t>(b),
                                                              static_cast<std::size_t>(std::min(block, n - b)))));
  }
  const double peak = energy.empty() ? 0.0 : *std::max_element(energy.begin(), energy.end());
  if (!(peak > 0.0)) return {0, n};
  const double floor = peak * std::pow(10.0, -range_db / 10.0);
  std::int64_t first = -1, last = -1;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    if (energy[i] >= floor) {
      if (first < 0) first = static_cast<std::int64_t>(i);
      last = static_cast<std::int64_t>(i);
    }
  }
  return {first * block, std::min(n, (last + 1) * block)};
}

struct ClipSet {
  std::vector<LabeledClip> clips;
  std::vector<std::string> class_names;  // keywords then filler
};

// Clips from label folders. Folders named in keywords become keyword clips;
// with fillers given only those folders are used as filler, otherwise every
// other folder is.
inline ClipSet load_label_folders(const fs::path& dir, const std::vector<std::string>& keywords,
                                  const std::vector<std::string>& fillers = {}) {
  if (keywords.empty()) throw ConfigError("no keywords given");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  ClipSet set;
  set.class_names = keywords;
  set.class_names.push_back(default_filler_name());
  std::vector<fs::path> folders;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && e.path().filename().string().rfind('_', 0) != 0) folders.push_back(e.path());
  }
  std::sort(folders.begin(), folders.end());
  std::size_t keyword_clips = 0;
  for (const auto& folder : folders) {
    const std::string label = folder.filename().string();
    const auto k = std::find(keywords.begin(), keywords.end(), label);
    const bool is_keyword = k != keywords.end();
    if (!is_keyword && !fillers.empty() && std::find(fillers.begin(), fillers.end(), label) == fillers.end()) continue;
    for (const auto& file : sorted_files(folder, ".wav")) {
      LabeledClip c;
      c.audio = read_wav(file.string());
      if (is_keyword) {
        c.keyword_index = static_cast<int>(k - keywords.begin());
        std::tie(c.active_begin, c.active_end) = speech_bounds(c.audio);
        ++keyword_clips;
      }
      set.clips.push_back(std::move(c));
    }
  }
  if (keyword_clips == 0) throw InputError("no clips found for any keyword under " + dir.string());
  return set;
}

struct PhoneLabeledAudio {
  AudioStream audio;
  std::vector<int> labels;
  std::string name;
};

inline std::vector<PhoneLabeledAudio> load_phone_dir(const fs::path& dir) {
  std::vector<PhoneLabeledAudio> out;
  for (const auto& wav : sorted_files(dir, ".wav")) {
    fs::path labels = wav;
    labels.replace_extension(".phones");
    if (!fs::exists(labels)) continue;
    out.push_back({read_wav(wav.string()), parse_frame_labels(read_text_file(labels.string()), labels.string()),
                   wav.filename().string()});
  }
  if (out.empty()) throw InputError("no phone-labeled audio (*.wav with *.phones) in " + dir.string());
  return out;
}

struct LabeledStream {
  AudioStream audio;
  GroundTruth truth;
  std::string name;
};

inline std::vector<LabeledStream> load_stream_dir(const fs::path& dir) {
  std::vector<LabeledStream> out;
  for (const auto& wav : sorted_files(dir, ".wav")) {
    fs::path truth = wav;
    truth.replace_extension(".json");
    if (!fs::exists(truth)) continue;
    out.push_back({read_wav(wav.string()), load_truth(truth.string()), wav.filename().string()});
  }
  if (out.empty()) throw InputError("no streams (*.wav with *.json) in " + dir.string());
  return out;
}

struct HarnessExport {
  double phone_seconds = 600;
  double train_seconds = 1200;
  double test_seconds = 600;
  int clips_per_label = 0;  // label-folder clips, padded or cut to 1 s
};

inline void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

inline std::string numbered(const std::string& stem, std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return stem + digits;
}

inline void export_harness(const synth::Harness& h, const fs::path& dir, const HarnessExport& what) {
  const FrontendConfig fc;
  Rng seeds(h.config.seed ^ 0xd15cULL);
  ensure_dir(dir / "phone");
  const auto corpus = h.phone_corpus(what.phone_seconds, seeds.below(1ull << 62));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto base = dir / "phone" / numbered("utt", i);
    write_wav(base.string() + ".wav", corpus[i].audio);
    write_text_file(base.string() + ".phones", format_frame_labels(synth::frame_labels(corpus[i], fc)));
  }
  auto write_streams = [&](const char* sub, double seconds, bool held_out) {
    ensure_dir(dir / sub);
    const auto streams = h.streams(seconds, held_out, seeds.below(1ull << 62));
    for (std::size_t i = 0; i < streams.size(); ++i) {
      const auto base = dir / sub / numbered("stream", i);
      write_wav(base.string() + ".wav", streams[i].audio);
      save_truth(base.string() + ".json", streams[i].truth);
    }
  };
  write_streams("train", what.train_seconds, false);
  write_streams("test", what.test_seconds, true);
  if (what.clips_per_label > 0) {
    Rng rng(seeds.below(1ull << 62));
    const auto names = h.class_names();
    std::vector<int> written(names.size(), 0);
    const int target = what.clips_per_label;
    std::size_t guard = 0;
    while (*std::min_element(written.begin(), written.end()) < target && guard++ < 100000) {
      auto clip = h.clip(h.train_speakers[rng.below(h.train_speakers.size())], rng);
      const std::size_t cls = clip.keyword_index < 0 ? names.size() - 1 : static_cast<std::size_t>(clip.keyword_index);
      if (written[cls] >= target) continue;
      clip.audio.samples.resize(static_cast<std::size_t>(clip.audio.sample_rate), 0.0f);
      const auto folder = dir / "clips" / (cls + 1 == names.size() ? std::string("other") : names[cls]);
      ensure_dir(folder);
      write_wav((folder / (numbered("clip", static_cast<std::size_t>(written[cls]++)) + ".wav")).string(), clip.audio);
    }
  }
}

}  // namespace kws
