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

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kws/error.hpp"
#include "kws/eval.hpp"
#include "kws/features.hpp"
#include "kws/ground_truth.hpp"
#include "kws/inference.hpp"

// Text formats: posterior traces (CSV), detection events (JSON lines),
// ROC curves (CSV), ground truth (JSON) and per-frame phone labels.
namespace kws {

inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, const std::string& what) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw FormatError("bad number '" + std::string(s) + "' in " + what);
  }
  return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// frame_index, raw_<class>..., smoothed_<class>...
inline void write_trace_csv(std::ostream& out, const PosteriorTrace& trace, const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != trace.num_classes) throw ShapeError("one name per class required");
  out << "frame_index";
  for (const auto& n : names) out << ",raw_" << n;
  for (const auto& n : names) out << ",smoothed_" << n;
  out << '\n';
  for (const auto& s : trace.samples) {
    out << s.frame_index;
    for (float v : s.raw) out << ',' << format_double(v);
    for (double v : s.smoothed) out << ',' << format_double(v);
    out << '\n';
  }
}

struct NamedTrace {
  PosteriorTrace trace;
  std::vector<std::string> names;
};

inline NamedTrace read_trace_csv(std::istream& in, const std::string& what = "trace") {
  NamedTrace t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(what + ": empty file");
  const auto header = split(line, ',');
  if (header.empty() || header[0] != "frame_index" || header.size() % 2 != 1) {
    throw FormatError(what + ": header must be frame_index, raw_*, smoothed_*");
  }
  const std::size_t k = (header.size() - 1) / 2;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& raw = header[1 + i];
    if (raw.rfind("raw_", 0) != 0 || header[1 + k + i] != "smoothed_" + raw.substr(4)) {
      throw FormatError(what + ": mismatched column " + raw);
    }
    t.names.push_back(raw.substr(4));
  }
  t.trace.num_classes = static_cast<int>(k);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw FormatError(what + ": row " + std::to_string(row) + " has wrong width");
    PosteriorSample s;
    s.frame_index = static_cast<std::int64_t>(parse_double(cells[0], what));
    for (std::size_t i = 0; i < k; ++i) s.raw.push_back(static_cast<float>(parse_double(cells[1 + i], what)));
    for (std::size_t i = 0; i < k; ++i) s.smoothed.push_back(parse_double(cells[1 + k + i], what));
    t.trace.samples.push_back(std::move(s));
  }
  return t;
}

// Seconds at the end of the frame that completed the decision.
inline double event_time_seconds(std::int64_t frame, const FrontendConfig& fc) {
  return static_cast<double>(frame * fc.frame_shift() + fc.frame_length()) / fc.sample_rate;
}

inline nlohmann::json event_to_json(const DetectionEvent& e, const FrontendConfig& fc) {
  return {{"keyword", e.keyword_name},     {"keyword_index", e.keyword_index},
          {"frame", e.frame_index},        {"time_s", event_time_seconds(e.frame_index, fc)},
          {"score", e.smoothed_score},     {"onset_frame", e.onset_frame}};
}

inline DetectionEvent event_from_json(const nlohmann::json& j) {
  try {
    DetectionEvent e;
    e.keyword_name = j.at("keyword").get<std::string>();
    e.keyword_index = j.at("keyword_index").get<int>();
    e.frame_index = j.at("frame").get<std::int64_t>();
    e.onset_frame = j.value("onset_frame", e.frame_index);
    e.smoothed_score = j.at("score").get<double>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("bad detection event: ") + ex.what());
  }
}

inline void write_roc_csv(std::ostream& out, const RocCurve& roc) {
  out << "threshold,frr,fa_per_hour\n";
  for (const auto& p : roc.points) {
    out << format_double(p.threshold) << ',' << format_double(p.frr_percent) << ',' << format_double(p.fa_per_hour)
        << '\n';
  }
}

inline nlohmann::json truth_to_json(const GroundTruth& t) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : t.spans) {
    spans.push_back({{"keyword", s.keyword_index}, {"start_frame", s.start_frame}, {"end_frame", s.end_frame}});
  }
  return {{"total_audio_seconds", t.total_audio_seconds}, {"keywords", t.keyword_names}, {"spans", spans}};
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
  try {
    GroundTruth t;
    t.total_audio_seconds = j.at("total_audio_seconds").get<double>();
    if (j.contains("keywords")) t.keyword_names = j.at("keywords").get<std::vector<std::string>>();
    for (const auto& s : j.at("spans")) {
      t.spans.push_back({s.at("keyword").get<int>(), s.at("start_frame").get<std::int64_t>(),
                         s.at("end_frame").get<std::int64_t>()});
    }
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("bad ground truth: ") + ex.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << text;
  if (!out) throw IoError("short write: " + path);
}

inline GroundTruth load_truth(const std::string& path) {
  const auto text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(path + ": " + ex.what());
  }
  return truth_from_json(j);
}

inline void save_truth(const std::string& path, const GroundTruth& t) { write_text_file(path, truth_to_json(t).dump(1) + "\n"); }

// Whitespace-separated integer label per frame.
inline std::vector<int> parse_frame_labels(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    int v = 0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size()) throw FormatError(what + ": bad label '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

inline std::string format_frame_labels(const std::vector<int>& labels) {
  std::string s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s += std::to_string(labels[i]);
    s += (i + 1) % 20 == 0 || i + 1 == labels.size() ? '\n' : ' ';
  }
  return s;
}

}  // namespace kws
