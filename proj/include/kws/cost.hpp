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
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kws/error.hpp"
#include "kws/inference.hpp"
#include "kws/model.hpp"

namespace kws {

inline constexpr double kDefaultFrameRate = 100.0;

struct LayerCost {
  std::string name;
  std::int64_t mults_per_eval = 0;
  double evals_per_second = 0.0;
};

// Multiplications per second of audio. Additions, bias terms and pooling
// comparisons are not counted.
struct CostReport {
  std::string label;
  std::vector<LayerCost> layers;
  std::int64_t phone_mults_per_eval = 0;
  std::int64_t word_mults_per_eval = 0;
  double phone_evals_per_second = 0.0;
  double word_evals_per_second = 0.0;
  double total_mults_per_second = 0.0;
  std::int64_t params = 0;
  // Only set for measured reports.
  double audio_seconds = 0.0;
  std::int64_t counted_mults = 0;
};

inline std::string cost_label(SkipMode mode) {
  switch (mode) {
    case SkipMode::kNone: return "TDNN";
    case SkipMode::kStride2: return "TDNN-skip2";
    case SkipMode::kStride4: return "TDNN-skip4";
  }
  return "TDNN";
}

namespace cost_detail {

template <typename S>
CostReport skeleton(const TdnnNetwork<S>& net, SkipMode mode, double phone_rate, double word_rate) {
  CostReport r;
  r.label = cost_label(mode);
  r.params = net.param_count();
  r.phone_mults_per_eval = net.phone_mults();
  r.word_mults_per_eval = net.word_mults();
  r.phone_evals_per_second = phone_rate;
  r.word_evals_per_second = word_rate;
  for (const auto& l : net.phone.layers) r.layers.push_back({l.name, l.weight_count(), phone_rate});
  for (const auto& l : net.word.layers) r.layers.push_back({l.name, l.weight_count(), word_rate});
  double total = 0.0;
  for (const auto& l : r.layers) total += static_cast<double>(l.mults_per_eval) * l.evals_per_second;
  r.total_mults_per_second = total;
  return r;
}

}  // namespace cost_detail

// Analytic cost with caching: each evaluation computes one new phone vector
// and one keyword output, both at frame_rate / stride.
template <typename S>
CostReport mulps(const TdnnNetwork<S>& net, SkipMode mode = SkipMode::kNone, double frame_rate = kDefaultFrameRate) {
  const EvalPlan plan = make_plan(net, mode);
  const double rate = frame_rate / plan.stride;
  return cost_detail::skeleton(net, mode, rate, rate);
}

// Cost when every keyword output recomputes all phone vectors in its window.
template <typename S>
CostReport naive_mulps(const TdnnNetwork<S>& net, SkipMode mode = SkipMode::kNone,
                       double frame_rate = kDefaultFrameRate) {
  const EvalPlan plan = make_plan(net, mode);
  const double rate = frame_rate / plan.stride;
  const int phone_vectors_per_output = (plan.phone_window() - 1) / plan.stride + 1;
  CostReport r = cost_detail::skeleton(net, mode, rate * phone_vectors_per_output, rate);
  r.label += " (no cache)";
  return r;
}

// Empirical rate from an instrumented stream. Warm-up is amortized away by
// measuring from the first keyword output onwards; before that point the
// stream is still filling its caches.
inline CostReport measured_mulps(const StreamState& state, const TdnnNetwork<float>& net,
                                 double frame_rate = kDefaultFrameRate) {
  if (!state.counter) throw UnsupportedError("stream was created without a multiplication counter");
  const MultCounter& c = *state.counter;
  CostReport r = cost_detail::skeleton(net, state.skip_mode, 0.0, 0.0);
  r.label += " (measured)";
  r.counted_mults = c.mults();
  r.audio_seconds = static_cast<double>(c.frames) / frame_rate;
  r.total_mults_per_second = 0.0;
  for (auto& l : r.layers) l.evals_per_second = 0.0;
  if (c.frames_at_first_output < 0) return r;
  const double seconds = static_cast<double>(c.frames - c.frames_at_first_output) / frame_rate;
  if (seconds <= 0.0) return r;
  r.phone_evals_per_second = static_cast<double>(c.phone_evals - c.phone_evals_at_first_output) / seconds;
  r.word_evals_per_second = static_cast<double>(c.word_evals - c.word_evals_at_first_output) / seconds;
  const std::size_t n_phone = net.phone.layers.size();
  for (std::size_t i = 0; i < r.layers.size(); ++i) {
    r.layers[i].evals_per_second = i < n_phone ? r.phone_evals_per_second : r.word_evals_per_second;
  }
  r.total_mults_per_second = static_cast<double>(c.mults() - c.mults_at_first_output) / seconds;
  return r;
}

// Three significant digits with a K/M/G suffix: 25113600 -> "25.1M".
inline std::string format_si(double value) {
  static constexpr struct {
    double scale;
    const char* suffix;
  } kUnits[] = {{1e9, "G"}, {1e6, "M"}, {1e3, "K"}, {1.0, ""}};
  for (const auto& u : kUnits) {
    if (std::fabs(value) < u.scale && u.scale != 1.0) continue;
    const double x = value / u.scale;
    const int decimals = std::fabs(x) >= 99.95 ? 0 : std::fabs(x) >= 9.995 ? 1 : 2;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f%s", decimals, x, u.suffix);
    return buf;
  }
  return "0";
}

inline std::string render_cost_table(const std::vector<CostReport>& reports) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Model" << std::right << std::setw(10) << "Params" << std::setw(12) << "Mul / s"
      << '\n';
  for (const auto& r : reports) {
    out << std::left << std::setw(24) << r.label << std::right << std::setw(10) << format_si(static_cast<double>(r.params))
        << std::setw(12) << format_si(r.total_mults_per_second) << '\n';
  }
  return out.str();
}

inline nlohmann::json to_json(const CostReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : r.layers) {
    layers.push_back({{"name", l.name}, {"mults_per_eval", l.mults_per_eval}, {"evals_per_second", l.evals_per_second}});
  }
  nlohmann::json j = {{"model", r.label},
                      {"params", r.params},
                      {"phone_mults_per_eval", r.phone_mults_per_eval},
                      {"word_mults_per_eval", r.word_mults_per_eval},
                      {"phone_evals_per_second", r.phone_evals_per_second},
                      {"word_evals_per_second", r.word_evals_per_second},
                      {"layers", layers}};
  const double rounded = std::round(r.total_mults_per_second);
  if (rounded == r.total_mults_per_second) {
    j["mults_per_second"] = static_cast<std::int64_t>(rounded);
  } else {
    j["mults_per_second"] = r.total_mults_per_second;
  }
  j["mults_per_second_display"] = format_si(r.total_mults_per_second);
  if (r.audio_seconds > 0.0) {
    j["audio_seconds"] = r.audio_seconds;
    j["counted_mults"] = r.counted_mults;
  }
  return j;
}

}  // namespace kws
