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
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "kws/error.hpp"

namespace kws {

// Mono PCM audio with amplitudes nominally in [-1, 1].
struct AudioStream {
  std::vector<float> samples;
  int sample_rate = 16000;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// One log-Mel vector per hop. `normalized` is set only by
// FeatureNormalizer::apply; the streaming detector refuses raw frames.
struct FeatureFrame {
  std::int64_t index = 0;
  std::vector<double> values;
  bool normalized = false;
};

struct FrontendConfig {
  int sample_rate = 16000;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int num_mel_bins = 41;
  double low_freq = 20.0;
  double high_freq = 0.0;  // <= 0 selects the Nyquist frequency
  double preemph = 0.97;
  double log_floor = 1e-10;

  int frame_length() const {
    return static_cast<int>(std::lround(sample_rate * frame_length_ms / 1000.0));
  }
  int frame_shift() const {
    return static_cast<int>(std::lround(sample_rate * frame_shift_ms / 1000.0));
  }
  int fft_size() const {
    int n = 1;
    while (n < frame_length()) n <<= 1;
    return n;
  }
  double nyquist() const { return 0.5 * sample_rate; }
  double upper_freq() const { return high_freq > 0.0 ? high_freq : nyquist(); }

  void validate() const {
    if (sample_rate <= 0) throw ConfigError("sample rate must be positive, got " + std::to_string(sample_rate));
    if (frame_length() <= 0 || frame_shift() <= 0) throw ConfigError("frame length and shift must be positive");
    if (num_mel_bins <= 0) throw ConfigError("mel bin count must be positive");
    if (!(low_freq >= 0.0 && low_freq < upper_freq() && upper_freq() <= nyquist())) {
      throw ConfigError("mel range must satisfy 0 <= low < high <= Nyquist");
    }
    if (!(log_floor > 0.0)) throw ConfigError("log floor must be positive");
  }

  // floor((n - frame_len) / hop) + 1, or zero when shorter than one frame.
  std::int64_t num_frames(std::int64_t num_samples) const {
    const std::int64_t len = frame_length();
    if (num_samples < len) return 0;
    return (num_samples - len) / frame_shift() + 1;
  }
};

inline double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

// Triangular filters equally spaced on the mel scale, evaluated on the mel
// value of each FFT bin's centre frequency.
class MelFilterbank {
 public:
  struct Filter {
    int first_bin = 0;
    std::vector<double> weights;
  };

  explicit MelFilterbank(const FrontendConfig& config) {
    config.validate();
    const int fft = config.fft_size();
    const int num_bins = fft / 2 + 1;
    const double mel_low = hz_to_mel(config.low_freq);
    const double mel_high = hz_to_mel(config.upper_freq());
    const double step = (mel_high - mel_low) / (config.num_mel_bins + 1);
    filters_.resize(config.num_mel_bins);
    for (int m = 0; m < config.num_mel_bins; ++m) {
      const double left = mel_low + m * step;
      const double centre = left + step;
      const double right = centre + step;
      Filter& filter = filters_[m];
      filter.first_bin = -1;
      for (int k = 0; k < num_bins; ++k) {
        const double mel = hz_to_mel(static_cast<double>(k) * config.sample_rate / fft);
        double w = 0.0;
        if (mel > left && mel < right) {
          w = mel <= centre ? (mel - left) / (centre - left) : (right - mel) / (right - centre);
        }
        if (w > 0.0) {
          if (filter.first_bin < 0) filter.first_bin = k;
          filter.weights.resize(k - filter.first_bin + 1, 0.0);
          filter.weights.back() = w;
        }
      }
      if (filter.first_bin < 0) {
        throw ConfigError("mel filter " + std::to_string(m) + " covers no FFT bins; use fewer mel bins or a larger FFT");
      }
    }
  }

  const std::vector<Filter>& filters() const { return filters_; }
  std::size_t size() const { return filters_.size(); }

  void apply(std::span<const double> power, std::span<double> out) const {
    for (std::size_t m = 0; m < filters_.size(); ++m) {
      const Filter& f = filters_[m];
      double e = 0.0;
      for (std::size_t j = 0; j < f.weights.size(); ++j) e += f.weights[j] * power[f.first_bin + j];
      out[m] = e;
    }
  }

 private:
  std::vector<Filter> filters_;
};

// Turns one window of samples into a log-Mel vector. Holds FFT scratch, so
// an instance must not be shared between threads.
class FbankComputer {
 public:
  explicit FbankComputer(const FrontendConfig& config) : config_(config), mel_(config) {
    const int len = config_.frame_length();
    window_.resize(len);
    for (int i = 0; i < len; ++i) {
      window_[i] = len > 1 ? 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (len - 1)) : 1.0;
    }
    frame_.assign(config_.fft_size(), 0.0);
    power_.resize(config_.fft_size() / 2 + 1);
  }

  const FrontendConfig& config() const { return config_; }
  const MelFilterbank& filterbank() const { return mel_; }

  std::vector<double> compute(std::span<const float> samples) {
    const int len = config_.frame_length();
    std::fill(frame_.begin(), frame_.end(), 0.0);
    for (int i = 0; i < len; ++i) frame_[i] = samples[i];
    for (int i = len - 1; i > 0; --i) frame_[i] -= config_.preemph * frame_[i - 1];
    frame_[0] -= config_.preemph * frame_[0];
    for (int i = 0; i < len; ++i) frame_[i] *= window_[i];
    fft_.fwd(spectrum_, frame_);
    for (std::size_t k = 0; k < power_.size(); ++k) power_[k] = std::norm(spectrum_[k]);
    std::vector<double> out(mel_.size());
    mel_.apply(power_, out);
    for (double& v : out) v = std::log(std::max(v, config_.log_floor));
    return out;
  }

 private:
  FrontendConfig config_;
  MelFilterbank mel_;
  std::vector<double> window_;
  std::vector<double> frame_;
  std::vector<double> power_;
  std::vector<std::complex<double>> spectrum_;
  Eigen::FFT<double> fft_;
};

// Streaming extractor. Chunks may have any size; the emitted frames are
// identical to extract_fbank over the concatenated audio.
class FbankExtractor {
 public:
  explicit FbankExtractor(const FrontendConfig& config) : computer_(config) {}

  std::vector<FeatureFrame> accept(std::span<const float> chunk) {
    pending_.insert(pending_.end(), chunk.begin(), chunk.end());
    drop_front(skip_);
    const auto len = static_cast<std::size_t>(computer_.config().frame_length());
    const auto shift = static_cast<std::size_t>(computer_.config().frame_shift());
    std::vector<FeatureFrame> out;
    std::size_t offset = 0;
    while (offset + len <= pending_.size()) {
      FeatureFrame frame;
      frame.index = next_index_++;
      frame.values = computer_.compute(std::span<const float>(pending_).subspan(offset, len));
      out.push_back(std::move(frame));
      offset += shift;
    }
    // With hop > frame length the next frame can start past the buffer end.
    skip_ += offset;
    drop_front(skip_);
    return out;
  }

  std::int64_t frames_emitted() const { return next_index_; }

 private:
  void drop_front(std::size_t& count) {
    const std::size_t n = std::min(count, pending_.size());
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(n));
    count -= n;
  }

  FbankComputer computer_;
  std::vector<float> pending_;
  std::size_t skip_ = 0;
  std::int64_t next_index_ = 0;
};

// One-shot extraction. Audio shorter than one frame yields no frames.
inline std::vector<FeatureFrame> extract_fbank(const AudioStream& audio, const FrontendConfig& config) {
  config.validate();
  if (audio.sample_rate <= 0) throw ConfigError("audio sample rate must be positive");
  if (audio.sample_rate != config.sample_rate) {
    throw ConfigError("audio sample rate " + std::to_string(audio.sample_rate) +
                      " Hz does not match frontend rate " + std::to_string(config.sample_rate) + " Hz");
  }
  FbankComputer computer(config);
  const std::int64_t count = config.num_frames(static_cast<std::int64_t>(audio.samples.size()));
  std::vector<FeatureFrame> frames(static_cast<std::size_t>(count));
  const std::span<const float> samples(audio.samples);
  for (std::int64_t i = 0; i < count; ++i) {
    frames[i].index = i;
    frames[i].values = computer.compute(samples.subspan(i * config.frame_shift(), config.frame_length()));
  }
  return frames;
}

// Global per-dimension statistics, fitted once on a corpus and stored with
// the model so streaming inference can normalize frame by frame.
struct FeatureNormalizer {
  std::vector<double> mean;
  std::vector<double> inv_std;

  static FeatureNormalizer identity(std::size_t dim) {
    return FeatureNormalizer{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  }

  std::size_t dim() const { return mean.size(); }

  void validate() const {
    if (mean.size() != inv_std.size()) throw ShapeError("normalizer mean/inv_std size mismatch");
    for (double v : inv_std) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("normalizer inv_std must be positive and finite");
    }
    for (double v : mean) {
      if (!std::isfinite(v)) throw ConfigError("normalizer mean must be finite");
    }
  }

  FeatureFrame apply(const FeatureFrame& frame) const {
    if (frame.values.size() != dim()) {
      throw ShapeError("frame has " + std::to_string(frame.values.size()) + " values, normalizer expects " +
                       std::to_string(dim()));
    }
    FeatureFrame out;
    out.index = frame.index;
    out.normalized = true;
    out.values.resize(dim());
    for (std::size_t i = 0; i < dim(); ++i) out.values[i] = (frame.values[i] - mean[i]) * inv_std[i];
    return out;
  }

  FeatureFrame invert(const FeatureFrame& frame) const {
    if (frame.values.size() != dim()) throw ShapeError("frame/normalizer dimension mismatch");
    FeatureFrame out;
    out.index = frame.index;
    out.values.resize(dim());
    for (std::size_t i = 0; i < dim(); ++i) out.values[i] = frame.values[i] / inv_std[i] + mean[i];
    return out;
  }

  std::vector<FeatureFrame> apply(std::span<const FeatureFrame> frames) const {
    std::vector<FeatureFrame> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(apply(f));
    return out;
  }
};

inline constexpr double kNormalizerEps = 1e-8;

// Population mean and variance per dimension over all parts (two-pass);
// inv_std = 1 / sqrt(var + eps).
inline FeatureNormalizer fit_normalizer(const std::vector<std::span<const FeatureFrame>>& parts,
                                        double eps = kNormalizerEps) {
  std::size_t count = 0;
  for (const auto& p : parts) count += p.size();
  if (count < 2) {
    throw InsufficientDataError("need at least 2 frames to fit a normalizer, got " + std::to_string(count));
  }
  std::size_t dim = 0;
  for (const auto& p : parts) {
    if (!p.empty()) {
      dim = p.front().values.size();
      break;
    }
  }
  std::vector<double> mean(dim, 0.0);
  for (const auto& p : parts) {
    for (const auto& f : p) {
      if (f.values.size() != dim) throw ShapeError("frames have inconsistent dimensions");
      for (std::size_t i = 0; i < dim; ++i) mean[i] += f.values[i];
    }
  }
  const double n = static_cast<double>(count);
  for (double& m : mean) m /= n;
  std::vector<double> var(dim, 0.0);
  for (const auto& p : parts) {
    for (const auto& f : p) {
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = f.values[i] - mean[i];
        var[i] += d * d;
      }
    }
  }
  FeatureNormalizer norm;
  norm.mean = std::move(mean);
  norm.inv_std.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) norm.inv_std[i] = 1.0 / std::sqrt(var[i] / n + eps);
  return norm;
}

inline FeatureNormalizer fit_normalizer(std::span<const FeatureFrame> frames, double eps = kNormalizerEps) {
  return fit_normalizer(std::vector<std::span<const FeatureFrame>>{frames}, eps);
}

inline FeatureFrame apply_normalizer(const FeatureFrame& frame, const FeatureNormalizer& norm) {
  return norm.apply(frame);
}

}  // namespace kws
