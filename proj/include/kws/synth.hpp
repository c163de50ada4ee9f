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
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "kws/error.hpp"
#include "kws/eval.hpp"
#include "kws/features.hpp"
#include "kws/random.hpp"

// Synthetic phone-like speech with exact frame alignments.
//
// Label space: 39 phones with 3 states each (labels 0..116) followed by 3
// silence types with 5 states each (117..131), 132 classes in total.
// Audio comes from a source-filter model: a glottal pulse train and white
// noise shaped by formant resonators, with per-speaker pitch, vocal-tract
// length, speaking rate and voice quality.
namespace kws::synth {

inline constexpr int kNumPhones = 39;
inline constexpr int kStatesPerPhone = 3;
inline constexpr int kSilenceTypes = 3;
inline constexpr int kSilenceStates = 5;
inline constexpr int kPhoneClasses = kNumPhones * kStatesPerPhone + kSilenceTypes * kSilenceStates;
static_assert(kPhoneClasses == 132);

inline int phone_label(int phone, int state) { return phone * kStatesPerPhone + state; }
inline int silence_label(int type, int state) { return kNumPhones * kStatesPerPhone + type * kSilenceStates + state; }

enum class PhoneKind { kVowel, kDiphthong, kNasal, kApproximant, kFricative, kVoicedFricative, kStop, kVoicedStop };

// Acoustic target of one state. Frequencies in Hz before speaker scaling.
struct StateTarget {
  double f1 = 500, f2 = 1500, f3 = 2500;
  double voicing = 1.0;       // glottal source level
  double frication = 0.0;     // noise source level through the noise resonator
  double noise_center = 4000;
  double noise_bandwidth = 1500;
  double gain = 1.0;
  int min_frames = 2, max_frames = 5;
};

struct Phone {
  std::string name;
  PhoneKind kind = PhoneKind::kVowel;
  std::array<StateTarget, kStatesPerPhone> states;
};

struct PhoneSet {
  std::vector<Phone> phones;
};

// Deterministic inventory: 12 vowels, 3 diphthongs, 3 nasals, 4 approximants,
// 5 voiceless and 3 voiced fricatives, 5 voiceless and 4 voiced stops.
inline PhoneSet make_phone_set(std::uint64_t seed = 1) {
  Rng rng(seed);
  PhoneSet set;
  auto jitter = [&](double v, double rel) { return v * (1.0 + rel * rng.uniform(-1.0, 1.0)); };
  auto vowel_target = [&](double f1, double f2, double f3) {
    StateTarget t;
    t.f1 = f1;
    t.f2 = f2;
    t.f3 = f3;
    t.min_frames = 3;
    t.max_frames = 6;
    return t;
  };
  // Vowel space corners and edges, F1 x F2.
  const std::array<std::array<double, 2>, 12> vowels{{{280, 2250},
                                                      {400, 2000},
                                                      {550, 1800},
                                                      {700, 1650},
                                                      {800, 1300},
                                                      {700, 1100},
                                                      {580, 900},
                                                      {450, 850},
                                                      {320, 900},
                                                      {350, 1350},
                                                      {500, 1450},
                                                      {620, 1250}}};
  int index = 0;
  auto add = [&](PhoneKind kind, const std::array<StateTarget, 3>& states) {
    set.phones.push_back(Phone{"p" + std::to_string(index++), kind, states});
  };
  const StateTarget neutral = vowel_target(500, 1500, 2500);
  auto blend = [](const StateTarget& a, const StateTarget& b, double w) {
    StateTarget t = b;
    t.f1 = a.f1 + w * (b.f1 - a.f1);
    t.f2 = a.f2 + w * (b.f2 - a.f2);
    t.f3 = a.f3 + w * (b.f3 - a.f3);
    return t;
  };
  for (const auto& v : vowels) {
    const StateTarget mid = vowel_target(jitter(v[0], 0.04), jitter(v[1], 0.04), jitter(2600, 0.08));
    StateTarget on = blend(neutral, mid, 0.7), off = blend(neutral, mid, 0.85);
    on.gain = 0.8;
    off.gain = 0.7;
    on.min_frames = off.min_frames = 2;
    on.max_frames = off.max_frames = 4;
    add(PhoneKind::kVowel, {on, mid, off});
  }
  const std::array<std::array<int, 2>, 3> diphthongs{{{3, 0}, {6, 1}, {4, 8}}};
  for (const auto& d : diphthongs) {
    const auto& a = vowels[d[0]];
    const auto& b = vowels[d[1]];
    const StateTarget s0 = vowel_target(a[0], a[1], 2600);
    const StateTarget s2 = vowel_target(b[0], b[1], 2600);
    add(PhoneKind::kDiphthong, {s0, blend(s0, s2, 0.5), s2});
  }
  for (double f2 : {1100.0, 1700.0, 2100.0}) {  // nasals: low F1, damped
    StateTarget t = vowel_target(260, jitter(f2, 0.03), 2400);
    t.gain = 0.45;
    t.min_frames = 2;
    t.max_frames = 4;
    StateTarget edge = t;
    edge.gain = 0.3;
    add(PhoneKind::kNasal, {edge, t, edge});
  }
  const std::array<std::array<double, 3>, 4> approximants{{{350, 1100, 2700}, {400, 1300, 1700}, {300, 2100, 2900},
                                                           {320, 750, 2300}}};
  for (const auto& a : approximants) {
    StateTarget t = vowel_target(a[0], a[1], a[2]);
    t.gain = 0.65;
    t.min_frames = 2;
    t.max_frames = 4;
    add(PhoneKind::kApproximant, {blend(neutral, t, 0.6), t, blend(neutral, t, 0.8)});
  }
  auto fricative = [&](double center, double bw, double voicing, double gain) {
    StateTarget t;
    t.f1 = 300;
    t.f2 = 1400;
    t.f3 = 2500;
    t.voicing = voicing;
    t.frication = 1.0;
    t.noise_center = center;
    t.noise_bandwidth = bw;
    t.gain = gain;
    t.min_frames = 2;
    t.max_frames = 5;
    StateTarget edge = t;
    edge.gain = gain * 0.5;
    edge.min_frames = 1;
    edge.max_frames = 3;
    return std::array<StateTarget, 3>{edge, t, edge};
  };
  for (double c : {6500.0, 4500.0, 3000.0, 1800.0, 5500.0}) {
    add(PhoneKind::kFricative, fricative(jitter(c, 0.03), c * 0.35, 0.0, 0.35));
  }
  for (double c : {6000.0, 4000.0, 2500.0}) {
    add(PhoneKind::kVoicedFricative, fricative(jitter(c, 0.03), c * 0.35, 0.35, 0.4));
  }
  auto stop = [&](double burst, double locus, bool voiced) {
    StateTarget closure;
    closure.voicing = voiced ? 0.08 : 0.0;
    closure.f1 = 200;
    closure.gain = voiced ? 0.25 : 0.02;
    closure.min_frames = 3;
    closure.max_frames = 6;
    StateTarget release;
    release.voicing = 0.0;
    release.frication = 1.0;
    release.noise_center = burst;
    release.noise_bandwidth = burst * 0.6;
    release.gain = 0.6;
    release.min_frames = 1;
    release.max_frames = 2;
    StateTarget transition = vowel_target(350, locus, 2600);
    transition.voicing = voiced ? 1.0 : 0.4;
    transition.frication = voiced ? 0.0 : 0.5;
    transition.noise_center = 1500;
    transition.noise_bandwidth = 2000;
    transition.gain = 0.6;
    transition.min_frames = 2;
    transition.max_frames = 3;
    return std::array<StateTarget, 3>{closure, release, transition};
  };
  const std::array<std::array<double, 2>, 5> voiceless{{{1200, 900}, {3800, 1800}, {2600, 2300}, {5000, 1600},
                                                        {1800, 1200}}};
  for (const auto& s : voiceless) add(PhoneKind::kStop, stop(s[0], s[1], false));
  const std::array<std::array<double, 2>, 4> voiced{{{1000, 900}, {3500, 1800}, {2300, 2200}, {1600, 1400}}};
  for (const auto& s : voiced) add(PhoneKind::kVoicedStop, stop(s[0], s[1], true));
  if (set.phones.size() != static_cast<std::size_t>(kNumPhones)) throw ConfigError("phone inventory size mismatch");
  return set;
}

struct Speaker {
  double f0 = 120.0;           // Hz
  double formant_scale = 1.0;  // vocal-tract length factor
  double rate = 1.0;           // duration multiplier
  double tilt = 0.9;           // glottal low-pass pole
  double breathiness = 0.05;   // aspiration noise mixed into voicing
  double jitter = 0.01;        // relative period perturbation
  double bandwidth_scale = 1.0;
};

inline Speaker random_speaker(Rng& rng) {
  Speaker s;
  const bool low = rng.below(2) == 0;
  s.f0 = low ? rng.uniform(85, 150) : rng.uniform(160, 260);
  s.formant_scale = low ? rng.uniform(0.88, 1.02) : rng.uniform(1.02, 1.2);
  s.rate = rng.uniform(0.8, 1.25);
  s.tilt = rng.uniform(0.82, 0.96);
  s.breathiness = rng.uniform(0.01, 0.12);
  s.jitter = rng.uniform(0.003, 0.02);
  s.bandwidth_scale = rng.uniform(0.8, 1.3);
  return s;
}

// Rendered audio segment with a label per 10 ms frame.
struct Segment {
  int label = 0;
  StateTarget target;
  std::int64_t samples = 0;
  bool silence = false;
};

struct Utterance {
  AudioStream audio;
  std::vector<Segment> segments;
  std::int64_t speech_begin = 0;  // first non-silence sample
  std::int64_t speech_end = 0;    // one past the last non-silence sample
};

// Two-pole resonator normalized to unit gain at DC.
class Resonator {
 public:
  void set(double freq, double bandwidth, double rate) {
    const double r = std::exp(-std::numbers::pi * bandwidth / rate);
    c_ = -r * r;
    b_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / rate);
    a_ = 1.0 - b_ - c_;
  }
  double step(double x) {
    const double y = a_ * x + b_ * y1_ + c_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a_ = 1, b_ = 0, c_ = 0, y1_ = 0, y2_ = 0;
};

// Resonator tuned to peak gain ~1 at its centre frequency, for noise bands.
class BandPass {
 public:
  void set(double freq, double bandwidth, double rate) {
    const double r = std::exp(-std::numbers::pi * bandwidth / rate);
    c_ = -r * r;
    b_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / rate);
    a_ = 1.0 - r;
  }
  double step(double x) {
    const double y = a_ * (x - x2_) + b_ * y1_ + c_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a_ = 1, b_ = 0, c_ = 0, x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

inline std::int64_t frames_to_samples(double frames, int rate) { return static_cast<std::int64_t>(frames * rate / 100.0); }

class Synthesizer {
 public:
  explicit Synthesizer(PhoneSet phones, int sample_rate = 16000) : phones_(std::move(phones)), rate_(sample_rate) {}

  const PhoneSet& phones() const { return phones_; }
  int sample_rate() const { return rate_; }

  // Appends the three states of a phone with speaker-scaled durations.
  void add_phone(std::vector<Segment>& out, int phone, const Speaker& spk, Rng& rng) const {
    const Phone& p = phones_.phones.at(static_cast<std::size_t>(phone));
    for (int s = 0; s < kStatesPerPhone; ++s) {
      const StateTarget& t = p.states[s];
      const double frames = rng.uniform(t.min_frames, t.max_frames + 0.999) * spk.rate;
      out.push_back({phone_label(phone, s), t, std::max<std::int64_t>(frames_to_samples(std::max(frames, 1.0), rate_), 80),
                     false});
    }
  }

  // Silence of one of three types split evenly over its five states.
  void add_silence(std::vector<Segment>& out, int type, double seconds) const {
    const auto total = static_cast<std::int64_t>(seconds * rate_);
    for (int s = 0; s < kSilenceStates; ++s) {
      StateTarget t;
      t.voicing = 0.0;
      t.frication = type == 1 ? 1.0 : 0.0;  // breath
      t.noise_center = 600;
      t.noise_bandwidth = 900;
      t.gain = type == 0 ? 0.0 : (type == 1 ? 0.05 : 0.03);
      if (type == 2) {  // low hum
        t.voicing = 1.0;
        t.f1 = 150;
        t.f2 = 400;
        t.f3 = 800;
      }
      const std::int64_t n = total * (s + 1) / kSilenceStates - total * s / kSilenceStates;
      out.push_back({silence_label(type, s), t, n, true});
    }
  }

  Utterance render(std::vector<Segment> segments, const Speaker& spk, Rng& rng) const {
    Utterance u;
    u.audio.sample_rate = rate_;
    std::int64_t total = 0;
    for (const auto& s : segments) total += s.samples;
    u.audio.samples.assign(static_cast<std::size_t>(total), 0.0f);
    u.speech_begin = total;
    u.speech_end = 0;

    Resonator r1, r2, r3;
    BandPass noise_band;
    double glottal = 0.0;
    double phase = 0.0;
    double f0_drift = 0.0;
    std::int64_t pos = 0;
    constexpr int kBlock = 16;
    const double hum_f0 = 60.0;
    const double tract = spk.formant_scale;
    StateTarget current = segments.empty() ? StateTarget{} : segments.front().target;
    for (std::size_t si = 0; si < segments.size(); ++si) {
      const Segment& seg = segments[si];
      const StateTarget from = current;
      const StateTarget& to = seg.target;
      if (!seg.silence) {
        u.speech_begin = std::min(u.speech_begin, pos);
        u.speech_end = std::max(u.speech_end, pos + seg.samples);
      }
      // Formants glide over the first 15 ms; levels over the first 5 ms.
      const double glide = 0.015 * rate_;
      const double fade = 0.005 * rate_;
      for (std::int64_t k = 0; k < seg.samples; k += kBlock) {
        const double w = std::min(1.0, static_cast<double>(k) / glide);
        const double wl = std::min(1.0, static_cast<double>(k) / fade);
        const double f1 = (from.f1 + w * (to.f1 - from.f1)) * tract;
        const double f2 = (from.f2 + w * (to.f2 - from.f2)) * tract;
        const double f3 = (from.f3 + w * (to.f3 - from.f3)) * tract;
        const double bw = spk.bandwidth_scale;
        r1.set(std::min(f1, 0.45 * rate_), 80 * bw, rate_);
        r2.set(std::min(f2, 0.45 * rate_), 120 * bw, rate_);
        r3.set(std::min(f3, 0.45 * rate_), 180 * bw, rate_);
        const double nc = std::min((from.noise_center + w * (to.noise_center - from.noise_center)) * tract, 0.45 * rate_);
        noise_band.set(nc, from.noise_bandwidth + w * (to.noise_bandwidth - from.noise_bandwidth), rate_);
        const double voicing = from.voicing + wl * (to.voicing - from.voicing);
        const double frication = from.frication + wl * (to.frication - from.frication);
        const double gain = from.gain + wl * (to.gain - from.gain);
        f0_drift = 0.995 * f0_drift + 0.02 * rng.uniform(-1.0, 1.0);
        const double f0 = seg.silence ? hum_f0 : spk.f0 * (1.0 + 0.08 * f0_drift);
        const std::int64_t end = std::min<std::int64_t>(k + kBlock, seg.samples);
        for (std::int64_t n = k; n < end; ++n) {
          phase += f0 / rate_;
          double pulse = 0.0;
          if (phase >= 1.0) {
            phase -= 1.0 + spk.jitter * rng.uniform(-1.0, 1.0);
            pulse = 1.0;
          }
          glottal = spk.tilt * glottal + (1.0 - spk.tilt) * pulse * 40.0;
          const double noise = rng.uniform(-1.0, 1.0);
          const double source = voicing * (glottal + spk.breathiness * noise);
          const double voiced = r3.step(r2.step(r1.step(source)));
          const double fric = frication * noise_band.step(noise) * 3.0;
          u.audio.samples[static_cast<std::size_t>(pos + n)] = static_cast<float>(gain * (voiced + fric));
        }
      }
      current = to;
      pos += seg.samples;
    }
    if (u.speech_end <= u.speech_begin) u.speech_begin = u.speech_end = 0;
    // Peak-normalize, then add a faint noise floor so no frame is digital silence.
    float peak = 0.0f;
    for (float s : u.audio.samples) peak = std::max(peak, std::abs(s));
    const float g = peak > 0.0f ? 0.3f / peak : 0.0f;
    for (auto& s : u.audio.samples) s = s * g + static_cast<float>(3e-4 * rng.uniform(-1.0, 1.0));
    u.segments = std::move(segments);
    return u;
  }

 private:
  PhoneSet phones_;
  int rate_;
};

// Per-frame labels for an utterance: the segment under each frame's centre.
inline std::vector<int> frame_labels(const Utterance& u, const FrontendConfig& fc) {
  const auto n = fc.num_frames(static_cast<std::int64_t>(u.audio.samples.size()));
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::size_t seg = 0;
  std::int64_t seg_end = u.segments.empty() ? 0 : u.segments[0].samples;
  for (std::int64_t t = 0; t < n; ++t) {
    const std::int64_t centre = t * fc.frame_shift() + fc.frame_length() / 2;
    while (seg + 1 < u.segments.size() && centre >= seg_end) seg_end += u.segments[++seg].samples;
    labels[static_cast<std::size_t>(t)] = u.segments.empty() ? silence_label(0, 0) : u.segments[seg].label;
  }
  return labels;
}

struct Word {
  std::string name;
  std::vector<int> phones;
};

struct Lexicon {
  std::vector<Word> keywords;
  std::vector<Word> fillers;
  std::vector<Word> confusers;  // share a prefix or suffix with a keyword
};

inline bool is_vowel_like(PhoneKind k) {
  return k == PhoneKind::kVowel || k == PhoneKind::kDiphthong || k == PhoneKind::kApproximant;
}

// Words alternate consonant-like and vowel-like phones.
inline Word random_word(const PhoneSet& set, int length, Rng& rng, std::string name) {
  std::vector<int> vowels, consonants;
  for (int i = 0; i < kNumPhones; ++i) (is_vowel_like(set.phones[i].kind) ? vowels : consonants).push_back(i);
  Word w{std::move(name), {}};
  bool vowel = rng.below(2) == 0;
  for (int i = 0; i < length; ++i, vowel = !vowel) {
    const auto& pool = vowel ? vowels : consonants;
    w.phones.push_back(pool[rng.below(pool.size())]);
  }
  return w;
}

inline Lexicon make_lexicon(const PhoneSet& set, int num_keywords, int num_fillers, std::uint64_t seed) {
  if (num_keywords < 1) throw ConfigError("need at least one keyword");
  Rng rng(seed);
  Lexicon lex;
  for (int k = 0; k < num_keywords; ++k) {
    Word w;
    do {
      w = random_word(set, static_cast<int>(rng.range(6, 7)), rng, "keyword" + std::to_string(k));
    } while (std::any_of(lex.keywords.begin(), lex.keywords.end(),
                         [&](const Word& o) { return o.phones[0] == w.phones[0]; }));
    lex.keywords.push_back(w);
  }
  for (int i = 0; i < num_fillers; ++i) {
    lex.fillers.push_back(random_word(set, static_cast<int>(rng.range(2, 7)), rng, "word" + std::to_string(i)));
  }
  for (const auto& kw : lex.keywords) {
    const int n = static_cast<int>(kw.phones.size());
    for (int v = 0; v < 4; ++v) {
      Word c = random_word(set, static_cast<int>(rng.range(4, 6)), rng, kw.name + "_confuser" + std::to_string(v));
      const int shared = n / 2;
      if (v % 2 == 0) {
        std::copy(kw.phones.begin(), kw.phones.begin() + shared, c.phones.begin());  // prefix
      } else {
        std::copy(kw.phones.end() - shared, kw.phones.end(), c.phones.end() - shared);  // suffix
      }
      lex.confusers.push_back(c);
    }
  }
  return lex;
}

struct HarnessConfig {
  std::uint64_t seed = 1;
  int num_keywords = 2;
  int num_fillers = 300;
  double phone_corpus_seconds = 900;
  double train_seconds = 1800;
  double test_seconds = 1800;
  double stream_seconds = 300;  // length of each derivative stream
  double keyword_fraction = 0.3;
  double confuser_fraction = 0.15;
  int train_speakers = 60;
  int test_speakers = 20;
  MixSpec mix{10.0, -10.0, 10.0, 0.05, 0.4, 0};
};

struct Harness {
  HarnessConfig config;
  Synthesizer synth{make_phone_set()};
  Lexicon lexicon;
  std::vector<Speaker> train_speakers;
  std::vector<Speaker> test_speakers;

  explicit Harness(HarnessConfig cfg) : config(std::move(cfg)) {
    Rng rng(config.seed);
    lexicon = make_lexicon(synth.phones(), config.num_keywords, config.num_fillers, rng.below(1ull << 62));
    for (int i = 0; i < config.train_speakers; ++i) train_speakers.push_back(random_speaker(rng));
    for (int i = 0; i < config.test_speakers; ++i) test_speakers.push_back(random_speaker(rng));
  }

  std::vector<std::string> class_names() const {
    std::vector<std::string> names;
    for (const auto& k : lexicon.keywords) names.push_back(k.name);
    names.push_back(default_filler_name());
    return names;
  }

  // Continuous speech of random filler words with short pauses.
  Utterance sentence(const Speaker& spk, Rng& rng, int words) const {
    std::vector<Segment> segs;
    synth.add_silence(segs, static_cast<int>(rng.below(kSilenceTypes)), rng.uniform(0.1, 0.3));
    for (int w = 0; w < words; ++w) {
      const Word& word = lexicon.fillers[rng.below(lexicon.fillers.size())];
      for (int p : word.phones) synth.add_phone(segs, p, spk, rng);
      if (rng.below(3) == 0) synth.add_silence(segs, static_cast<int>(rng.below(kSilenceTypes)), rng.uniform(0.05, 0.25));
    }
    synth.add_silence(segs, static_cast<int>(rng.below(kSilenceTypes)), rng.uniform(0.1, 0.3));
    return synth.render(std::move(segs), spk, rng);
  }

  // Command-style clip: one keyword, or one to three filler/confuser words.
  LabeledClip clip(const Speaker& spk, Rng& rng) const {
    std::vector<Segment> segs;
    synth.add_silence(segs, static_cast<int>(rng.below(kSilenceTypes)), rng.uniform(0.08, 0.25));
    int keyword = -1;
    const double u = rng.uniform();
    if (u < config.keyword_fraction) {
      keyword = static_cast<int>(rng.below(lexicon.keywords.size()));
      for (int p : lexicon.keywords[keyword].phones) synth.add_phone(segs, p, spk, rng);
    } else if (u < config.keyword_fraction + config.confuser_fraction) {
      for (int p : lexicon.confusers[rng.below(lexicon.confusers.size())].phones) synth.add_phone(segs, p, spk, rng);
    } else {
      const int words = static_cast<int>(rng.range(1, 3));
      for (int w = 0; w < words; ++w) {
        for (int p : lexicon.fillers[rng.below(lexicon.fillers.size())].phones) synth.add_phone(segs, p, spk, rng);
      }
    }
    synth.add_silence(segs, static_cast<int>(rng.below(kSilenceTypes)), rng.uniform(0.08, 0.25));
    const Utterance utt = synth.render(std::move(segs), spk, rng);
    LabeledClip c;
    c.audio = utt.audio;
    c.keyword_index = keyword;
    c.active_begin = utt.speech_begin;
    c.active_end = utt.speech_end;
    return c;
  }

  // Phone-labeled corpus of roughly the requested duration.
  std::vector<Utterance> phone_corpus(double seconds, std::uint64_t stream_seed) const {
    Rng rng(stream_seed);
    std::vector<Utterance> out;
    double total = 0.0;
    while (total < seconds) {
      const Speaker& spk = train_speakers[rng.below(train_speakers.size())];
      out.push_back(sentence(spk, rng, static_cast<int>(rng.range(4, 12))));
      total += static_cast<double>(out.back().audio.samples.size()) / synth.sample_rate();
    }
    return out;
  }

  std::vector<LabeledClip> clips(double seconds, const std::vector<Speaker>& speakers, Rng& rng) const {
    std::vector<LabeledClip> out;
    double total = 0.0;
    while (total < seconds) {
      out.push_back(clip(speakers[rng.below(speakers.size())], rng));
      total += static_cast<double>(out.back().audio.samples.size()) / synth.sample_rate() +
               0.5 * (config.mix.gap_min_seconds + config.mix.gap_max_seconds);
    }
    return out;
  }

  // Derivative streams of about stream_seconds each, totalling seconds.
  std::vector<DerivativeStream> streams(double seconds, bool held_out, std::uint64_t stream_seed) const {
    Rng rng(stream_seed);
    const auto& speakers = held_out ? test_speakers : train_speakers;
    std::vector<DerivativeStream> out;
    for (double done = 0.0; done < seconds - 1e-9; done += config.stream_seconds) {
      const double len = std::min(config.stream_seconds, seconds - done);
      MixSpec spec = config.mix;
      spec.seed = rng.below(1ull << 62);
      out.push_back(make_derivative_stream(clips(len, speakers, rng), spec));
      out.back().truth.keyword_names = class_names();
    }
    return out;
  }
};

}  // namespace kws::synth
