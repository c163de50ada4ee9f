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

// Command-line front end: detect, train, cost, eval, synth, harness, init,
// summary. Exit codes: 0 ok, 1 runtime failure, 2 bad arguments or data,
// 3 I/O, 4 unusable model file.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kws/cost.hpp"
#include "kws/dataset.hpp"
#include "kws/eval.hpp"
#include "kws/inference.hpp"
#include "kws/io.hpp"
#include "kws/log.hpp"
#include "kws/model.hpp"
#include "kws/model_io.hpp"
#include "kws/recipe.hpp"
#include "kws/synth.hpp"
#include "kws/training.hpp"
#include "kws/wav.hpp"

namespace {

using namespace kws;
using nlohmann::json;

enum ExitCode { kOk = 0, kRuntime = 1, kUsage = 2, kIo = 3, kModel = 4 };

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kIo:
    case ErrorKind::kFormat:
      return kIo;
    case ErrorKind::kConfig:
    case ErrorKind::kShape:
    case ErrorKind::kInput:
    case ErrorKind::kInsufficientData:
    case ErrorKind::kDimension:
    case ErrorKind::kUndefinedRate:
      return kUsage;
    case ErrorKind::kBadMagic:
    case ErrorKind::kVersionMismatch:
    case ErrorKind::kTruncated:
      return kModel;
    default:
      return kRuntime;
  }
}

// Any failure while loading a model is a model error, except a missing or
// unreadable file.
TdnnModel open_model(const std::string& path) {
  try {
    return load_model(path);
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw Failure{kModel, path + ": " + e.what()};
  }
}

void require_file(const std::string& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Failure{kIo, std::string("cannot open ") + what + ": " + path};
}

std::vector<double> parse_thresholds(const std::string& s) {
  if (s.empty()) return default_thresholds();
  std::vector<double> out;
  for (const auto& part : split(s, ',')) {
    const double v = parse_double(part, "threshold");
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("thresholds must lie in [0, 1]");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty threshold list");
  return out;
}

// "3" means three keywords with default names; otherwise a comma list.
std::vector<std::string> keyword_list(const std::string& spec, const std::string& preset) {
  if (!preset.empty()) {
    if (preset != "gsc10") throw ConfigError("unknown preset '" + preset + "' (expected gsc10)");
    return gsc10_keywords();
  }
  if (spec.empty()) return {};
  if (spec.find_first_not_of("0123456789") == std::string::npos) {
    const int k = std::stoi(spec);
    if (k < 1) throw ConfigError("need at least one keyword");
    auto names = default_class_names(k);
    names.pop_back();
    return names;
  }
  auto names = split(spec, ',');
  for (const auto& n : names) {
    if (n.empty()) throw ConfigError("empty keyword name in '" + spec + "'");
  }
  return names;
}

std::vector<std::string> with_filler(std::vector<std::string> keywords) {
  keywords.push_back(default_filler_name());
  return keywords;
}

void print_json_line(const json& j) { std::cout << j.dump() << '\n'; }

// ---------------------------------------------------------------- detect

struct DetectArgs {
  std::string model, wav, trace_out, skip = "none";
  double threshold = 0.5;
  bool stats = false, json_doc = false;
  int chunk = 1600;
};

int cmd_detect(const DetectArgs& a) {
  const SkipMode mode = parse_skip_mode(a.skip);
  if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw ConfigError("--threshold must lie in [0, 1]");
  if (a.chunk < 1) throw ConfigError("--chunk must be positive");
  require_file(a.wav, "audio file");
  const TdnnModel model = open_model(a.model);
  const AudioStream audio = read_wav(a.wav);
  if (audio.sample_rate != model.frontend.sample_rate) {
    throw ConfigError(a.wav + ": sample rate " + std::to_string(audio.sample_rate) + " Hz, model expects " +
                      std::to_string(model.frontend.sample_rate) + " Hz");
  }
  KeywordSpotter spotter(model, a.threshold, mode, a.stats);
  StreamOutput out;
  const std::span<const float> samples(audio.samples);
  for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(a.chunk)) {
    spotter.accept_audio(samples.subspan(i, std::min<std::size_t>(static_cast<std::size_t>(a.chunk), samples.size() - i)),
                         out);
  }
  json events = json::array();
  for (const auto& e : out.events) events.push_back(event_to_json(e, model.frontend));
  std::optional<json> stats;
  if (a.stats) stats = to_json(measured_mulps(spotter.state(), model.net));
  if (a.json_doc) {
    json doc = {{"events", events}, {"outputs", out.trace.samples.size()}, {"skip", to_string(mode)}};
    if (stats) doc["stats"] = *stats;
    std::cout << doc.dump(1) << '\n';
  } else {
    for (const auto& e : events) print_json_line(e);
    if (stats) std::cerr << stats->dump() << '\n';
  }
  if (!a.trace_out.empty()) {
    std::ostringstream csv;
    write_trace_csv(csv, out.trace, model.keyword_names);
    write_text_file(a.trace_out, csv.str());
  }
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string stage, data, out, init_from, skip = "none", preset, keywords, log_path;
  std::optional<double> lr;
  int epochs = 0, batch = 64, subsample = 0;
  std::uint64_t seed = 1;
  std::int64_t max_steps = 0;
  bool freeze_phone = false, fine_tune = false;
  double stream_seconds = 300.0;
};

class EpochSink {
 public:
  explicit EpochSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw IoError("cannot write log: " + path);
    }
  }
  EpochCallback callback(const char* stage) {
    return [this, stage](const EpochLog& e) {
      json j = to_json(e);
      j["stage"] = stage;
      (file_.is_open() ? static_cast<std::ostream&>(file_) : std::cerr) << j.dump() << '\n';
    };
  }

 private:
  std::ofstream file_;
};

LabeledCorpus phone_corpus_from(const fs::path& dir, const FrontendConfig& fc) {
  LabeledCorpus corpus;
  for (auto& item : load_phone_dir(dir)) {
    LabeledFrameSet set;
    set.features = extract_fbank(item.audio, fc);
    if (item.labels.size() != set.features.size()) {
      throw ShapeError(item.name + ": " + std::to_string(item.labels.size()) + " phone labels for " +
                       std::to_string(set.features.size()) + " feature frames");
    }
    set.phone_labels = std::move(item.labels);
    corpus.push_back(std::move(set));
  }
  return corpus;
}

struct WordData {
  LabeledCorpus corpus;
  std::vector<std::string> class_names;
};

WordData word_corpus_from(const fs::path& dir, const std::vector<std::string>& keywords, const std::string& preset,
                          const FrontendConfig& fc, int receptive_field, std::uint64_t seed, double stream_seconds) {
  WordData d;
  std::vector<std::pair<AudioStream, GroundTruth>> streams;
  if (has_label_folders(dir)) {
    const ClipSet clips = load_label_folders(dir, keywords, preset == "gsc10" ? gsc10_fillers() : std::vector<std::string>{});
    d.class_names = clips.class_names;
    Rng rng(seed);
    std::vector<std::size_t> order(clips.clips.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<LabeledClip> batch;
    double seconds = 0.0;
    auto flush = [&] {
      if (batch.empty()) return;
      MixSpec spec;
      spec.gap_min_seconds = 0.05;
      spec.gap_max_seconds = 0.4;
      spec.seed = rng.below(1ull << 62);
      auto s = make_derivative_stream(batch, spec, fc.frame_shift());
      streams.emplace_back(std::move(s.audio), std::move(s.truth));
      batch.clear();
      seconds = 0.0;
    };
    for (std::size_t i : order) {
      batch.push_back(clips.clips[i]);
      seconds += static_cast<double>(batch.back().audio.samples.size()) / batch.back().audio.sample_rate;
      if (seconds >= stream_seconds) flush();
    }
    flush();
  } else {
    for (auto& s : load_stream_dir(dir)) {
      if (d.class_names.empty()) d.class_names = s.truth.keyword_names;
      if (s.truth.keyword_names != d.class_names) throw InputError(s.name + ": keyword list differs from other streams");
      streams.emplace_back(std::move(s.audio), std::move(s.truth));
    }
    if (d.class_names.size() < 2) throw InputError("ground truth must list keyword names followed by the filler");
  }
  const int filler = static_cast<int>(d.class_names.size()) - 1;
  for (const auto& [audio, truth] : streams) {
    d.corpus.push_back(word_frame_set(audio, truth, fc, receptive_field, filler));
  }
  return d;
}

int cmd_train(const TrainArgs& a) {
  const Stage stage = a.stage == "phone" ? Stage::kPhone : Stage::kWord;
  TrainConfig cfg = TrainConfig::for_stage(stage);
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.epochs > 0) cfg.epochs = a.epochs;
  if (a.subsample > 0) cfg.output_subsample = a.subsample;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  cfg.max_steps = a.max_steps;
  cfg.freeze_phone_nn = a.freeze_phone;
  cfg.skip_mode = parse_skip_mode(a.skip);
  cfg.validate();
  if (stage == Stage::kWord && a.init_from.empty()) {
    throw Failure{kUsage, "--stage word needs a phone-stage model: pass --init-from <model>"};
  }
  if (stage == Stage::kPhone && (a.fine_tune || cfg.skip_mode != SkipMode::kNone)) {
    throw ConfigError("--fine-tune and --skip apply to the word stage only");
  }
  EpochSink sink(a.log_path);
  const auto keywords = keyword_list(a.keywords, a.preset);

  TdnnModel model;
  if (stage == Stage::kPhone) {
    if (!a.init_from.empty()) {
      model = open_model(a.init_from);
    } else {
      model = build_default(keywords.empty() ? 1 : static_cast<int>(keywords.size()), a.seed);
      if (!keywords.empty()) model.keyword_names = with_filler(keywords);
    }
    LabeledCorpus corpus = phone_corpus_from(a.data, model.frontend);
    if (a.init_from.empty()) model.normalizer = fit_corpus_normalizer({&corpus});
    normalize_corpus(corpus, model.normalizer);
    model.net = train_phone_stage(std::move(model.net), corpus, cfg, sink.callback("phone"));
  } else {
    const TdnnModel init = open_model(a.init_from);
    std::vector<std::string> names = keywords;
    if (names.empty()) {
      names = init.keyword_names;
      names.pop_back();
    }
    WordData data = word_corpus_from(a.data, names, a.preset, init.frontend, init.net.receptive_field(), a.seed,
                                     a.stream_seconds);
    normalize_corpus(data.corpus, init.normalizer);
    model = init;
    model.keyword_names = data.class_names;
    if (a.fine_tune) {
      if (init.num_classes() != static_cast<int>(data.class_names.size())) {
        throw ShapeError("--fine-tune: model has " + std::to_string(init.num_classes()) + " classes, data has " +
                         std::to_string(data.class_names.size()));
      }
      model.net = fine_tune_word_stage(init.net, data.corpus, cfg, sink.callback("word"));
    } else {
      Architecture arch = architecture_of(init.net);
      arch.num_classes = static_cast<int>(data.class_names.size());
      model.net = train_word_stage(init.net.phone, arch, data.corpus, cfg, sink.callback("word"));
    }
  }
  model.validate();
  save_model(model, a.out);
  log::info("wrote ", a.out);
  return kOk;
}

// ---------------------------------------------------------------- cost

struct CostArgs {
  std::string model, skip = "all";
  bool json_out = false, naive = false;
  double frame_rate = kDefaultFrameRate;
};

int cmd_cost(const CostArgs& a) {
  if (!(a.frame_rate > 0.0)) throw ConfigError("--frame-rate must be positive");
  const TdnnModel model = a.model.empty() ? build_default(1) : open_model(a.model);
  std::vector<SkipMode> modes;
  if (a.skip == "all") {
    modes = {SkipMode::kNone, SkipMode::kStride2, SkipMode::kStride4};
  } else {
    modes = {parse_skip_mode(a.skip)};
  }
  std::vector<CostReport> reports;
  for (SkipMode m : modes) {
    reports.push_back(mulps(model.net, m, a.frame_rate));
    if (a.naive) reports.push_back(naive_mulps(model.net, m, a.frame_rate));
  }
  if (a.json_out) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    std::cout << arr.dump(1) << '\n';
  } else {
    std::cout << render_cost_table(reports);
  }
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string trace, truth, model, wav, data, thresholds, roc_out, skip = "none";
  bool json_out = false;
  int tolerance = kMatchToleranceFrames;
};

int cmd_eval(const EvalArgs& a) {
  const auto thresholds = parse_thresholds(a.thresholds);
  if (a.tolerance < 0) throw ConfigError("--tolerance must be non-negative");
  std::vector<PosteriorTrace> traces;
  std::vector<GroundTruth> truths;
  if (!a.trace.empty()) {
    if (a.truth.empty()) throw Failure{kUsage, "--trace needs --truth"};
    std::istringstream in(read_text_file(a.trace));
    NamedTrace t = read_trace_csv(in, a.trace);
    GroundTruth g = load_truth(a.truth);
    if (g.keyword_names.empty()) g.keyword_names = t.names;
    traces.push_back(std::move(t.trace));
    truths.push_back(std::move(g));
  } else {
    if (a.model.empty()) throw Failure{kUsage, "eval needs --trace/--truth, --model/--wav/--truth or --model/--data"};
    const SkipMode mode = parse_skip_mode(a.skip);
    std::vector<std::pair<AudioStream, GroundTruth>> inputs;
    if (!a.data.empty()) {
      for (auto& s : load_stream_dir(a.data)) inputs.emplace_back(std::move(s.audio), std::move(s.truth));
    } else {
      if (a.wav.empty() || a.truth.empty()) throw Failure{kUsage, "--model needs --wav and --truth, or --data"};
      require_file(a.wav, "audio file");
      inputs.emplace_back(read_wav(a.wav), load_truth(a.truth));
    }
    const TdnnModel model = open_model(a.model);
    for (auto& [audio, truth] : inputs) {
      const auto features = model.normalizer.apply(extract_fbank(audio, model.frontend));
      traces.push_back(batch_forward(features, model.net, mode));
      if (truth.keyword_names.empty()) truth.keyword_names = model.keyword_names;
      truths.push_back(std::move(truth));
    }
  }
  for (const auto& t : truths) {
    if (static_cast<int>(t.keyword_names.size()) != traces.front().num_classes) {
      throw ShapeError("ground truth names " + std::to_string(t.keyword_names.size()) + " classes, trace has " +
                       std::to_string(traces.front().num_classes));
    }
  }
  const RocCurve roc = pooled_roc(traces, truths, thresholds, a.tolerance);
  const double frr = roc.frr_at(kReferenceFaPerHour);
  std::ostringstream csv;
  write_roc_csv(csv, roc);
  if (!a.roc_out.empty()) write_text_file(a.roc_out, csv.str());
  std::int64_t spans = 0;
  double seconds = 0.0;
  for (const auto& t : truths) {
    spans += static_cast<std::int64_t>(t.spans.size());
    seconds += t.total_audio_seconds;
  }
  if (a.json_out) {
    json points = json::array();
    for (const auto& p : roc.points) points.push_back({{"threshold", p.threshold}, {"frr_percent", p.frr_percent}, {"fa_per_hour", p.fa_per_hour}});
    std::cout << json{{"frr_at_0.5_fa", frr}, {"keyword_spans", spans}, {"audio_seconds", seconds}, {"roc", points}}.dump(1)
              << '\n';
  } else if (!a.roc_out.empty()) {
    std::cout << "frr_at_0.5_fa=" << format_double(frr) << '\n';
  } else {
    std::cout << csv.str();
    std::cerr << "frr_at_0.5_fa=" << format_double(frr) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string clips, out, truth_out, keywords, preset, noise = "white";
  std::uint64_t seed = 0;
  std::optional<double> snr_db;
  double gain_low = -10.0, gain_high = 10.0, gap_min = 0.0, gap_max = 0.5;
  int max_clips = 0;
};

int cmd_synth(const SynthArgs& a) {
  const auto keywords = keyword_list(a.keywords, a.preset);
  if (keywords.empty()) throw Failure{kUsage, "synth needs --keywords or --preset"};
  MixSpec spec;
  spec.amplitude_low_db = a.gain_low;
  spec.amplitude_high_db = a.gain_high;
  spec.gap_min_seconds = a.gap_min;
  spec.gap_max_seconds = a.gap_max;
  spec.seed = a.seed;
  ClipSet set = load_label_folders(a.clips, keywords, a.preset == "gsc10" ? gsc10_fillers() : std::vector<std::string>{});
  if (a.max_clips > 0 && static_cast<std::size_t>(a.max_clips) < set.clips.size()) {
    Rng rng(a.seed ^ 0xc11b5ULL);
    rng.shuffle(set.clips);
    set.clips.resize(static_cast<std::size_t>(a.max_clips));
  }
  DerivativeStream stream = make_derivative_stream(set.clips, spec);
  stream.truth.keyword_names = set.class_names;
  AudioStream audio = std::move(stream.audio);
  if (a.snr_db) {
    AudioStream noise;
    Rng rng(a.seed ^ 0x9015eULL);
    if (a.noise == "white") {
      noise = white_noise(audio.samples.size(), rng, 0.1, audio.sample_rate);
    } else if (a.noise == "pink") {
      noise = pink_noise(audio.samples.size(), rng, 0.1, audio.sample_rate);
    } else {
      noise = read_wav(a.noise);
    }
    audio = mix_noise(audio, noise, *a.snr_db, a.seed).audio;
  }
  write_wav(a.out, audio);
  std::string truth_path = a.truth_out;
  if (truth_path.empty()) truth_path = fs::path(a.out).replace_extension(".json").string();
  save_truth(truth_path, stream.truth);
  return kOk;
}

// ---------------------------------------------------------------- harness, init, summary

struct HarnessArgs {
  std::string out;
  std::uint64_t seed = 1;
  int keywords = 2, clips_per_label = 0;
  double phone_seconds = 900, train_seconds = 1800, test_seconds = 1800;
};

int cmd_harness(const HarnessArgs& a) {
  synth::HarnessConfig cfg;
  cfg.seed = a.seed;
  cfg.num_keywords = a.keywords;
  const synth::Harness h(cfg);
  HarnessExport what;
  what.phone_seconds = a.phone_seconds;
  what.train_seconds = a.train_seconds;
  what.test_seconds = a.test_seconds;
  what.clips_per_label = a.clips_per_label;
  export_harness(h, a.out, what);
  json names = h.class_names();
  std::cout << json{{"out", a.out}, {"classes", names}}.dump() << '\n';
  return kOk;
}

int cmd_init(const std::string& out, const std::string& keywords, std::uint64_t seed) {
  auto names = keyword_list(keywords.empty() ? "1" : keywords, "");
  TdnnModel m = build_default(static_cast<int>(names.size()), seed);
  m.keyword_names = with_filler(names);
  save_model(m, out);
  return kOk;
}

int cmd_summary(const std::string& path, bool json_out) {
  const TdnnModel m = open_model(path);
  if (json_out) {
    std::cout << json{{"classes", m.keyword_names}, {"params", m.net.param_count()}, {"receptive_field", m.net.receptive_field()}}
                     .dump(1)
              << '\n';
  } else {
    std::cout << summary(m);
  }
  return kOk;
}

// Runs fn with the failure-to-exit-code mapping.
template <typename F>
int guarded(F&& fn) {
  try {
    return fn();
  } catch (const Failure& f) {
    std::cerr << "kws: " << f.message << '\n';
    return f.code;
  } catch (const Error& e) {
    std::cerr << "kws: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "kws: " << e.what() << '\n';
    return kIo;
  } catch (const std::bad_alloc&) {
    std::cerr << "kws: out of memory\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "kws: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyword spotting with a cached time-delay neural network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "kws 1.0.0");

  const std::vector<std::string> skip_values = {"none", "2", "4"};

  DetectArgs d;
  auto* detect = app.add_subcommand("detect", "Stream a WAV file through a model and print detections as JSON lines");
  detect->add_option("--model", d.model, "Model file")->required();
  detect->add_option("--wav,wav", d.wav, "16-bit PCM mono WAV")->required();
  detect->add_option("--threshold", d.threshold, "Smoothed posterior threshold")->capture_default_str();
  detect->add_option("--skip", d.skip, "Frame skipping: none, 2 or 4")->check(CLI::IsMember(skip_values))->capture_default_str();
  detect->add_option("--trace-out", d.trace_out, "Write the posterior trace as CSV");
  detect->add_option("--chunk", d.chunk, "Samples per streaming chunk")->capture_default_str();
  detect->add_flag("--stats", d.stats, "Report measured multiplications per second");
  detect->add_flag("--json", d.json_doc, "Print one JSON document instead of JSON lines");

  TrainArgs t;
  auto* train = app.add_subcommand("train", "Train the phone stage or the keyword stage");
  train->add_option("--stage", t.stage, "phone or word")->required()->check(CLI::IsMember({"phone", "word"}));
  train->add_option("--data", t.data, "Data directory")->required();
  train->add_option("--out", t.out, "Output model file")->required();
  train->add_option("--init-from", t.init_from, "Starting model (required for --stage word)");
  train->add_option("--epochs", t.epochs, "Epochs (default 10 phone, 3 word)");
  train->add_option("--lr", t.lr, "Learning rate (default 0.01 phone, 0.003 word)");
  train->add_option("--batch", t.batch, "Minibatch size")->capture_default_str();
  train->add_option("--seed", t.seed, "Random seed")->capture_default_str();
  train->add_option("--max-steps", t.max_steps, "Stop after this many updates (0 = no limit)");
  train->add_option("--subsample", t.subsample, "Keep every n-th keyword output (default 2 word, 1 phone)");
  train->add_option("--skip", t.skip, "Evaluation geometry for the keyword stage")->check(CLI::IsMember(skip_values))->capture_default_str();
  train->add_option("--preset", t.preset, "Keyword preset for label folders")->check(CLI::IsMember({"gsc10"}));
  train->add_option("--keywords", t.keywords, "Keyword names (comma list) or a count");
  train->add_option("--stream-seconds", t.stream_seconds, "Length of streams built from label folders")->capture_default_str();
  train->add_option("--log", t.log_path, "Write per-epoch JSON lines here instead of stderr");
  train->add_flag("--freeze-phone", t.freeze_phone, "Keep phone layers fixed during keyword training");
  train->add_flag("--fine-tune", t.fine_tune, "Continue training the keyword layers of --init-from");

  CostArgs c;
  auto* cost = app.add_subcommand("cost", "Parameters and multiplications per second");
  cost->add_option("--model", c.model, "Model file (default: untrained 1-keyword model)");
  cost->add_option("--skip", c.skip, "none, 2, 4 or all")->check(CLI::IsMember({"none", "2", "4", "all"}))->capture_default_str();
  cost->add_option("--frame-rate", c.frame_rate, "Frames per second")->capture_default_str();
  cost->add_flag("--naive", c.naive, "Also report the cost without caching");
  cost->add_flag("--json", c.json_out, "Machine-readable output");

  EvalArgs e;
  auto* eval = app.add_subcommand("eval", "ROC sweep and FRR at 0.5 false alarms per hour");
  eval->add_option("--trace", e.trace, "Posterior trace CSV from detect --trace-out");
  eval->add_option("--truth", e.truth, "Ground-truth JSON");
  eval->add_option("--model", e.model, "Model file");
  eval->add_option("--wav", e.wav, "Audio to score with --model");
  eval->add_option("--data", e.data, "Directory of *.wav with *.json truth, scored with --model");
  eval->add_option("--skip", e.skip, "Frame skipping for --model")->check(CLI::IsMember(skip_values))->capture_default_str();
  eval->add_option("--thresholds", e.thresholds, "Descending comma list (default: fine sweep)");
  eval->add_option("--tolerance", e.tolerance, "Frames after a keyword end that still count as a hit")->capture_default_str();
  eval->add_option("--roc-out", e.roc_out, "Write the ROC CSV here");
  eval->add_flag("--json", e.json_out, "Machine-readable output");

  SynthArgs s;
  auto* syn = app.add_subcommand("synth", "Concatenate labeled clips into a stream with ground truth");
  syn->add_option("--clips", s.clips, "Label-folder directory")->required();
  syn->add_option("--out", s.out, "Output WAV")->required();
  syn->add_option("--truth", s.truth_out, "Output ground truth (default: next to --out)");
  syn->add_option("--keywords", s.keywords, "Keyword folder names (comma list)");
  syn->add_option("--preset", s.preset, "Keyword preset")->check(CLI::IsMember({"gsc10"}));
  syn->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  syn->add_option("--snr-db", s.snr_db, "Add noise at this SNR");
  syn->add_option("--noise", s.noise, "white, pink or a WAV file")->capture_default_str();
  syn->add_option("--gain-low", s.gain_low, "Lowest clip gain in dB")->capture_default_str();
  syn->add_option("--gain-high", s.gain_high, "Highest clip gain in dB")->capture_default_str();
  syn->add_option("--gap-min", s.gap_min, "Shortest silence between clips in seconds")->capture_default_str();
  syn->add_option("--gap-max", s.gap_max, "Longest silence between clips in seconds")->capture_default_str();
  syn->add_option("--max-clips", s.max_clips, "Use a seeded random subset of this many clips");

  HarnessArgs h;
  auto* harness = app.add_subcommand("harness", "Write the synthetic desk-scale dataset to disk");
  harness->add_option("--out", h.out, "Output directory")->required();
  harness->add_option("--seed", h.seed, "Random seed")->capture_default_str();
  harness->add_option("--keywords", h.keywords, "Number of keywords")->capture_default_str()->check(CLI::Range(1, 20));
  harness->add_option("--phone-seconds", h.phone_seconds, "Phone-labeled audio")->capture_default_str();
  harness->add_option("--train-seconds", h.train_seconds, "Training streams")->capture_default_str();
  harness->add_option("--test-seconds", h.test_seconds, "Held-out streams")->capture_default_str();
  harness->add_option("--clips-per-label", h.clips_per_label, "Also write label folders with this many clips each");

  std::string init_out, init_keywords;
  std::uint64_t init_seed = 0;
  auto* init = app.add_subcommand("init", "Write a randomly initialized model");
  init->add_option("--out", init_out, "Output model file")->required();
  init->add_option("--keywords", init_keywords, "Keyword names (comma list) or a count");
  init->add_option("--seed", init_seed, "Random seed")->capture_default_str();

  std::string summary_model;
  bool summary_json = false;
  auto* sum = app.add_subcommand("summary", "Describe a model file");
  sum->add_option("--model,model", summary_model, "Model file")->required();
  sum->add_flag("--json", summary_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kUsage;
  }

  return guarded([&] {
    if (*detect) return cmd_detect(d);
    if (*train) {
      if (t.subsample == 0) t.subsample = t.stage == "word" ? 2 : 1;
      if (t.epochs == 0) t.epochs = t.stage == "word" ? 3 : 10;
      return cmd_train(t);
    }
    if (*cost) return cmd_cost(c);
    if (*eval) return cmd_eval(e);
    if (*syn) return cmd_synth(s);
    if (*harness) return cmd_harness(h);
    if (*init) return cmd_init(init_out, init_keywords, init_seed);
    return cmd_summary(summary_model, summary_json);
  });
}
