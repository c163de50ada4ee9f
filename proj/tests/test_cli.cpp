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

// Drives the kws binary end to end and checks outputs and exit codes.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "kws/io.hpp"
#include "kws/model_io.hpp"
#include "kws/wav.hpp"

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir() {
  static const fs::path d = [] {
    const fs::path p = fs::temp_directory_path() / ("kws_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

class RemoveScratch : public ::testing::Environment {
 public:
  void TearDown() override { fs::remove_all(scratch_dir()); }
};

const auto* const kCleanup = ::testing::AddGlobalTestEnvironment(new RemoveScratch);

class Cli : public ::testing::Test {
 protected:
  static fs::path dir() { return scratch_dir(); }

  static std::string path(const std::string& name) { return (dir() / name).string(); }

  static Outcome run(const std::string& args) {
    const auto out = dir() / "stdout.txt";
    const auto err = dir() / "stderr.txt";
    const std::string cmd = std::string("\"") + KWS_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  // Small harness export shared by the training tests.
  static const std::string& harness() {
    static const std::string h = [] {
      const auto p = path("harness");
      const Outcome r = run("harness --out \"" + p +
                        "\" --phone-seconds 40 --train-seconds 60 --test-seconds 30 --clips-per-label 6");
      EXPECT_EQ(r.code, 0) << r.err;
      return p;
    }();
    return h;
  }

  static const std::string& phone_model() {
    static const std::string m = [] {
      const auto out = path("phone.kws");
      const Outcome r = run("train --stage phone --data \"" + harness() + "/phone\" --out \"" + out +
                        "\" --keywords 2 --epochs 1 --max-steps 40 --log \"" + path("phone_log.jsonl") + "\"");
      EXPECT_EQ(r.code, 0) << r.err;
      return out;
    }();
    return m;
  }
};

TEST_F(Cli, CostReportsTableValues) {
  const Outcome r = run("cost");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("25.1M"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("12.6M"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("6.28M"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("251K"), std::string::npos) << r.out;

  const Outcome j = run("cost --skip none --json");
  ASSERT_EQ(j.code, 0) << j.err;
  const auto doc = nlohmann::json::parse(j.out);
  EXPECT_EQ(doc.at(0).at("mults_per_second").get<std::int64_t>(), 25113600);
  EXPECT_EQ(doc.at(0).at("params").get<std::int64_t>(), 251136);
}

TEST_F(Cli, DetectOnSilenceEmitsNothing) {
  // Untrained networks hover near 0.5; bias the output towards filler.
  kws::TdnnModel m = kws::build_default(1, 4);
  m.net.word.layers.back().bias[1] = 20.0f;
  kws::save_model(m, path("init.kws"));
  kws::AudioStream silence;
  silence.samples.assign(16000 * 3, 0.0f);
  kws::write_wav(path("silence.wav"), silence);
  const Outcome r = run("detect --model \"" + path("init.kws") + "\" --wav \"" + path("silence.wav") + "\"");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty()) << r.out;
}

TEST_F(Cli, StrideFourCountsAboutAQuarterOfTheMultiplications) {
  ASSERT_EQ(run("init --out \"" + path("init4.kws") + "\" --seed 5").code, 0);
  kws::Rng rng(9);
  kws::AudioStream noise = kws::white_noise(16000 * 12, rng, 0.05);
  kws::write_wav(path("noise.wav"), noise);
  std::int64_t counted[2] = {0, 0};
  const char* modes[2] = {"none", "4"};
  for (int i = 0; i < 2; ++i) {
    const Outcome r = run("detect --json --stats --model \"" + path("init4.kws") + "\" --wav \"" + path("noise.wav") +
                      "\" --skip " + modes[i]);
    ASSERT_EQ(r.code, 0) << r.err;
    counted[i] = nlohmann::json::parse(r.out).at("stats").at("counted_mults").get<std::int64_t>();
  }
  const double ratio = static_cast<double>(counted[1]) / static_cast<double>(counted[0]);
  EXPECT_NEAR(ratio, 0.25, 0.02);
}

TEST_F(Cli, ExitCodes) {
  kws::AudioStream a;
  a.samples.assign(8000, 0.0f);
  kws::write_wav(path("short.wav"), a);

  const Outcome missing = run("detect --model \"" + path("absent.kws") + "\" --wav \"" + path("short.wav") + "\"");
  EXPECT_EQ(missing.code, 3);
  EXPECT_NE(missing.err.find("absent.kws"), std::string::npos) << missing.err;

  std::ofstream(path("garbage.kws")) << "not a model";
  EXPECT_EQ(run("detect --model \"" + path("garbage.kws") + "\" --wav \"" + path("short.wav") + "\"").code, 4);
  EXPECT_EQ(run("cost --model \"" + path("garbage.kws") + "\"").code, 4);

  ASSERT_EQ(run("init --out \"" + path("e.kws") + "\"").code, 0);
  EXPECT_EQ(run("detect --model \"" + path("e.kws") + "\" --wav \"" + path("nope.wav") + "\"").code, 3);
  EXPECT_EQ(run("detect --model \"" + path("e.kws") + "\" --wav \"" + path("short.wav") + "\" --threshold 2").code, 2);
  EXPECT_EQ(run("detect --model \"" + path("e.kws") + "\" --wav \"" + path("short.wav") + "\" --skip 3").code, 2);
  EXPECT_EQ(run("detect --model \"" + path("e.kws") + "\"").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);

  const Outcome word = run("train --stage word --data \"" + dir().string() + "\" --out \"" + path("w.kws") + "\"");
  EXPECT_EQ(word.code, 2);
  EXPECT_NE(word.err.find("--init-from"), std::string::npos) << word.err;
  EXPECT_EQ(word.err.find("terminate"), std::string::npos);
}

TEST_F(Cli, PerfectTraceHasZeroFrr) {
  kws::PosteriorTrace trace;
  trace.num_classes = 2;
  for (std::int64_t t = 0; t < 2000; ++t) {
    const bool hit = (t >= 500 && t < 520) || (t >= 1500 && t < 1520);
    kws::PosteriorSample s;
    s.frame_index = t;
    s.raw = {hit ? 1.0f : 0.0f, hit ? 0.0f : 1.0f};
    s.smoothed = {hit ? 1.0 : 0.0, hit ? 0.0 : 1.0};
    trace.samples.push_back(s);
  }
  std::ostringstream csv;
  kws::write_trace_csv(csv, trace, {"kw", "filler"});
  kws::write_text_file(path("perfect.csv"), csv.str());
  kws::GroundTruth truth;
  truth.total_audio_seconds = 20.0;
  truth.spans = {{0, 440, 505}, {0, 1440, 1505}};
  kws::save_truth(path("perfect.json"), truth);

  const Outcome r = run("eval --json --thresholds 0.99,0.5,0.1 --trace \"" + path("perfect.csv") + "\" --truth \"" +
                    path("perfect.json") + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc.at("frr_at_0.5_fa").get<double>(), 0.0);
  for (const auto& p : doc.at("roc")) {
    EXPECT_EQ(p.at("frr_percent").get<double>(), 0.0);
    EXPECT_EQ(p.at("fa_per_hour").get<double>(), 0.0);
  }
}

TEST_F(Cli, SweepIsMonotone) {
  const Outcome r = run("eval --roc-out \"" + path("roc.csv") + "\" --trace \"" + path("perfect.csv") + "\" --truth \"" +
                    path("perfect.json") + "\"");
  if (r.code != 0) GTEST_SKIP() << "depends on PerfectTraceHasZeroFrr";
  std::istringstream in(slurp(path("roc.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "threshold,frr,fa_per_hour");
  double prev_frr = 101.0, prev_fa = -1.0;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto cells = kws::split(line, ',');
    ASSERT_EQ(cells.size(), 3u);
    const double frr = std::stod(cells[1]), fa = std::stod(cells[2]);
    EXPECT_LE(frr, prev_frr);
    EXPECT_GE(fa, prev_fa);
    prev_frr = frr;
    prev_fa = fa;
    ++rows;
  }
  EXPECT_GT(rows, 100);
}

TEST_F(Cli, SynthIsBitIdenticalForAFixedSeed) {
  const std::string clips = harness() + "/clips";
  for (const char* name : {"a", "b"}) {
    const Outcome r = run("synth --clips \"" + clips + "\" --keywords keyword0,keyword1 --seed 11 --snr-db 15 --out \"" +
                      path(std::string(name) + ".wav") + "\"");
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(path("a.wav")), slurp(path("b.wav")));
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const auto truth = kws::load_truth(path("a.json"));
  EXPECT_EQ(truth.spans.size(), 12u);
  EXPECT_EQ(truth.keyword_names.back(), "filler");

  EXPECT_EQ(run("synth --clips \"" + clips + "\" --out \"" + path("c.wav") + "\"").code, 2);
  EXPECT_EQ(run("synth --clips \"" + path("nowhere") + "\" --keywords x --out \"" + path("c.wav") + "\"").code, 3);
}

TEST_F(Cli, TrainingIsSeedDeterministic) {
  const std::string first = slurp(phone_model());
  const auto again = path("phone_again.kws");
  ASSERT_EQ(run("train --stage phone --data \"" + harness() + "/phone\" --out \"" + again +
                "\" --keywords 2 --epochs 1 --max-steps 40 --log \"" + path("phone_log2.jsonl") + "\"")
                .code,
            0);
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, slurp(again));
  const auto log = slurp(path("phone_log.jsonl"));
  const auto entry = nlohmann::json::parse(log.substr(0, log.find('\n')));
  EXPECT_EQ(entry.at("stage"), "phone");
  EXPECT_EQ(entry.at("steps"), 40);
}

TEST_F(Cli, WordStageFromStreamsAndFromLabelFolders) {
  const std::string words[2] = {harness() + "/train", harness() + "/clips"};
  for (int i = 0; i < 2; ++i) {
    const auto out = path("word" + std::to_string(i) + ".kws");
    const Outcome r = run("train --stage word --data \"" + words[i] + "\" --init-from \"" + phone_model() + "\" --out \"" +
                      out + "\" --epochs 1 --max-steps 20 --keywords keyword0,keyword1 --log \"" +
                      path("word_log.jsonl") + "\"");
    ASSERT_EQ(r.code, 0) << r.err;
    const Outcome s = run("summary --json \"" + out + "\"");
    ASSERT_EQ(s.code, 0) << s.err;
    const auto doc = nlohmann::json::parse(s.out);
    EXPECT_EQ(doc.at("classes").size(), 3u);
  }
  const Outcome tuned = run("train --stage word --fine-tune --skip 4 --data \"" + words[0] + "\" --init-from \"" +
                        path("word0.kws") + "\" --out \"" + path("word4.kws") + "\" --max-steps 5 --log \"" +
                        path("word_log.jsonl") + "\"");
  EXPECT_EQ(tuned.code, 0) << tuned.err;
  const Outcome e = run("eval --json --model \"" + path("word4.kws") + "\" --skip 4 --data \"" + harness() + "/test\"");
  ASSERT_EQ(e.code, 0) << e.err;
  const double frr = nlohmann::json::parse(e.out).at("frr_at_0.5_fa").get<double>();
  EXPECT_GE(frr, 0.0);
  EXPECT_LE(frr, 100.0);
}

TEST_F(Cli, LabelCountMismatchIsRejected) {
  const fs::path bad = dir() / "badphones";
  fs::create_directories(bad);
  kws::AudioStream a;
  a.samples.assign(16000, 0.01f);
  kws::write_wav((bad / "x.wav").string(), a);
  kws::write_text_file((bad / "x.phones").string(), "1 2 3\n");
  const Outcome r = run("train --stage phone --data \"" + bad.string() + "\" --out \"" + path("bad.kws") + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("3 phone labels for 98 feature frames"), std::string::npos) << r.err;
}

}  // namespace
