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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "kws/error.hpp"
#include "kws/features.hpp"
#include "kws/ground_truth.hpp"
#include "kws/inference.hpp"
#include "kws/log.hpp"
#include "kws/model.hpp"
#include "kws/random.hpp"
#include "json.hpp"

namespace kws {

inline constexpr int kUnlabeled = -1;

// One contiguous stream of normalized features with optional targets.
// phone_labels[t] is the phone class of frame t. word_labels[t] is the target
// of the keyword output emitted at frame t. Either may be empty; kUnlabeled
// marks frames to skip.
struct LabeledFrameSet {
  std::vector<FeatureFrame> features;
  std::vector<int> phone_labels;
  std::vector<int> word_labels;

  std::int64_t size() const { return static_cast<std::int64_t>(features.size()); }

  void validate(int feature_dim, int num_phone_classes, int num_word_classes) const {
    const auto n = features.size();
    if (!phone_labels.empty() && phone_labels.size() != n) {
      throw ShapeError("phone labels: " + std::to_string(phone_labels.size()) + " for " + std::to_string(n) +
                       " frames");
    }
    if (!word_labels.empty() && word_labels.size() != n) {
      throw ShapeError("word labels: " + std::to_string(word_labels.size()) + " for " + std::to_string(n) +
                       " frames");
    }
    for (const auto& f : features) {
      if (f.values.size() != static_cast<std::size_t>(feature_dim)) throw ShapeError("feature dimension mismatch");
    }
    auto check = [](const std::vector<int>& labels, int classes, const char* what) {
      for (int l : labels) {
        if (l != kUnlabeled && (l < 0 || l >= classes)) {
          throw InputError(std::string(what) + " label " + std::to_string(l) + " outside [0, " +
                           std::to_string(classes) + ")");
        }
      }
    };
    check(phone_labels, num_phone_classes, "phone");
    check(word_labels, num_word_classes, "word");
  }
};

using LabeledCorpus = std::vector<LabeledFrameSet>;

enum class Stage { kPhone, kWord };

inline constexpr double kPhoneLearningRate = 0.01;
// Word-stage inputs are unnormalized phone logits whose scale grows with
// pretraining, so the stable step is smaller.
inline constexpr double kWordLearningRate = 0.003;

struct TrainConfig {
  double learning_rate = kPhoneLearningRate;
  int batch_size = 64;
  int epochs = 1;
  std::uint64_t seed = 1;
  bool freeze_phone_nn = false;
  SkipMode skip_mode = SkipMode::kNone;  // evaluation geometry for the word stage
  int outputs_per_segment = 16;          // consecutive word outputs sharing phone computations
  int output_subsample = 1;              // keep every n-th candidate word output
  std::int64_t max_steps = 0;            // 0 means no cap

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (outputs_per_segment < 1) throw ConfigError("outputs per segment must be positive");
    if (output_subsample < 1) throw ConfigError("output subsample must be positive");
    if (max_steps < 0) throw ConfigError("max steps must be non-negative");
  }

  static TrainConfig for_stage(Stage stage) {
    TrainConfig c;
    c.learning_rate = stage == Stage::kPhone ? kPhoneLearningRate : kWordLearningRate;
    return c;
  }
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  std::int64_t steps = 0;
};

inline nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}, {"steps", e.steps}};
}

using EpochCallback = std::function<void(const EpochLog&)>;

// Targets inside one stream. For the phone stage positions are splice
// positions (centre frame = position + left_context). For the word stage
// they are keyword output positions on the plan's grid, ideally contiguous
// so that phone vectors are shared.
struct SegmentTargets {
  const LabeledFrameSet* set = nullptr;
  std::vector<std::int64_t> positions;
  std::vector<int> labels;
};

struct TrainingBatch {
  Stage stage = Stage::kWord;
  SkipMode mode = SkipMode::kNone;
  std::vector<SegmentTargets> segments;

  std::size_t num_targets() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.positions.size();
    return n;
  }
};

template <typename S>
using RowMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
TdnnNetwork<S> zeros_like(const TdnnNetwork<S>& net) {
  TdnnNetwork<S> g = net;
  g.for_each_layer([](DenseLayer<S>& l) {
    std::fill(l.weights.begin(), l.weights.end(), S(0));
    std::fill(l.bias.begin(), l.bias.end(), S(0));
  });
  return g;
}

namespace detail {

template <typename S>
auto weight_map(const DenseLayer<S>& l) {
  return Eigen::Map<const RowMatrix<S>>(l.weights.data(), l.in_dim, l.out_dim);
}

template <typename S>
auto bias_map(const DenseLayer<S>& l) {
  return Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(l.bias.data(), l.out_dim);
}

// acts[0] is the input; acts[l + 1] is the output of layer l.
template <typename S>
void mlp_forward(const std::vector<DenseLayer<S>>& layers, RowMatrix<S> input, std::vector<RowMatrix<S>>& acts) {
  acts.clear();
  acts.push_back(std::move(input));
  for (const auto& l : layers) {
    RowMatrix<S> z = acts.back() * weight_map(l);
    z.rowwise() += bias_map(l);
    if (l.activation == Activation::kRelu) z = z.cwiseMax(S(0));
    acts.push_back(std::move(z));
  }
}

// Accumulates parameter gradients into grads and returns the gradient with
// respect to acts[0] (empty when not requested).
template <typename S>
RowMatrix<S> mlp_backward(const std::vector<DenseLayer<S>>& layers, const std::vector<RowMatrix<S>>& acts,
                          RowMatrix<S> delta, std::vector<DenseLayer<S>>* grads, bool need_input_grad) {
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& l = layers[li];
    if (l.activation == Activation::kRelu) {
      // ReLU subgradient is 0 at the kink, matching max(z, 0) == 0.
      delta = delta.cwiseProduct((acts[li + 1].array() > S(0)).template cast<S>().matrix());
    }
    if (grads != nullptr) {
      // Reduce into Eigen-owned (aligned) temporaries: vectorized reductions
      // over unaligned maps change summation order with the address.
      auto& g = (*grads)[li];
      const RowMatrix<S> dw = acts[li].transpose() * delta;
      const Eigen::Matrix<S, 1, Eigen::Dynamic> db = delta.colwise().sum();
      for (Eigen::Index k = 0; k < dw.size(); ++k) g.weights[static_cast<std::size_t>(k)] += dw.data()[k];
      for (Eigen::Index k = 0; k < db.size(); ++k) g.bias[static_cast<std::size_t>(k)] += db[k];
    }
    if (li > 0 || need_input_grad) {
      RowMatrix<S> prev = delta * weight_map(l).transpose();
      delta = std::move(prev);
    } else {
      delta.resize(0, 0);
    }
  }
  return delta;
}

template <typename S>
void splice_row(const LabeledFrameSet& set, std::int64_t position, int splice, int dim, S* row) {
  if (position < 0 || position + splice > set.size()) throw ShapeError("splice position outside stream");
  for (int f = 0; f < splice; ++f) {
    const auto& v = set.features[static_cast<std::size_t>(position + f)].values;
    for (int d = 0; d < dim; ++d) row[f * dim + d] = static_cast<S>(v[d]);
  }
}

// Mean cross-entropy over rows; writes d(loss)/d(logits) into delta.
template <typename S>
S softmax_cross_entropy(const RowMatrix<S>& logits, const std::vector<int>& labels, RowMatrix<S>& delta,
                        std::int64_t& correct) {
  const auto n = logits.rows();
  delta.resize(n, logits.cols());
  double loss = 0.0;
  const S inv_n = S(1) / static_cast<S>(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index arg = 0;
    const S m = logits.row(r).maxCoeff(&arg);
    if (!std::isfinite(static_cast<double>(m))) throw NumericError("non-finite logits in forward pass");
    if (arg == labels[static_cast<std::size_t>(r)]) ++correct;
    double z = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) z += std::exp(static_cast<double>(logits(r, c) - m));
    const double log_z = std::log(z) + static_cast<double>(m);
    const int y = labels[static_cast<std::size_t>(r)];
    loss += log_z - static_cast<double>(logits(r, y));
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      delta(r, c) = static_cast<S>(std::exp(static_cast<double>(logits(r, c)) - log_z)) * inv_n;
    }
    delta(r, y) -= inv_n;
  }
  return static_cast<S>(loss / static_cast<double>(n));
}

}  // namespace detail

template <typename S>
struct LossAndGradients {
  S loss = S(0);
  TdnnNetwork<S> gradients;  // empty layers when gradients were not requested
  std::int64_t correct = 0;
  std::int64_t count = 0;
};

enum class GradientMode { kNone, kWordOnly, kAll };

// Forward pass over a batch, optionally followed by reverse mode through
// softmax, word layers, max pooling (routed to the argmax, earliest on ties),
// phone layers and the splice.
template <typename S>
LossAndGradients<S> forward_backward(const TdnnNetwork<S>& net, const TrainingBatch& batch, GradientMode mode) {
  const std::size_t n_targets = batch.num_targets();
  if (n_targets == 0) throw InputError("empty training batch");
  const int dim = net.feature_dim;
  const int splice = net.phone.splice_width();
  const int in_width = dim * splice;

  LossAndGradients<S> result;
  result.count = static_cast<std::int64_t>(n_targets);
  if (mode != GradientMode::kNone) result.gradients = zeros_like(net);
  std::vector<int> labels;
  labels.reserve(n_targets);
  for (const auto& seg : batch.segments) labels.insert(labels.end(), seg.labels.begin(), seg.labels.end());

  std::vector<RowMatrix<S>> phone_acts;
  RowMatrix<S> delta;

  if (batch.stage == Stage::kPhone) {
    RowMatrix<S> x(static_cast<Eigen::Index>(n_targets), in_width);
    Eigen::Index r = 0;
    for (const auto& seg : batch.segments) {
      for (auto p : seg.positions) detail::splice_row(*seg.set, p, splice, dim, x.row(r++).data());
    }
    detail::mlp_forward(net.phone.layers, std::move(x), phone_acts);
    result.loss = detail::softmax_cross_entropy(phone_acts.back(), labels, delta, result.correct);
    if (mode == GradientMode::kAll) {
      detail::mlp_backward(net.phone.layers, phone_acts, std::move(delta), &result.gradients.phone.layers, false);
    }
    return result;
  }

  const EvalPlan plan = make_plan(net, batch.mode);
  const std::int64_t window = plan.phone_window();
  // Phone rows per segment cover [lo, hi] on the stride grid.
  std::vector<std::int64_t> seg_lo(batch.segments.size()), seg_base(batch.segments.size());
  Eigen::Index rows = 0;
  for (std::size_t s = 0; s < batch.segments.size(); ++s) {
    const auto& seg = batch.segments[s];
    if (seg.positions.empty()) continue;
    const auto [mn, mx] = std::minmax_element(seg.positions.begin(), seg.positions.end());
    if (*mn % plan.stride != 0 || *mn < plan.first_output_position()) {
      throw ShapeError("word target at position " + std::to_string(*mn) + " is not an output position");
    }
    seg_lo[s] = *mn - window + 1;
    seg_base[s] = rows;
    rows += static_cast<Eigen::Index>((*mx - seg_lo[s]) / plan.stride + 1);
  }
  RowMatrix<S> x(rows, in_width);
  for (std::size_t s = 0; s < batch.segments.size(); ++s) {
    const auto& seg = batch.segments[s];
    if (seg.positions.empty()) continue;
    const auto mx = *std::max_element(seg.positions.begin(), seg.positions.end());
    Eigen::Index r = static_cast<Eigen::Index>(seg_base[s]);
    for (std::int64_t p = seg_lo[s]; p <= mx; p += plan.stride) detail::splice_row(*seg.set, p, splice, dim, x.row(r++).data());
  }
  detail::mlp_forward(net.phone.layers, std::move(x), phone_acts);
  const RowMatrix<S>& phone_out = phone_acts.back();
  const int pd = net.phone_dim();
  const int width = pd * plan.pooled_context;

  RowMatrix<S> pooled(static_cast<Eigen::Index>(n_targets), width);
  std::vector<Eigen::Index> argmax(n_targets * static_cast<std::size_t>(width));
  Eigen::Index o = 0;
  for (std::size_t s = 0; s < batch.segments.size(); ++s) {
    const auto& seg = batch.segments[s];
    for (auto p : seg.positions) {
      for (int j = 0; j < plan.pooled_context; ++j) {
        const std::int64_t q = p - static_cast<std::int64_t>(plan.pooled_context - 1 - j) * plan.pool_stride();
        const std::int64_t first = q - static_cast<std::int64_t>(plan.pool_members - 1) * plan.stride;
        const Eigen::Index row0 = seg_base[s] + static_cast<Eigen::Index>((first - seg_lo[s]) / plan.stride);
        for (int d = 0; d < pd; ++d) {
          Eigen::Index best = row0;
          for (int m = 1; m < plan.pool_members; ++m) {
            if (phone_out(row0 + m, d) > phone_out(best, d)) best = row0 + m;
          }
          pooled(o, j * pd + d) = phone_out(best, d);
          argmax[static_cast<std::size_t>(o) * width + j * pd + d] = best;
        }
      }
      ++o;
    }
  }
  std::vector<RowMatrix<S>> word_acts;
  detail::mlp_forward(net.word.layers, std::move(pooled), word_acts);
  result.loss = detail::softmax_cross_entropy(word_acts.back(), labels, delta, result.correct);
  if (mode == GradientMode::kNone) return result;

  const bool phone_grads = mode == GradientMode::kAll;
  RowMatrix<S> d_pooled =
      detail::mlp_backward(net.word.layers, word_acts, std::move(delta), &result.gradients.word.layers, phone_grads);
  if (!phone_grads) return result;
  RowMatrix<S> d_phone = RowMatrix<S>::Zero(phone_out.rows(), pd);
  for (Eigen::Index r = 0; r < d_pooled.rows(); ++r) {
    for (int c = 0; c < width; ++c) {
      d_phone(argmax[static_cast<std::size_t>(r) * width + c], c % pd) += d_pooled(r, c);
    }
  }
  detail::mlp_backward(net.phone.layers, phone_acts, std::move(d_phone), &result.gradients.phone.layers, false);
  return result;
}

// Mean cross-entropy and full gradients.
template <typename S>
LossAndGradients<S> loss_and_gradients(const TdnnNetwork<S>& net, const TrainingBatch& batch) {
  return forward_backward(net, batch, GradientMode::kAll);
}

// theta -= lr * g, layer by layer. Frozen phone layers are left untouched.
template <typename S>
void sgd_step(TdnnNetwork<S>& net, const TdnnNetwork<S>& grads, S learning_rate, bool freeze_phone = false) {
  auto update = [learning_rate](std::vector<DenseLayer<S>>& layers, const std::vector<DenseLayer<S>>& g) {
    if (g.size() != layers.size()) return;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t k = 0; k < layers[i].weights.size(); ++k) layers[i].weights[k] -= learning_rate * g[i].weights[k];
      for (std::size_t k = 0; k < layers[i].bias.size(); ++k) layers[i].bias[k] -= learning_rate * g[i].bias[k];
    }
  };
  if (!freeze_phone) update(net.phone.layers, grads.phone.layers);
  update(net.word.layers, grads.word.layers);
}

// Labeled training targets grouped into segments, one group per list entry.
template <typename S>
std::vector<SegmentTargets> collect_targets(const TdnnNetwork<S>& net, const LabeledCorpus& corpus, Stage stage,
                                            SkipMode mode, int group_size, int subsample = 1) {
  std::vector<SegmentTargets> groups;
  const int splice = net.phone.splice_width();
  if (stage == Stage::kPhone) {
    for (const auto& set : corpus) {
      if (set.phone_labels.empty()) continue;
      SegmentTargets g;
      g.set = &set;
      for (std::int64_t p = 0; p + splice <= set.size(); ++p) {
        const int label = set.phone_labels[static_cast<std::size_t>(p + net.phone.left_context)];
        if (label == kUnlabeled) continue;
        g.positions.push_back(p);
        g.labels.push_back(label);
        if (static_cast<int>(g.positions.size()) == group_size) {
          groups.push_back(std::move(g));
          g = SegmentTargets{&set, {}, {}};
        }
      }
      if (!g.positions.empty()) groups.push_back(std::move(g));
    }
    return groups;
  }
  const EvalPlan plan = make_plan(net, mode);
  for (const auto& set : corpus) {
    if (set.word_labels.empty()) continue;
    const std::int64_t positions = set.size() - splice + 1;
    SegmentTargets g;
    g.set = &set;
    std::int64_t index = 0;
    for (std::int64_t p = plan.first_output_position(); p < positions; p += plan.stride) {
      if (index++ % subsample != 0) continue;
      const int label = set.word_labels[static_cast<std::size_t>(plan.frame_of_position(p))];
      if (label == kUnlabeled) continue;
      g.positions.push_back(p);
      g.labels.push_back(label);
      if (static_cast<int>(g.positions.size()) == group_size) {
        groups.push_back(std::move(g));
        g = SegmentTargets{&set, {}, {}};
      }
    }
    if (!g.positions.empty()) groups.push_back(std::move(g));
  }
  return groups;
}

struct EvaluationResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::int64_t count = 0;
};

// Mean loss and frame/output accuracy over every labeled target.
template <typename S>
EvaluationResult evaluate(const TdnnNetwork<S>& net, const LabeledCorpus& corpus, Stage stage,
                          SkipMode mode = SkipMode::kNone, int group_size = 256) {
  const auto groups = collect_targets(net, corpus, stage, mode, group_size);
  EvaluationResult out;
  double loss_sum = 0.0;
  std::int64_t correct = 0;
  for (const auto& g : groups) {
    TrainingBatch batch{stage, mode, {g}};
    const auto r = forward_backward(net, batch, GradientMode::kNone);
    loss_sum += static_cast<double>(r.loss) * static_cast<double>(r.count);
    correct += r.correct;
    out.count += r.count;
  }
  if (out.count > 0) {
    out.loss = loss_sum / static_cast<double>(out.count);
    out.accuracy = static_cast<double>(correct) / static_cast<double>(out.count);
  }
  return out;
}

// Minibatch SGD over one stage. Groups are shuffled each epoch with the
// configured seed; a minibatch gathers groups until it holds batch_size
// targets. Word-stage groups are runs of consecutive outputs.
template <typename S>
std::vector<EpochLog> run_sgd(TdnnNetwork<S>& net, const LabeledCorpus& corpus, Stage stage,
                              const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  config.validate();
  const int group = stage == Stage::kPhone ? 1 : std::min(config.outputs_per_segment, config.batch_size);
  auto groups = collect_targets(net, corpus, stage, config.skip_mode, group, config.output_subsample);
  if (groups.empty()) {
    throw InputError(stage == Stage::kPhone ? "no phone labels in training data" : "no word labels in training data");
  }
  std::size_t total = 0;
  for (const auto& g : groups) total += g.positions.size();
  if (total == 0) throw InputError("training data holds no labeled targets");

  Rng rng(config.seed);
  const auto lr = static_cast<S>(config.learning_rate);
  const GradientMode mode =
      stage == Stage::kWord && config.freeze_phone_nn ? GradientMode::kWordOnly : GradientMode::kAll;
  std::vector<EpochLog> logs;
  std::int64_t step = 0;
  double last_loss = 0.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(groups);
    EpochLog log;
    log.epoch = epoch;
    double loss_sum = 0.0;
    std::int64_t correct = 0, count = 0;
    std::size_t next = 0;
    while (next < groups.size()) {
      if (config.max_steps > 0 && step >= config.max_steps) break;
      TrainingBatch batch{stage, config.skip_mode, {}};
      std::size_t n = 0;
      while (next < groups.size() && n < static_cast<std::size_t>(config.batch_size)) {
        n += groups[next].positions.size();
        batch.segments.push_back(groups[next++]);
      }
      LossAndGradients<S> r;
      try {
        r = forward_backward(net, batch, mode);
      } catch (const NumericError& e) {
        throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step) + ", learning rate " + std::to_string(config.learning_rate) +
                              ", previous loss " + std::to_string(last_loss));
      }
      if (!std::isfinite(static_cast<double>(r.loss))) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                              ", learning rate " + std::to_string(config.learning_rate) + ", previous loss " +
                              std::to_string(last_loss));
      }
      last_loss = static_cast<double>(r.loss);
      sgd_step(net, r.gradients, lr, stage == Stage::kWord && config.freeze_phone_nn);
      loss_sum += last_loss * static_cast<double>(r.count);
      correct += r.correct;
      count += r.count;
      ++step;
      ++log.steps;
    }
    if (count == 0) break;
    log.loss = loss_sum / static_cast<double>(count);
    log.accuracy = static_cast<double>(correct) / static_cast<double>(count);
    log::info("epoch " + std::to_string(epoch) + " loss " + std::to_string(log.loss) + " accuracy " +
              std::to_string(log.accuracy));
    logs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return logs;
}

// Trains the phone layers on per-frame phone targets. The final phone layer
// doubles as the softmax head: only the softmax is dropped afterwards.
inline TdnnNetwork<float> train_phone_stage(TdnnNetwork<float> net, const LabeledCorpus& corpus,
                                            const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  net.validate();
  for (const auto& set : corpus) set.validate(net.feature_dim, net.phone_dim(), net.num_classes());
  run_sgd(net, corpus, Stage::kPhone, config, on_epoch);
  return net;
}

// Puts freshly initialized word layers on top of a trained phone stage and
// trains the whole network on keyword targets.
inline TdnnNetwork<float> train_word_stage(const PhoneNet<float>& phone, const Architecture& arch,
                                           const LabeledCorpus& corpus, const TrainConfig& config,
                                           const EpochCallback& on_epoch = {}) {
  TdnnNetwork<float> net = build_network<float>(arch, config.seed);
  if (phone.layers.size() != net.phone.layers.size()) throw DimensionError("phone stage does not match architecture");
  for (std::size_t i = 0; i < phone.layers.size(); ++i) {
    const auto& a = phone.layers[i];
    const auto& b = net.phone.layers[i];
    if (a.in_dim != b.in_dim || a.out_dim != b.out_dim) {
      throw DimensionError("phone layer " + a.name + " is " + std::to_string(a.in_dim) + "x" +
                           std::to_string(a.out_dim) + ", architecture expects " + std::to_string(b.in_dim) + "x" +
                           std::to_string(b.out_dim));
    }
  }
  net.phone = phone;
  net.validate();
  for (const auto& set : corpus) set.validate(net.feature_dim, net.phone_dim(), net.num_classes());
  run_sgd(net, corpus, Stage::kWord, config, on_epoch);
  return net;
}

// Continues keyword training of a complete network, e.g. to adapt it to a
// skip mode's evaluation geometry.
inline TdnnNetwork<float> fine_tune_word_stage(TdnnNetwork<float> net, const LabeledCorpus& corpus,
                                               const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  net.validate();
  for (const auto& set : corpus) set.validate(net.feature_dim, net.phone_dim(), net.num_classes());
  run_sgd(net, corpus, Stage::kWord, config, on_epoch);
  return net;
}

// Architecture that reproduces an existing network's layout.
template <typename S>
Architecture architecture_of(const TdnnNetwork<S>& net) {
  Architecture arch;
  arch.feature_dim = net.feature_dim;
  arch.left_context = net.phone.left_context;
  arch.right_context = net.phone.right_context;
  arch.phone_hidden.clear();
  for (std::size_t i = 0; i + 1 < net.phone.layers.size(); ++i) arch.phone_hidden.push_back(net.phone.layers[i].out_dim);
  arch.phone_dim = net.phone_dim();
  arch.pooled_context = net.word.pooled_context;
  arch.pool_size = net.word.pool_size;
  arch.pool_stride = net.word.pool_stride;
  arch.word_hidden.clear();
  for (std::size_t i = 0; i + 1 < net.word.layers.size(); ++i) arch.word_hidden.push_back(net.word.layers[i].out_dim);
  arch.num_classes = net.num_classes();
  return arch;
}

}  // namespace kws
