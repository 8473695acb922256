#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pcnn/dataset.hpp"
#include "pcnn/error.hpp"
#include "pcnn/nn.hpp"
#include "pcnn/rng.hpp"

namespace pcnn {

// ---------------------------------------------------------------------------
// Configuration and metrics
// ---------------------------------------------------------------------------

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 0.01;
  int max_epochs = 30;
  double val_ratio = 0.2;
  uint64_t seed = 1;
  bool early_stopping = true;
  int patience = 5;

  void validate() const {
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
    if (max_epochs < 1) throw ArgumentError("max_epochs must be >= 1");
    if (!(val_ratio > 0.0 && val_ratio < 1.0))
      throw ArgumentError("val_ratio must be in (0,1)");
    if (patience < 1) throw ArgumentError("patience must be >= 1");
  }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

/// CSV epoch log: header + one row per epoch, floats at 6 decimals.
inline void write_history_csv(const std::vector<EpochRecord>& history,
                              std::ostream& out) {
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char buf[160];
  for (const EpochRecord& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f\n", r.epoch,
                  r.train_loss, r.train_acc, r.val_loss, r.val_acc);
    out << buf;
  }
}

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(int classes)
      : classes_(classes),
        counts_(static_cast<size_t>(classes) * static_cast<size_t>(classes), 0) {
    if (classes < 1) throw ArgumentError("confusion matrix needs >= 1 class");
  }

  void add(int truth, int predicted, int64_t count = 1) {
    if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_)
      throw ArgumentError("confusion matrix index out of range");
    counts_[static_cast<size_t>(truth) * classes_ + predicted] += count;
  }

  int64_t at(int truth, int predicted) const {
    return counts_[static_cast<size_t>(truth) * classes_ + predicted];
  }

  int num_classes() const { return classes_; }

  int64_t total() const {
    int64_t t = 0;
    for (int64_t c : counts_) t += c;
    return t;
  }

  int64_t row_sum(int truth) const {
    int64_t t = 0;
    for (int p = 0; p < classes_; ++p) t += at(truth, p);
    return t;
  }

  double accuracy() const {
    int64_t diag = 0;
    for (int i = 0; i < classes_; ++i) diag += at(i, i);
    return static_cast<double>(diag) / static_cast<double>(total());
  }

private:
  int classes_;
  std::vector<int64_t> counts_;
};

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// p <- p - lr * g for every parameter tensor of the network.
inline void sgd_step(Network& net, const NetworkGrads& grads, double learning_rate) {
  if (grads.layers.size() != net.layers.size())
    throw ShapeError("sgd_step: gradients do not match network layout");
  for (size_t i = 0; i < net.layers.size(); ++i) {
    Tensor* weights = nullptr;
    Tensor* bias = nullptr;
    if (auto* conv = std::get_if<ConvLayer>(&net.layers[i])) {
      weights = &conv->kernels;
      bias = &conv->bias;
    } else if (auto* dense = std::get_if<DenseLayer>(&net.layers[i])) {
      weights = &dense->weights;
      bias = &dense->bias;
    } else {
      continue;
    }
    const LayerGrads& lg = grads.layers[i];
    if (!weights->same_shape(lg.weights) || !bias->same_shape(lg.bias))
      throw ShapeError("sgd_step: gradient shape mismatch at layer " +
                       std::to_string(i));
    for (int64_t k = 0; k < weights->size(); ++k)
      (*weights)[k] -= learning_rate * lg.weights[k];
    for (int64_t k = 0; k < bias->size(); ++k)
      (*bias)[k] -= learning_rate * lg.bias[k];
  }
}

// ---------------------------------------------------------------------------
// Epoch and evaluation passes
// ---------------------------------------------------------------------------

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

namespace detail {

inline int argmax_index(const Tensor& v) {
  int best = 0;
  for (int64_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace detail

/// One pass over the samples in the given order, updating parameters after
/// each batch with batch-mean gradients. The last batch may be smaller.
inline EpochStats train_epoch(Network& net, const std::vector<LabeledSample>& samples,
                              const std::vector<int64_t>& order,
                              const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw ArgumentError("train_epoch: no samples");
  if (order.size() != samples.size())
    throw ArgumentError("train_epoch: order must index every sample once");

  const int64_t n = static_cast<int64_t>(samples.size());
  double loss_sum = 0.0;
  int64_t correct = 0;
  std::vector<LayerCache> caches;

  for (int64_t start = 0; start < n; start += config.batch_size) {
    const int64_t end = std::min(n, start + config.batch_size);
    const auto members = static_cast<double>(end - start);
    NetworkGrads batch_grads = zero_grads(net);
    for (int64_t b = start; b < end; ++b) {
      const LabeledSample& sample = samples[static_cast<size_t>(order[static_cast<size_t>(b)])];
      const Tensor logits = network_forward(net, sample.input, caches);
      const SoftmaxResult head = softmax_cross_entropy(logits, sample.label);
      loss_sum += head.loss;
      if (detail::argmax_index(head.probs) == sample.label) ++correct;
      accumulate_grads(batch_grads, network_backward(net, caches, head.grad_logits));
    }
    scale_grads(batch_grads, 1.0 / members);
    sgd_step(net, batch_grads, config.learning_rate);
  }

  EpochStats stats;
  stats.loss = loss_sum / static_cast<double>(n);
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return stats;
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;

  explicit EvalResult(int classes) : confusion(classes) {}
};

/// Read-only pass: mean cross-entropy, argmax accuracy, confusion counts.
inline EvalResult evaluate(const Network& net, const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw ArgumentError("evaluate: no samples");
  const Shape logits_shape = network_output_shapes(net).back();
  EvalResult result(static_cast<int>(logits_shape.dim(0)));
  double loss_sum = 0.0;
  for (const LabeledSample& sample : samples) {
    const Tensor logits = network_forward(net, sample.input);
    const SoftmaxResult head = softmax_cross_entropy(logits, sample.label);
    loss_sum += head.loss;
    result.confusion.add(sample.label, detail::argmax_index(head.probs));
  }
  result.loss = loss_sum / static_cast<double>(samples.size());
  result.accuracy = result.confusion.accuracy();
  return result;
}

struct Prediction {
  int class_index = 0;
  Tensor probs;
};

/// Argmax of softmax(logits); ties resolve to the lowest class index.
inline Prediction predict(const Network& net, const Tensor& input) {
  const Tensor logits = network_forward(net, input);
  SoftmaxResult head = softmax_cross_entropy(logits, 0);  // label irrelevant here
  Prediction p;
  p.class_index = detail::argmax_index(head.probs);
  p.probs = std::move(head.probs);
  return p;
}

// ---------------------------------------------------------------------------
// Training loop with validation-based early stopping
// ---------------------------------------------------------------------------

/// Stops once validation accuracy has not exceeded the best seen for
/// `patience` consecutive epochs. Epochs are 1-based.
struct EarlyStopper {
  int patience = 5;
  double best_acc = -1.0;
  int best_epoch = 0;

  /// Returns true if this epoch sets a new best.
  bool observe(int epoch, double val_acc) {
    if (val_acc > best_acc) {
      best_acc = val_acc;
      best_epoch = epoch;
      return true;
    }
    return false;
  }

  bool should_stop(int epoch) const { return epoch - best_epoch >= patience; }
};

/// Deterministic permutation of 0..n-1 for one epoch, derived from
/// (seed, epoch).
inline std::vector<int64_t> epoch_order(int64_t n, uint64_t seed, int epoch) {
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<uint64_t>(epoch));
  for (int64_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(i) + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  return order;
}

struct FitResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool stopped_early = false;
};

// Epoch driver behind fit(): run_epoch and eval_val supply metrics,
// snapshot/restore manage best-weight copies. Exposed so the stopping rule
// can also be driven with scripted metrics.
template <typename RunEpochFn, typename EvalValFn, typename SnapshotFn,
          typename RestoreFn>
FitResult training_loop(const TrainConfig& config, RunEpochFn run_epoch,
                        EvalValFn eval_val, SnapshotFn snapshot, RestoreFn restore,
                        const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  FitResult result;
  EarlyStopper stopper{config.patience};
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const EpochStats train_stats = run_epoch(epoch);
    const EpochStats val_stats = eval_val();
    result.history.push_back({epoch, train_stats.loss, train_stats.accuracy,
                              val_stats.loss, val_stats.accuracy});
    if (on_epoch) on_epoch(result.history.back());
    if (stopper.observe(epoch, val_stats.accuracy)) snapshot();
    if (config.early_stopping && stopper.should_stop(epoch)) {
      result.stopped_early = true;
      break;
    }
  }
  result.best_epoch = stopper.best_epoch;
  if (config.early_stopping) restore();
  return result;
}

/// Trains up to max_epochs with per-epoch reshuffling. With early stopping
/// enabled the network is left at the weights of the best validation epoch;
/// otherwise at the final epoch's weights.
inline FitResult fit(Network& net, const std::vector<LabeledSample>& train_set,
                     const std::vector<LabeledSample>& val_set,
                     const TrainConfig& config,
                     const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  config.validate();
  if (train_set.empty()) throw ArgumentError("fit: empty training set");
  if (val_set.empty()) throw ArgumentError("fit: empty validation set");

  Network best = net;
  const auto n = static_cast<int64_t>(train_set.size());
  return training_loop(
      config,
      [&](int epoch) {
        return train_epoch(net, train_set, epoch_order(n, config.seed, epoch), config);
      },
      [&] {
        const EvalResult r = evaluate(net, val_set);
        return EpochStats{r.loss, r.accuracy};
      },
      [&] { best = net; },
      [&] { net = best; }, on_epoch);
}

}  // namespace pcnn
