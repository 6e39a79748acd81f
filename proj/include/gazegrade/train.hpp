#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gazegrade/error.hpp"
#include "gazegrade/features.hpp"
#include "gazegrade/metrics.hpp"
#include "gazegrade/nn.hpp"
#include "gazegrade/rng.hpp"

namespace gazegrade::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 30;
  int patience = 5;            // epochs without val AUROC improvement
  bool early_stopping = true;
  bool cosine_decay = true;
  bool balanced_sampling = true;  // equal class probability per batch
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0)) fail(ErrorCategory::config, "learning rate must be positive");
    if (batch_size < 1) fail(ErrorCategory::config, "batch size must be positive");
    if (epochs < 1) fail(ErrorCategory::config, "epochs must be positive");
    if (!(momentum >= 0 && momentum < 1))
      fail(ErrorCategory::config, "momentum must lie in [0, 1)");
    if (patience < 1) fail(ErrorCategory::config, "patience must be positive");
  }
};

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0;
  double train_loss = 0;
  double val_auroc = 0;
};

struct TrainingHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // 0-based; -1 if training never evaluated
  double best_val_auroc = 0;
  bool early_stopped = false;
};

namespace detail {

// Cycles a class's shuffled index list, reshuffling on wrap, so every epoch
// sees both classes at equal rate regardless of their raw counts.
class ClassSampler {
 public:
  ClassSampler(std::vector<std::size_t> idx, Rng* rng) : idx_(std::move(idx)), rng_(rng) {
    rng_->shuffle(idx_);
  }
  std::size_t next() {
    if (pos_ == idx_.size()) {
      rng_->shuffle(idx_);
      pos_ = 0;
    }
    return idx_[pos_++];
  }

 private:
  std::vector<std::size_t> idx_;
  std::size_t pos_ = 0;
  Rng* rng_;
};

}  // namespace detail

// Mini-batch SGD with momentum. Returns the parameters of the epoch with the
// best validation AUROC, not the final ones.
template <typename T>
std::pair<Model<T>, TrainingHistory> train(Model<T> model,
                                           std::span<const WindowFeatures> train_set,
                                           std::span<const WindowFeatures> val_set,
                                           const TrainConfig& tc) {
  tc.validate();
  if (train_set.empty()) fail(ErrorCategory::config, "train: empty training set");
  if (val_set.empty()) fail(ErrorCategory::config, "train: empty validation set");

  std::vector<std::size_t> expert_idx, nonexpert_idx;
  for (std::size_t i = 0; i < train_set.size(); ++i)
    (train_set[i].label == Label::Expert ? expert_idx : nonexpert_idx).push_back(i);
  if (tc.balanced_sampling && (expert_idx.empty() || nonexpert_idx.empty()))
    fail(ErrorCategory::config, "train: balanced sampling needs both classes present");

  std::vector<Label> val_labels;
  val_labels.reserve(val_set.size());
  for (const auto& f : val_set) val_labels.push_back(f.label);

  Rng rng(derive_seed(tc.seed, 0x2));
  detail::ClassSampler expert_s(expert_idx, &rng), nonexpert_s(nonexpert_idx, &rng);
  std::vector<std::size_t> plain_order(train_set.size());
  for (std::size_t i = 0; i < plain_order.size(); ++i) plain_order[i] = i;

  // Momentum velocities, one per parameter tensor in enumeration order.
  std::vector<std::vector<T>> velocity;
  model.for_each_param([&](const std::string&, Param<T>& p) {
    velocity.emplace_back(p.v.size(), T(0));
  });

  Workspace<T> ws;
  TrainingHistory hist;
  Model<T> best = model;
  int stall = 0;
  const int n_batches =
      static_cast<int>((train_set.size() + tc.batch_size - 1) / static_cast<std::size_t>(tc.batch_size));

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    double lr = tc.learning_rate;
    if (tc.cosine_decay)
      lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / tc.epochs));

    if (!tc.balanced_sampling) rng.shuffle(plain_order);

    double loss_sum = 0;
    std::vector<std::size_t> batch_idx;
    for (int bi = 0; bi < n_batches; ++bi) {
      batch_idx.clear();
      if (tc.balanced_sampling) {
        for (int k = 0; k < tc.batch_size; ++k)
          batch_idx.push_back(k % 2 == 0 ? expert_s.next() : nonexpert_s.next());
      } else {
        std::size_t lo = static_cast<std::size_t>(bi) * tc.batch_size;
        std::size_t hi = std::min(plain_order.size(), lo + tc.batch_size);
        batch_idx.assign(plain_order.begin() + static_cast<std::ptrdiff_t>(lo),
                         plain_order.begin() + static_cast<std::ptrdiff_t>(hi));
      }
      Batch<T> batch = make_batch<T>(train_set, batch_idx);
      model.zero_grad();
      loss_sum += loss_and_gradients(model, batch, ws);

      std::size_t vi = 0;
      model.for_each_param([&](const std::string&, Param<T>& p) {
        std::vector<T>& vel = velocity[vi++];
        const T mu = static_cast<T>(tc.momentum);
        const T step = static_cast<T>(lr);
        for (std::size_t k = 0; k < p.v.size(); ++k) {
          vel[k] = mu * vel[k] - step * p.g[k];
          p.v[k] += vel[k];
        }
      });
    }

    std::vector<double> val_scores = predict_scores(model, val_set, ws);
    double val_auc = auroc(val_scores, val_labels);

    EpochStats es;
    es.epoch = epoch;
    es.learning_rate = lr;
    es.train_loss = loss_sum / n_batches;
    es.val_auroc = val_auc;
    hist.epochs.push_back(es);

    if (hist.best_epoch < 0 || val_auc > hist.best_val_auroc) {
      hist.best_epoch = epoch;
      hist.best_val_auroc = val_auc;
      best = model;
      stall = 0;
    } else {
      ++stall;
    }
    if (tc.early_stopping && (stall >= tc.patience || hist.best_val_auroc >= 1.0)) {
      hist.early_stopped = true;
      break;
    }
  }

  return {std::move(best), std::move(hist)};
}

}  // namespace gazegrade::nn
