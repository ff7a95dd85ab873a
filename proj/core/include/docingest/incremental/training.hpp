#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "docingest/incremental/classifier.hpp"

namespace docingest::incremental {

/// A feature vector with a 0-based class label.
struct LabeledSample {
  Vector features;
  int label = 0;
};

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 0.001;
  double momentum = 0.9;
  /// Fraction p of each batch drawn from the feedback set.
  double new_data_rate = 0.25;
  /// Weight alpha of the distillation term.
  double distillation_weight = 1.0;
  /// Weight lambda of the classification term.
  double task_weight = 1.0;
  /// Evaluations without held-out improvement before stopping.
  int patience = 10;
  /// A held-out loss counts as an improvement only when it beats the best
  /// so far by more than this absolute amount.
  double min_improvement = 0.0;
  /// Steps between held-out evaluations.
  int eval_interval = 10;
  int max_steps = 3000;
  /// Share of the labeled set held out for early stopping.
  double holdout_fraction = 0.2;
  /// Upper bound on original samples kept for replay; 0 keeps all.
  std::size_t replay_cap = 0;
  /// Margin softening for a_softmax heads (see asoftmax_loss): at step t the
  /// blend is max(margin_blend_min, margin_blend_start / (1 + margin_blend_decay * t)).
  /// Held-out losses use margin_blend_min. All zero trains the plain head.
  double margin_blend_start = 0.0;
  double margin_blend_decay = 0.1;
  double margin_blend_min = 0.0;
  std::uint64_t seed = 0;

  /// Blend used for the update that follows `step` completed steps.
  double margin_blend_at(int step) const;

  /// Throws std::invalid_argument naming the first violated bound.
  void validate() const;
};

struct CurvePoint {
  int step = 0;
  double train_loss = 0.0;
  double heldout_loss = 0.0;
};

struct TrainingResult {
  GroupedClassifier model;
  std::vector<CurvePoint> curve;
  int steps_run = 0;
  /// Step whose parameters were restored (0 means the initial model).
  int best_step = 0;
  std::vector<std::string> warnings;
};

/// Task loss for one sample under the model's head (softmax cross-entropy,
/// or angular-margin cross-entropy for a_softmax). grad, when given,
/// receives the parameter gradient.
/// margin_blend applies to a_softmax heads only.
double sample_task_loss(const GroupedClassifier& model, const LabeledSample& sample,
                        Vector* grad = nullptr, double margin_blend = 0.0);

/// Mean task loss over a batch (0 for an empty batch).
double task_loss(const GroupedClassifier& model, std::span<const LabeledSample> batch,
                 Vector* grad = nullptr, double margin_blend = 0.0);

/// Combined incremental objective on one batch:
/// multitask_loss({L_task(T_f), 0, 1}, lambda) + alpha * L_dist(T_o).
double incremental_objective(const GroupedClassifier& frozen, const GroupedClassifier& student,
                             std::span<const LabeledSample> feedback_batch,
                             std::span<const LabeledSample> original_batch, double alpha,
                             double lambda, Vector* grad = nullptr,
                             double margin_blend = 0.0);

/// Supervised training of `model` on `data` with momentum SGD and early
/// stopping on a held-out split. Throws if data is empty.
TrainingResult train_classifier(GroupedClassifier model, std::span<const LabeledSample> data,
                                const TrainConfig& cfg);

/// Distillation-regularized update of a copy of `frozen` on feedback data.
/// Each step draws round(B*p) feedback samples and B - round(B*p) original
/// samples. If feedback labels exceed the model's classes, the copy's
/// output layer is expanded first. `frozen` is never modified.
/// Throws if feedback is empty or a sample does not fit the model.
TrainingResult incremental_train(const GroupedClassifier& frozen,
                                 std::span<const LabeledSample> original,
                                 std::span<const LabeledSample> feedback, const TrainConfig& cfg);

/// Plain fine-tuning on feedback: incremental_train with alpha = 0, p = 1.
TrainingResult fine_tune(const GroupedClassifier& frozen, std::span<const LabeledSample> feedback,
                         TrainConfig cfg);

/// Top-k error of the model on samples, optionally restricted to samples
/// whose label lies in [label_lo, label_hi). Throws if nothing is selected.
double topk_error(const GroupedClassifier& model, std::span<const LabeledSample> samples,
                  std::size_t k = 1, int label_lo = 0, int label_hi = -1);

}  // namespace docingest::incremental
