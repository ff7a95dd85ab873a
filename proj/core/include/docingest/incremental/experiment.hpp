#pragma once

#include <cstdint>
#include <vector>

#include "docingest/incremental/classifier.hpp"
#include "docingest/incremental/training.hpp"
#include "docingest/json_io.hpp"
#include "docingest/rng.hpp"

namespace docingest::incremental {

/// Isotropic Gaussian clusters, one per class.
struct ClusterTask {
  std::vector<Vector> centers;
  double sigma = 1.0;
};

/// Class centers drawn as Gaussian vectors of expected length `separation`.
ClusterTask make_cluster_task(int num_classes, int dim, double separation, double sigma,
                              Rng& rng);

/// per_class samples for each label in [label_lo, label_hi).
std::vector<LabeledSample> sample_clusters(const ClusterTask& task, int label_lo, int label_hi,
                                           int per_class, Rng& rng);

/// Classes that differ only in direction: a sample is r * unit(u_k + noise),
/// with the radius r drawn uniformly, so feature norm carries no class signal.
struct AngularTask {
  std::vector<Vector> directions;
  double noise = 0.3;
  double radius_lo = 0.5;
  double radius_hi = 4.0;
};

AngularTask make_angular_task(int num_classes, int dim, double noise, double radius_lo,
                              double radius_hi, Rng& rng);

std::vector<LabeledSample> sample_angular(const AngularTask& task, int per_class, Rng& rng);

/// Old classes are learned first; one new class then arrives as feedback.
struct ForgettingConfig {
  int num_old_classes = 10;
  int dim = 16;
  double separation = 2.0;
  double sigma = 0.25;
  /// Share of the new class's center lying outside the span of the old
  /// centers, as the cosine between the center and that orthogonal
  /// complement: 1 is a fully novel direction, 0 lies inside the old span.
  /// Values above 0 need dim > num_old_classes.
  double novelty = 1.0;
  /// Length of the new class's center relative to the old ones.
  double new_class_scale = 0.4;
  int train_per_class = 200;
  int feedback_size = 200;
  int test_per_class = 200;
  Architecture arch;
  TrainConfig base;
  TrainConfig update;
  std::uint64_t seed = 8;

  ForgettingConfig();
};

struct ForgettingReport {
  double base_old_error = 0.0;
  double finetune_old_error = 0.0;
  double finetune_new_accuracy = 0.0;
  double incremental_old_error = 0.0;
  double incremental_new_accuracy = 0.0;
  TrainingResult base;
  TrainingResult finetune;
  TrainingResult incremental;
};

/// Trains a base model on the old classes, then compares plain fine-tuning
/// with the distillation-regularized update on the new class. Errors are
/// top-1 on a fresh test set.
ForgettingReport run_forgetting_experiment(const ForgettingConfig& cfg);

OrderedJson forgetting_report_to_json(const ForgettingReport& report);

struct HeadComparisonConfig {
  int num_classes = 32;
  int dim = 16;
  double noise = 0.8;
  double radius_lo = 0.2;
  double radius_hi = 4.0;
  int train_per_class = 10;
  int test_per_class = 300;
  Architecture arch;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  HeadComparisonConfig();
};

struct HeadComparisonReport {
  std::vector<double> softmax_errors;
  std::vector<double> asoftmax_errors;
  double median_softmax = 0.0;
  double median_asoftmax = 0.0;
};

/// Trains both heads from identical data and hidden initialization per
/// seed and reports top-1 test error.
HeadComparisonReport run_head_comparison(const HeadComparisonConfig& cfg);

OrderedJson head_comparison_to_json(const HeadComparisonReport& report);

OrderedJson curve_to_json(const std::vector<CurvePoint>& curve);

}  // namespace docingest::incremental
