#pragma once

#include <span>
#include <vector>

#include "docingest/incremental/classifier.hpp"

namespace docingest::incremental {

/// Cross-entropy of softmax(logits) against a 0-based label. When d_logits
/// is given it receives dLoss/dlogits. Throws on an out-of-range label.
double softmax_loss(const Vector& logits, int label, Vector* d_logits = nullptr);

/// Angular-margin extension of cos(m*theta), written in terms of
/// c = cos(theta): psi = (-1)^k T_m(c) - 2k for theta in [k*pi/m, (k+1)*pi/m],
/// monotone decreasing in theta. d_psi receives dpsi/dc. Throws if m < 1.
double angular_margin_psi(double cos_theta, int margin, double* d_psi = nullptr);

/// Logits of the angular head for a labeled sample: d_j . x for j != y and
/// |x| * psi(theta_y) for the target. `directions` must have unit rows.
/// A blend b > 0 softens the margin during training: the target becomes
/// |x| * (b * cos(theta_y) + psi(theta_y)) / (1 + b). b = 0 is the plain head.
Vector asoftmax_logits(const Matrix& directions, const Vector& feature, int label, int margin,
                       double blend = 0.0);

/// Cross-entropy over asoftmax_logits. When grad is given it receives the
/// derivative with respect to the (already normalized) directions and the
/// feature. Throws if m < 1, blend < 0, the label is out of range, or shapes
/// mismatch.
double asoftmax_loss(const Matrix& directions, const Vector& feature, int label, int margin,
                     HeadGradient* grad = nullptr, double blend = 0.0);

/// Terms of the multi-task objective.
struct MultiTaskTerms {
  double classification_loss = 0.0;
  double recognition_loss = 0.0;
  /// Target sequence length; must be >= 1.
  int target_length = 1;
};

/// lambda * L_c + L_r / N. Throws if N < 1, lambda < 0 or a loss is negative.
double multitask_loss(const MultiTaskTerms& terms, double lambda);

/// Distillation distance for one sample: sum over groups of the squared L2
/// distance between frozen and student outputs, comparing only the first
/// frozen.back().size() coordinates of the final group. d_student, when
/// given, receives one gradient per student group.
double distillation_distance(std::span<const Vector> frozen, std::span<const Vector> student,
                             std::vector<Vector>* d_student = nullptr);

/// Mean over the batch of distillation_distance between the two models'
/// group outputs. grad (w.r.t. the student's parameters) is filled when
/// given. Throws if the models' group structures are incompatible.
double distillation_loss(const GroupedClassifier& frozen, const GroupedClassifier& student,
                         std::span<const Vector> batch, Vector* grad = nullptr);

}  // namespace docingest::incremental
