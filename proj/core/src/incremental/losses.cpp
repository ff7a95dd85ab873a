#include "docingest/incremental/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace docingest::incremental {

namespace {

void check_label(int label, Eigen::Index k, const char* op) {
  if (label < 0 || label >= k) {
    throw std::invalid_argument(std::string(op) + ": label " + std::to_string(label) +
                                " outside [0, " + std::to_string(k) + ")");
  }
}

}  // namespace

double softmax_loss(const Vector& logits, int label, Vector* d_logits) {
  check_label(label, logits.size(), "softmax_loss");
  const double top = logits.maxCoeff();
  const Vector e = (logits.array() - top).exp().matrix();
  const double sum = e.sum();
  if (d_logits != nullptr) {
    *d_logits = e / sum;
    (*d_logits)(label) -= 1.0;
  }
  return std::log(sum) - (logits(label) - top);
}

double angular_margin_psi(double cos_theta, int margin, double* d_psi) {
  if (margin < 1) throw std::invalid_argument("angular_margin_psi: margin must be >= 1");
  const double c = std::clamp(cos_theta, -1.0, 1.0);
  int k = 0;
  for (int j = 1; j < margin; ++j) {
    if (c < std::cos(j * std::numbers::pi / margin)) k = j;
  }
  // Chebyshev T_m(c) = cos(m theta) and its derivative m * U_{m-1}(c).
  double t_prev = 1.0;
  double t = c;
  double u_prev = 0.0;
  double u = 1.0;
  for (int n = 1; n < margin; ++n) {
    const double t_next = 2.0 * c * t - t_prev;
    const double u_next = 2.0 * c * u - u_prev;
    t_prev = t;
    t = t_next;
    u_prev = u;
    u = u_next;
  }
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  if (d_psi != nullptr) *d_psi = sign * margin * u;
  return sign * t - 2.0 * k;
}

namespace {

struct AngularTarget {
  double norm;
  double cos_theta;
};

AngularTarget angular_target(const Matrix& directions, const Vector& feature, int label,
                             int margin, double blend, const char* op) {
  if (margin < 1) throw std::invalid_argument(std::string(op) + ": margin must be >= 1");
  if (!(blend >= 0.0) || !std::isfinite(blend)) {
    throw std::invalid_argument(std::string(op) + ": blend must be >= 0");
  }
  if (directions.cols() != feature.size()) {
    throw std::invalid_argument(std::string(op) + ": feature/direction width mismatch");
  }
  check_label(label, directions.rows(), op);
  const double norm = feature.norm();
  const double cos_theta = norm > 0.0 ? directions.row(label).dot(feature) / norm : 1.0;
  return {norm, cos_theta};
}

// psi softened toward cos(theta) by the blend, with its derivative in c.
double blended_psi(double cos_theta, int margin, double blend, double* d_psi) {
  double d = 0.0;
  const double psi = angular_margin_psi(cos_theta, margin, &d);
  if (d_psi != nullptr) *d_psi = (blend + d) / (1.0 + blend);
  return (blend * std::clamp(cos_theta, -1.0, 1.0) + psi) / (1.0 + blend);
}

}  // namespace

Vector asoftmax_logits(const Matrix& directions, const Vector& feature, int label, int margin,
                       double blend) {
  const AngularTarget t =
      angular_target(directions, feature, label, margin, blend, "asoftmax_logits");
  Vector z = directions * feature;
  z(label) = t.norm * blended_psi(t.cos_theta, margin, blend, nullptr);
  return z;
}

double asoftmax_loss(const Matrix& directions, const Vector& feature, int label, int margin,
                     HeadGradient* grad, double blend) {
  const AngularTarget t =
      angular_target(directions, feature, label, margin, blend, "asoftmax_loss");
  double d_psi = 0.0;
  const double psi = blended_psi(t.cos_theta, margin, blend, &d_psi);
  Vector z = directions * feature;
  z(label) = t.norm * psi;

  Vector g;
  const double loss = softmax_loss(z, label, grad != nullptr ? &g : nullptr);
  if (grad == nullptr) return loss;

  // Non-target logits are d_j . x; the target is |x| psi(c) with
  // c = d_y . x / |x|, so d f_y/dx = psi x^ + psi' (d_y - c x^) and
  // d f_y/dd_y = psi' x.
  grad->d_directions = g * feature.transpose();
  grad->d_directions.row(label) = g(label) * d_psi * feature.transpose();
  Vector d_feature = directions.transpose() * g;
  d_feature -= g(label) * directions.row(label).transpose();
  if (t.norm > 0.0) {
    const Vector unit = feature / t.norm;
    d_feature += g(label) * (psi * unit +
                             d_psi * (directions.row(label).transpose() - t.cos_theta * unit));
  }
  grad->d_feature = std::move(d_feature);
  return loss;
}

double multitask_loss(const MultiTaskTerms& terms, double lambda) {
  if (terms.target_length < 1) {
    throw std::invalid_argument("multitask_loss: target length N must be >= 1");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("multitask_loss: lambda must be >= 0");
  if (terms.classification_loss < 0.0 || terms.recognition_loss < 0.0) {
    throw std::invalid_argument("multitask_loss: losses must be >= 0");
  }
  return lambda * terms.classification_loss + terms.recognition_loss / terms.target_length;
}

double distillation_distance(std::span<const Vector> frozen, std::span<const Vector> student,
                             std::vector<Vector>* d_student) {
  if (frozen.size() != student.size() || frozen.empty()) {
    throw std::invalid_argument("distillation_distance: group counts differ");
  }
  if (d_student != nullptr) d_student->assign(student.size(), Vector());
  double total = 0.0;
  for (std::size_t l = 0; l < frozen.size(); ++l) {
    const bool last = l + 1 == frozen.size();
    const Eigen::Index n = frozen[l].size();
    if (student[l].size() != n && !(last && student[l].size() > n)) {
      throw std::invalid_argument("distillation_distance: group " + std::to_string(l) +
                                  " output widths are incompatible");
    }
    const Vector diff = student[l].head(n) - frozen[l];
    total += diff.squaredNorm();
    if (d_student != nullptr) {
      Vector g = Vector::Zero(student[l].size());
      g.head(n) = 2.0 * diff;
      (*d_student)[l] = std::move(g);
    }
  }
  return total;
}

double distillation_loss(const GroupedClassifier& frozen, const GroupedClassifier& student,
                         std::span<const Vector> batch, Vector* grad) {
  if (frozen.num_groups() != student.num_groups() || frozen.input_dim() != student.input_dim() ||
      frozen.num_classes() > student.num_classes()) {
    throw std::invalid_argument("distillation_loss: model group structures differ");
  }
  for (int l = 0; l + 1 < frozen.num_groups(); ++l) {
    if (frozen.groups()[l].weight.rows() != student.groups()[l].weight.rows()) {
      throw std::invalid_argument("distillation_loss: group " + std::to_string(l) +
                                  " widths differ");
    }
  }
  if (grad != nullptr) *grad = Vector::Zero(static_cast<Eigen::Index>(student.parameter_count()));
  if (batch.empty()) return 0.0;

  double total = 0.0;
  std::vector<Vector> d_out;
  for (const Vector& x : batch) {
    const ForwardPass f = frozen.forward(x);
    const ForwardPass s = student.forward(x);
    total += distillation_distance(f.outputs, s.outputs, grad != nullptr ? &d_out : nullptr);
    if (grad != nullptr) *grad += student.backward(s, d_out);
  }
  const double n = static_cast<double>(batch.size());
  if (grad != nullptr) *grad /= n;
  return total / n;
}

}  // namespace docingest::incremental
