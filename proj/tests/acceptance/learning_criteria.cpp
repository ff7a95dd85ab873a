#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "../support/gradient_check.hpp"
#include "criteria.hpp"
#include "docingest/incremental/classifier.hpp"
#include "docingest/incremental/experiment.hpp"
#include "docingest/incremental/losses.hpp"
#include "docingest/incremental/training.hpp"
#include "docingest/rng.hpp"

namespace docingest::acceptance {
namespace {

using incremental::GroupedClassifier;
using incremental::HeadType;
using incremental::LabeledSample;
using incremental::Matrix;
using incremental::Vector;
using testing::max_relative_error;
using testing::numeric_gradient;

constexpr double kGradTol = 1e-4;
constexpr int kPoints = 100;

Vector random_vector(Eigen::Index n, Rng& rng, double scale) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal(0.0, scale);
  return v;
}

int random_label(int classes, Rng& rng) {
  return static_cast<int>(rng.uniform_int(0, classes - 1));
}

/// A small network with randomly perturbed parameters (biases included).
GroupedClassifier random_model(HeadType head, int margin, int classes, Rng& rng) {
  incremental::Architecture arch;
  arch.input_dim = 5;
  arch.hidden_widths = {6, 4};
  arch.num_classes = classes;
  arch.head = head;
  arch.margin = margin;
  GroupedClassifier m = GroupedClassifier::initialize(arch, rng);
  Vector p = m.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) += rng.normal(0.0, 0.1);
  m.set_parameters(p);
  if (head == HeadType::a_softmax) m.renormalize_head();
  return m;
}

/// Parameter-space check of a scalar objective of the model.
template <typename Objective>
double parameter_check(const GroupedClassifier& model, Objective&& objective) {
  Vector g;
  objective(model, &g);
  const Vector n = numeric_gradient(
      [&](const Vector& v) {
        GroupedClassifier probe = model;
        probe.set_parameters(v);
        return objective(probe, nullptr);
      },
      model.parameters());
  return max_relative_error(g, n);
}

double softmax_worst(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const int k = static_cast<int>(rng.uniform_int(2, 10));
    const Vector z = random_vector(k, rng, 3.0);
    const int y = random_label(k, rng);
    Vector g;
    incremental::softmax_loss(z, y, &g);
    const Vector n =
        numeric_gradient([&](const Vector& v) { return incremental::softmax_loss(v, y); }, z);
    worst = std::max(worst, max_relative_error(g, n));
  }
  return worst;
}

/// Head-level (feature and directions) and network-level checks of the
/// angular-margin loss, with and without the softened target.
double asoftmax_worst(int margin, Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const int k = static_cast<int>(rng.uniform_int(3, 8));
    const int d = static_cast<int>(rng.uniform_int(2, 6));
    Matrix dirs(k, d);
    for (int r = 0; r < k; ++r) dirs.row(r) = random_vector(d, rng, 1.0).normalized().transpose();
    const Vector x = random_vector(d, rng, 1.5);
    const int y = random_label(k, rng);
    const double blend = rng.bernoulli(0.5) ? 0.0 : rng.uniform(0.0, 5.0);

    incremental::HeadGradient g;
    incremental::asoftmax_loss(dirs, x, y, margin, &g, blend);
    const Vector nx = numeric_gradient(
        [&](const Vector& v) {
          return incremental::asoftmax_loss(dirs, v, y, margin, nullptr, blend);
        },
        x);
    const Vector flat = Eigen::Map<const Vector>(dirs.data(), dirs.size());
    const Vector nd = numeric_gradient(
        [&](const Vector& v) {
          const Matrix m = Eigen::Map<const Matrix>(v.data(), dirs.rows(), dirs.cols());
          return incremental::asoftmax_loss(m, x, y, margin, nullptr, blend);
        },
        flat);
    const Vector gd = Eigen::Map<const Vector>(g.d_directions.data(), g.d_directions.size());
    worst = std::max({worst, max_relative_error(g.d_feature, nx), max_relative_error(gd, nd)});

    const GroupedClassifier model = random_model(HeadType::a_softmax, margin, k, rng);
    const LabeledSample s{random_vector(5, rng, 1.0), y};
    worst = std::max(worst, parameter_check(model, [&](const GroupedClassifier& m, Vector* grad) {
                       return incremental::sample_task_loss(m, s, grad, blend);
                     }));
  }
  return worst;
}

std::vector<Vector> random_batch(int n, Rng& rng) {
  std::vector<Vector> batch;
  for (int i = 0; i < n; ++i) batch.push_back(random_vector(5, rng, 1.0));
  return batch;
}

double distillation_worst(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const HeadType head = rng.bernoulli(0.5) ? HeadType::softmax : HeadType::a_softmax;
    const GroupedClassifier frozen = random_model(head, 2, 3, rng);
    GroupedClassifier student = random_model(head, 2, 3, rng);
    if (rng.bernoulli(0.5)) student = student.expand_output_layer(1);
    const auto batch = random_batch(static_cast<int>(rng.uniform_int(1, 6)), rng);
    worst = std::max(worst, parameter_check(student, [&](const GroupedClassifier& m, Vector* g) {
                       return incremental::distillation_loss(frozen, m, batch, g);
                     }));
  }
  return worst;
}

/// The composite update objective: lambda * task loss on feedback plus
/// alpha * distillation on original data, for an expanded student.
double composite_worst(Rng& rng) {
  double worst = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const HeadType head = rng.bernoulli(0.5) ? HeadType::softmax : HeadType::a_softmax;
    const int margin = 1 << rng.uniform_int(0, 2);
    const GroupedClassifier frozen = random_model(head, margin, 3, rng);
    GroupedClassifier student = random_model(head, margin, 3, rng).expand_output_layer(1);
    if (head == HeadType::a_softmax) student.renormalize_head();
    std::vector<LabeledSample> feedback;
    std::vector<LabeledSample> original;
    const int nf = static_cast<int>(rng.uniform_int(1, 4));
    const int no = static_cast<int>(rng.uniform_int(1, 4));
    for (int j = 0; j < nf; ++j) feedback.push_back({random_vector(5, rng, 1.0), random_label(4, rng)});
    for (int j = 0; j < no; ++j) original.push_back({random_vector(5, rng, 1.0), random_label(3, rng)});
    const double alpha = rng.uniform(0.0, 2.0);
    const double lambda = rng.uniform(0.1, 2.0);
    const double blend = head == HeadType::a_softmax && rng.bernoulli(0.5) ? rng.uniform(0.0, 5.0)
                                                                           : 0.0;
    worst = std::max(worst, parameter_check(student, [&](const GroupedClassifier& m, Vector* g) {
                       return incremental::incremental_objective(frozen, m, feedback, original,
                                                                 alpha, lambda, g, blend);
                     }));
  }
  return worst;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Outcome gradient_checks(const Options&) {
  Rng rng(90210);
  const double softmax = softmax_worst(rng);
  const double m1 = asoftmax_worst(1, rng);
  const double m2 = asoftmax_worst(2, rng);
  const double m4 = asoftmax_worst(4, rng);
  const double distill = distillation_worst(rng);
  const double composite = composite_worst(rng);
  const double worst = std::max({softmax, m1, m2, m4, distill, composite});
  return {worst <= kGradTol,
          strf("worst relative error at %d points each: softmax %.1e, a-softmax m=1 %.1e, "
               "m=2 %.1e, m=4 %.1e, distillation %.1e, composite %.1e (<= 1e-4)",
               kPoints, softmax, m1, m2, m4, distill, composite)};
}

Outcome anti_forgetting(const Options&) {
  const incremental::ForgettingReport r =
      incremental::run_forgetting_experiment(incremental::ForgettingConfig{});
  const double rise = r.finetune_old_error - r.base_old_error;
  const double drift = r.incremental_old_error - r.base_old_error;
  const bool pass = rise >= 0.30 && std::abs(drift) <= 0.05 && r.incremental_new_accuracy >= 0.90;
  return {pass,
          strf("base old error %.2f%%; fine-tune old error %.2f%% (rise %.1f points, >= 30); "
               "distillation update old error %.2f%% (drift %.1f points, <= 5), new-class "
               "accuracy %.2f%% (>= 90)",
               100 * r.base_old_error, 100 * r.finetune_old_error, 100 * rise,
               100 * r.incremental_old_error, 100 * drift, 100 * r.incremental_new_accuracy)};
}

Outcome head_comparison(const Options&) {
  const incremental::HeadComparisonConfig cfg;
  const incremental::HeadComparisonReport r = incremental::run_head_comparison(cfg);
  const double soft = median(r.softmax_errors);
  const double angular = median(r.asoftmax_errors);
  return {r.softmax_errors.size() == 5 && angular <= soft,
          strf("median top-1 error over %zu seeds: a-softmax %.2f%%, softmax %.2f%%",
               r.softmax_errors.size(), 100 * angular, 100 * soft)};
}

}  // namespace docingest::acceptance
