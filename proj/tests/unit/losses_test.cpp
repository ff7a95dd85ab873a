#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "../support/gradient_check.hpp"
#include "docingest/incremental/classifier.hpp"
#include "docingest/incremental/losses.hpp"
#include "docingest/incremental/training.hpp"
#include "docingest/rng.hpp"

namespace docingest::incremental {
namespace {

using testing::max_relative_error;
using testing::numeric_gradient;

constexpr double kGradTol = 1e-4;

Vector random_vector(int n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal(0.0, scale);
  return v;
}

Matrix unit_rows(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) m.row(r) = random_vector(cols, rng).normalized().transpose();
  return m;
}

// Feature at angle theta from direction row 0 of `d` (2-D, rows 0 and 1).
Vector at_angle(double theta, double norm) {
  Vector x(2);
  x << norm * std::cos(theta), norm * std::sin(theta);
  return x;
}

Matrix plane_directions() {
  Matrix d(3, 2);
  d << 1, 0, 0, 1, -std::sqrt(0.5), -std::sqrt(0.5);
  return d;
}

GroupedClassifier small_model(HeadType head, int margin, Rng& rng) {
  Architecture arch;
  arch.input_dim = 5;
  arch.hidden_widths = {6, 4};
  arch.num_classes = 3;
  arch.head = head;
  arch.margin = margin;
  GroupedClassifier m = GroupedClassifier::initialize(arch, rng);
  // Non-zero biases so their gradients are exercised.
  Vector p = m.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) += rng.normal(0.0, 0.1);
  m.set_parameters(p);
  return m;
}

TEST(SoftmaxLoss, UniformLogitsGiveLogK) {
  for (int k : {2, 5, 10}) {
    EXPECT_NEAR(softmax_loss(Vector::Constant(k, 0.3), 1, nullptr), std::log(k), 1e-12);
  }
}

TEST(SoftmaxLoss, ClosedForm) {
  Vector z(2);
  z << 2.0, 0.0;
  EXPECT_NEAR(softmax_loss(z, 0), std::log1p(std::exp(-2.0)), 1e-15);
}

TEST(SoftmaxLoss, DecreasesAsTargetLogitGrows) {
  Vector z = Vector::Zero(4);
  double prev = softmax_loss(z, 2);
  for (int i = 1; i <= 40; ++i) {
    z(2) = i;
    const double cur = softmax_loss(z, 2);
    // Strict until the loss underflows to 0.
    if (prev > 0.0) EXPECT_LT(cur, prev);
    EXPECT_LE(cur, prev);
    EXPECT_GE(cur, 0.0);
    prev = cur;
  }
  EXPECT_LT(prev, 1e-15);
}

TEST(SoftmaxLoss, RejectsOutOfRangeLabel) {
  EXPECT_THROW(softmax_loss(Vector::Zero(3), 3), std::invalid_argument);
  EXPECT_THROW(softmax_loss(Vector::Zero(3), -1), std::invalid_argument);
}

TEST(SoftmaxLoss, GradientMatchesFiniteDifferences) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector z = random_vector(6, rng, 2.0);
    const int label = static_cast<int>(rng.uniform_int(0, 5));
    Vector g;
    softmax_loss(z, label, &g);
    const Vector n = numeric_gradient([&](const Vector& v) { return softmax_loss(v, label); }, z);
    EXPECT_LE(max_relative_error(g, n), kGradTol);
  }
}

TEST(AngularMarginPsi, MatchesCosMThetaOnFirstPieceAndIsMonotone) {
  for (int m : {1, 2, 3, 4}) {
    double prev = 2.0;
    for (int i = 0; i <= 200; ++i) {
      const double theta = std::numbers::pi * i / 200.0;
      const double psi = angular_margin_psi(std::cos(theta), m);
      if (theta <= std::numbers::pi / m) EXPECT_NEAR(psi, std::cos(m * theta), 1e-12);
      EXPECT_LE(psi, prev + 1e-12);
      prev = psi;
    }
    EXPECT_NEAR(angular_margin_psi(-1.0, m), -(2.0 * m - 1.0), 1e-12);
  }
  EXPECT_THROW(angular_margin_psi(0.5, 0), std::invalid_argument);
}

TEST(AsoftmaxLoss, MarginOneEqualsNormalizedSoftmax) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix d = unit_rows(5, 4, rng);
    const Vector x = random_vector(4, rng);
    const int y = static_cast<int>(rng.uniform_int(0, 4));
    EXPECT_NEAR(asoftmax_loss(d, x, y, 1), softmax_loss(d * x, y), 1e-12);
  }
}

TEST(AsoftmaxLoss, ZeroAngleTargetIsNorm) {
  const Matrix d = plane_directions();
  const Vector x = at_angle(0.0, 2.5);
  for (int m : {1, 2, 4}) {
    EXPECT_NEAR(asoftmax_logits(d, x, 0, m)(0), 2.5, 1e-12);
  }
}

TEST(AsoftmaxLoss, MarginNeverLowersLoss) {
  const Matrix d = plane_directions();
  for (int i = 1; i < 100; ++i) {
    const double theta = (std::numbers::pi / 4.0) * i / 100.0;
    const Vector x = at_angle(theta, 1.7);
    double prev = asoftmax_loss(d, x, 0, 1);
    for (int m = 2; m <= 4; ++m) {
      const double cur = asoftmax_loss(d, x, 0, m);
      EXPECT_GE(cur, prev - 1e-12);
      prev = cur;
    }
  }
}

TEST(AsoftmaxLoss, MarginOneKeepsNormalizedArgmax) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix d = unit_rows(6, 3, rng);
    const Vector x = random_vector(3, rng);
    const Vector plain = d * x;
    Eigen::Index best = 0;
    plain.maxCoeff(&best);
    for (int y = 0; y < 6; ++y) {
      Eigen::Index got = 0;
      asoftmax_logits(d, x, y, 1).maxCoeff(&got);
      EXPECT_EQ(got, best);
    }
  }
}

TEST(AsoftmaxLoss, BlendInterpolatesTowardPlainCosine) {
  const Matrix d = plane_directions();
  const Vector x = at_angle(0.6, 2.0);
  const double plain = asoftmax_loss(d, x, 0, 1);
  const double hard = asoftmax_loss(d, x, 0, 4);
  const double soft = asoftmax_loss(d, x, 0, 4, nullptr, 3.0);
  EXPECT_LT(soft, hard);
  EXPECT_GT(soft, plain);
  EXPECT_NEAR(asoftmax_loss(d, x, 0, 4, nullptr, 1e12), plain, 1e-9);
  EXPECT_THROW(asoftmax_loss(d, x, 0, 4, nullptr, -1.0), std::invalid_argument);
}

TEST(AsoftmaxLoss, Errors) {
  const Matrix d = plane_directions();
  EXPECT_THROW(asoftmax_loss(d, at_angle(0.1, 1.0), 0, 0), std::invalid_argument);
  EXPECT_THROW(asoftmax_loss(d, at_angle(0.1, 1.0), 3, 2), std::invalid_argument);
  EXPECT_THROW(asoftmax_loss(d, Vector::Ones(3), 0, 2), std::invalid_argument);
}

TEST(AsoftmaxLoss, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  for (int m : {1, 2, 4}) {
    for (double blend : {0.0, 2.5}) {
      for (int trial = 0; trial < 10; ++trial) {
        const Matrix d = unit_rows(5, 4, rng);
        const Vector x = random_vector(4, rng, 1.5);
        const int y = static_cast<int>(rng.uniform_int(0, 4));
        HeadGradient g;
        asoftmax_loss(d, x, y, m, &g, blend);

        const Vector nx = numeric_gradient(
            [&](const Vector& v) { return asoftmax_loss(d, v, y, m, nullptr, blend); }, x);
        EXPECT_LE(max_relative_error(g.d_feature, nx), kGradTol) << "m=" << m;

        const Vector flat = Eigen::Map<const Vector>(d.data(), d.size());
        const Vector nd = numeric_gradient(
            [&](const Vector& v) {
              const Matrix dm = Eigen::Map<const Matrix>(v.data(), d.rows(), d.cols());
              return asoftmax_loss(dm, x, y, m, nullptr, blend);
            },
            flat);
        const Vector gd = Eigen::Map<const Vector>(g.d_directions.data(), g.d_directions.size());
        EXPECT_LE(max_relative_error(gd, nd), kGradTol) << "m=" << m;
      }
    }
  }
}

TEST(MultitaskLoss, Arithmetic) {
  EXPECT_DOUBLE_EQ(multitask_loss({2.0, 3.0, 1}, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(multitask_loss({2.0, 3.0, 4}, 0.0), 0.75);
  EXPECT_DOUBLE_EQ(multitask_loss({0.5, 10.0, 10}, 1.0), 1.5);
  EXPECT_THROW(multitask_loss({1.0, 1.0, 0}, 1.0), std::invalid_argument);
  EXPECT_THROW(multitask_loss({1.0, 1.0, 1}, -1.0), std::invalid_argument);
  EXPECT_THROW(multitask_loss({-1.0, 1.0, 1}, 1.0), std::invalid_argument);
}

TEST(DistillationDistance, HandSetOutputs) {
  Vector a(2);
  a << 1.0, 2.0;
  Vector b(2);
  b << 4.0, -2.0;
  const std::vector<Vector> one_f{a};
  const std::vector<Vector> one_s{b};
  EXPECT_DOUBLE_EQ(distillation_distance(one_f, one_s), 25.0);

  Vector c(3);
  c << 0.0, 1.0, 1.0;
  Vector e(3);
  e << 1.0, 1.0, 3.0;
  const std::vector<Vector> two_f{a, c};
  const std::vector<Vector> two_s{b, e};
  EXPECT_DOUBLE_EQ(distillation_distance(two_f, two_s), 25.0 + 5.0);
}

TEST(DistillationDistance, ExtraFinalCoordinatesIgnored) {
  Vector f(2);
  f << 1.0, 1.0;
  Vector s(3);
  s << 1.0, 1.0, 100.0;
  const std::vector<Vector> hidden{Vector::Ones(2)};
  const std::vector<Vector> fr{hidden[0], f};
  const std::vector<Vector> st{hidden[0], s};
  EXPECT_DOUBLE_EQ(distillation_distance(fr, st), 0.0);
}

TEST(DistillationLoss, CopyIsZeroAndNonNegative) {
  Rng rng(5);
  const GroupedClassifier m = small_model(HeadType::softmax, 4, rng);
  std::vector<Vector> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(random_vector(5, rng));
  EXPECT_DOUBLE_EQ(distillation_loss(m, m, batch), 0.0);
  const GroupedClassifier other = small_model(HeadType::softmax, 4, rng);
  EXPECT_GT(distillation_loss(m, other, batch), 0.0);
}

TEST(DistillationLoss, StructureMismatchThrows) {
  Rng rng(6);
  const GroupedClassifier m = small_model(HeadType::softmax, 4, rng);
  Architecture arch;
  arch.input_dim = 5;
  arch.hidden_widths = {7, 4};
  arch.num_classes = 3;
  const GroupedClassifier wide = GroupedClassifier::initialize(arch, rng);
  const std::vector<Vector> batch{Vector::Ones(5)};
  EXPECT_THROW(distillation_loss(m, wide, batch), std::invalid_argument);
}

TEST(Classifier, ZeroParametersGiveUniformOutput) {
  Rng rng(7);
  GroupedClassifier m = small_model(HeadType::softmax, 4, rng);
  m.set_parameters(Vector::Zero(static_cast<Eigen::Index>(m.parameter_count())));
  const ForwardPass pass = m.forward(Vector::Ones(5));
  EXPECT_EQ(static_cast<int>(pass.outputs.size()), m.num_groups());
  EXPECT_TRUE(pass.logits().isZero());
  EXPECT_NEAR(softmax_loss(pass.logits(), 0), std::log(3.0), 1e-12);
  EXPECT_THROW(m.forward(Vector::Ones(4)), std::invalid_argument);
}

TEST(Classifier, ExpandKeepsOldLogits) {
  Rng rng(8);
  for (HeadType head : {HeadType::softmax, HeadType::a_softmax}) {
    const GroupedClassifier m = small_model(head, 2, rng);
    const GroupedClassifier e = m.expand_output_layer(2);
    EXPECT_EQ(e.num_classes(), m.num_classes() + 2);
    std::vector<Vector> batch;
    for (int i = 0; i < 10; ++i) {
      const Vector x = random_vector(5, rng);
      batch.push_back(x);
      EXPECT_TRUE(e.logits(x).head(3).isApprox(m.logits(x), 1e-14));
    }
    EXPECT_NEAR(distillation_loss(m, e, batch), 0.0, 1e-24);
    EXPECT_EQ(e.groups().back().weight.topRows(3), m.groups().back().weight);
  }
  EXPECT_THROW(small_model(HeadType::softmax, 4, rng).expand_output_layer(0),
               std::invalid_argument);
}

TEST(Classifier, RankedClassesFollowLogits) {
  Rng rng(9);
  const GroupedClassifier m = small_model(HeadType::softmax, 4, rng);
  const Vector x = random_vector(5, rng);
  const auto ranked = m.ranked_classes(x);
  const Vector z = m.logits(x);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0], m.predict(x));
  EXPECT_GE(z(ranked[0]), z(ranked[1]));
  EXPECT_GE(z(ranked[1]), z(ranked[2]));
}

TEST(Classifier, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(10);
  for (HeadType head : {HeadType::softmax, HeadType::a_softmax}) {
    for (int m : {1, 2, 4}) {
      if (head == HeadType::softmax && m != 4) continue;
      GroupedClassifier model = small_model(head, m, rng);
      const LabeledSample s{random_vector(5, rng), static_cast<int>(rng.uniform_int(0, 2))};
      Vector g;
      sample_task_loss(model, s, &g, 0.5);
      const Vector p = model.parameters();
      const Vector n = numeric_gradient(
          [&](const Vector& v) {
            GroupedClassifier probe = model;
            probe.set_parameters(v);
            return sample_task_loss(probe, s, nullptr, 0.5);
          },
          p);
      EXPECT_LE(max_relative_error(g, n), kGradTol);
    }
  }
}

TEST(Classifier, DistillationAndObjectiveGradients) {
  Rng rng(11);
  const GroupedClassifier frozen = small_model(HeadType::softmax, 4, rng);
  GroupedClassifier student = small_model(HeadType::softmax, 4, rng).expand_output_layer(1);
  std::vector<LabeledSample> fb;
  std::vector<LabeledSample> orig;
  for (int i = 0; i < 3; ++i) fb.push_back({random_vector(5, rng), static_cast<int>(i % 4)});
  for (int i = 0; i < 4; ++i) orig.push_back({random_vector(5, rng), 0});
  Vector g;
  incremental_objective(frozen, student, fb, orig, 0.7, 1.3, &g);
  const Vector n = numeric_gradient(
      [&](const Vector& v) {
        GroupedClassifier probe = student;
        probe.set_parameters(v);
        return incremental_objective(frozen, probe, fb, orig, 0.7, 1.3);
      },
      student.parameters());
  EXPECT_LE(max_relative_error(g, n), kGradTol);
}

}  // namespace
}  // namespace docingest::incremental
