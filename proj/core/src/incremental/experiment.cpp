#include "docingest/incremental/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace docingest::incremental {

namespace {

Vector gaussian_vector(int dim, double sigma, Rng& rng) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal(0.0, sigma);
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ClusterTask make_cluster_task(int num_classes, int dim, double separation, double sigma,
                              Rng& rng) {
  if (num_classes < 1 || dim < 1) {
    throw std::invalid_argument("make_cluster_task: num_classes and dim must be >= 1");
  }
  if (!(separation > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument("make_cluster_task: separation and sigma must be > 0");
  }
  ClusterTask task;
  task.sigma = sigma;
  for (int k = 0; k < num_classes; ++k) {
    task.centers.push_back(gaussian_vector(dim, separation / std::sqrt(dim), rng));
  }
  return task;
}

std::vector<LabeledSample> sample_clusters(const ClusterTask& task, int label_lo, int label_hi,
                                           int per_class, Rng& rng) {
  if (label_lo < 0 || label_hi > static_cast<int>(task.centers.size()) || label_lo >= label_hi) {
    throw std::invalid_argument("sample_clusters: label range outside the task");
  }
  std::vector<LabeledSample> out;
  for (int k = label_lo; k < label_hi; ++k) {
    const Vector& c = task.centers[static_cast<std::size_t>(k)];
    for (int i = 0; i < per_class; ++i) {
      out.push_back({c + gaussian_vector(static_cast<int>(c.size()), task.sigma, rng), k});
    }
  }
  return out;
}

AngularTask make_angular_task(int num_classes, int dim, double noise, double radius_lo,
                              double radius_hi, Rng& rng) {
  if (num_classes < 1 || dim < 1) {
    throw std::invalid_argument("make_angular_task: num_classes and dim must be >= 1");
  }
  if (!(noise >= 0.0) || !(radius_lo > 0.0) || !(radius_hi >= radius_lo)) {
    throw std::invalid_argument("make_angular_task: need noise >= 0 and 0 < radius_lo <= radius_hi");
  }
  AngularTask task;
  task.noise = noise;
  task.radius_lo = radius_lo;
  task.radius_hi = radius_hi;
  for (int k = 0; k < num_classes; ++k) {
    Vector u = gaussian_vector(dim, 1.0, rng);
    task.directions.push_back(u / u.norm());
  }
  return task;
}

std::vector<LabeledSample> sample_angular(const AngularTask& task, int per_class, Rng& rng) {
  std::vector<LabeledSample> out;
  for (std::size_t k = 0; k < task.directions.size(); ++k) {
    const Vector& u = task.directions[k];
    const int dim = static_cast<int>(u.size());
    for (int i = 0; i < per_class; ++i) {
      Vector v = u + gaussian_vector(dim, task.noise / std::sqrt(dim), rng);
      const double r = rng.uniform(task.radius_lo, task.radius_hi);
      out.push_back({r * v / v.norm(), static_cast<int>(k)});
    }
  }
  return out;
}

ForgettingConfig::ForgettingConfig() {
  arch.input_dim = dim;
  arch.num_classes = num_old_classes;
  base.learning_rate = 0.01;
  base.max_steps = 6000;
  base.eval_interval = 50;
  base.new_data_rate = 1.0;
  update.learning_rate = 0.01;
  update.min_improvement = 0.01;
  update.max_steps = 3000;
  update.eval_interval = 20;
  update.new_data_rate = 0.25;
  update.distillation_weight = 1.0;
}

ForgettingReport run_forgetting_experiment(const ForgettingConfig& cfg) {
  if (cfg.arch.input_dim != cfg.dim || cfg.arch.num_classes != cfg.num_old_classes) {
    throw std::invalid_argument("ForgettingConfig: architecture does not match the task shape");
  }
  Rng rng(cfg.seed);
  Rng task_rng = rng.fork(1);
  Rng data_rng = rng.fork(2);
  Rng init_rng = rng.fork(3);

  if (!(cfg.novelty >= 0.0 && cfg.novelty <= 1.0)) {
    throw std::invalid_argument("ForgettingConfig.novelty must lie in [0, 1]");
  }
  if (!(cfg.new_class_scale > 0.0)) {
    throw std::invalid_argument("ForgettingConfig.new_class_scale must be > 0");
  }
  if (cfg.novelty > 0.0 && cfg.dim <= cfg.num_old_classes) {
    throw std::invalid_argument("ForgettingConfig: a novel new class needs dim > classes");
  }
  ClusterTask task =
      make_cluster_task(cfg.num_old_classes + 1, cfg.dim, cfg.separation, cfg.sigma, task_rng);
  const int new_label = cfg.num_old_classes;
  {
    // Split the new center into parts inside and outside the old span and
    // recombine them at the requested angle, keeping its length.
    Matrix old(cfg.dim, cfg.num_old_classes);
    for (int k = 0; k < cfg.num_old_classes; ++k) old.col(k) = task.centers[k];
    const Eigen::HouseholderQR<Matrix> qr(old);
    const Matrix q = qr.householderQ() * Matrix::Identity(cfg.dim, cfg.num_old_classes);
    Vector& c = task.centers.back();
    const double length = c.norm();
    const Vector inside = q * (q.transpose() * c);
    const Vector outside = c - inside;
    Vector blended = std::sqrt(1.0 - cfg.novelty * cfg.novelty) * inside.normalized();
    if (cfg.novelty > 0.0) blended += cfg.novelty * outside.normalized();
    c = cfg.new_class_scale * length * blended;
  }
  const std::vector<LabeledSample> original =
      sample_clusters(task, 0, new_label, cfg.train_per_class, data_rng);
  const std::vector<LabeledSample> feedback =
      sample_clusters(task, new_label, new_label + 1, cfg.feedback_size, data_rng);
  const std::vector<LabeledSample> test =
      sample_clusters(task, 0, new_label + 1, cfg.test_per_class, data_rng);

  TrainConfig base_cfg = cfg.base;
  base_cfg.seed = mix_seed(cfg.seed, 10);
  TrainingResult base = train_classifier(GroupedClassifier::initialize(cfg.arch, init_rng),
                                         original, base_cfg);

  TrainConfig update_cfg = cfg.update;
  update_cfg.seed = mix_seed(cfg.seed, 20);
  TrainingResult tuned = fine_tune(base.model, feedback, update_cfg);
  TrainingResult incremental = incremental_train(base.model, original, feedback, update_cfg);

  const auto old_error = [&](const GroupedClassifier& m) {
    return topk_error(m, test, 1, 0, new_label);
  };
  const auto new_accuracy = [&](const GroupedClassifier& m) {
    return 1.0 - topk_error(m, test, 1, new_label, new_label + 1);
  };
  ForgettingReport report{
      .base_old_error = old_error(base.model),
      .finetune_old_error = old_error(tuned.model),
      .finetune_new_accuracy = new_accuracy(tuned.model),
      .incremental_old_error = old_error(incremental.model),
      .incremental_new_accuracy = new_accuracy(incremental.model),
      .base = std::move(base),
      .finetune = std::move(tuned),
      .incremental = std::move(incremental),
  };
  return report;
}

OrderedJson curve_to_json(const std::vector<CurvePoint>& curve) {
  OrderedJson j = OrderedJson::array();
  for (const CurvePoint& p : curve) {
    j.push_back({{"step", p.step}, {"train_loss", p.train_loss}, {"heldout_loss", p.heldout_loss}});
  }
  return j;
}

namespace {

OrderedJson run_json(const TrainingResult& r) {
  OrderedJson j = OrderedJson::object();
  j["steps_run"] = r.steps_run;
  j["best_step"] = r.best_step;
  j["warnings"] = r.warnings;
  j["curve"] = curve_to_json(r.curve);
  return j;
}

}  // namespace

OrderedJson forgetting_report_to_json(const ForgettingReport& report) {
  OrderedJson j = OrderedJson::object();
  j["base_old_error"] = report.base_old_error;
  j["finetune_old_error"] = report.finetune_old_error;
  j["finetune_new_accuracy"] = report.finetune_new_accuracy;
  j["incremental_old_error"] = report.incremental_old_error;
  j["incremental_new_accuracy"] = report.incremental_new_accuracy;
  j["runs"] = {{"base", run_json(report.base)},
               {"finetune", run_json(report.finetune)},
               {"incremental", run_json(report.incremental)}};
  return j;
}

HeadComparisonConfig::HeadComparisonConfig() {
  arch.input_dim = dim;
  arch.num_classes = num_classes;
  train.learning_rate = 0.01;
  train.max_steps = 3000;
  train.eval_interval = 25;
  train.new_data_rate = 1.0;
  train.margin_blend_start = 1000.0;
  train.margin_blend_decay = 0.12;
  train.margin_blend_min = 1.0;
}

HeadComparisonReport run_head_comparison(const HeadComparisonConfig& cfg) {
  if (cfg.seeds.empty()) throw std::invalid_argument("run_head_comparison: no seeds");
  if (cfg.arch.input_dim != cfg.dim || cfg.arch.num_classes != cfg.num_classes) {
    throw std::invalid_argument("HeadComparisonConfig: architecture does not match the task shape");
  }
  HeadComparisonReport report;
  for (std::uint64_t seed : cfg.seeds) {
    Rng rng(seed);
    Rng task_rng = rng.fork(1);
    Rng data_rng = rng.fork(2);
    const AngularTask task = make_angular_task(cfg.num_classes, cfg.dim, cfg.noise,
                                               cfg.radius_lo, cfg.radius_hi, task_rng);
    const auto train = sample_angular(task, cfg.train_per_class, data_rng);
    const auto test = sample_angular(task, cfg.test_per_class, data_rng);

    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(seed, 10);
    for (HeadType head : {HeadType::softmax, HeadType::a_softmax}) {
      Architecture arch = cfg.arch;
      arch.head = head;
      Rng init_rng = rng.fork(3);
      const TrainingResult r =
          train_classifier(GroupedClassifier::initialize(arch, init_rng), train, tc);
      const double err = topk_error(r.model, test, 1);
      (head == HeadType::softmax ? report.softmax_errors : report.asoftmax_errors).push_back(err);
    }
  }
  report.median_softmax = median(report.softmax_errors);
  report.median_asoftmax = median(report.asoftmax_errors);
  return report;
}

OrderedJson head_comparison_to_json(const HeadComparisonReport& report) {
  OrderedJson j = OrderedJson::object();
  j["softmax_errors"] = report.softmax_errors;
  j["asoftmax_errors"] = report.asoftmax_errors;
  j["median_softmax"] = report.median_softmax;
  j["median_asoftmax"] = report.median_asoftmax;
  return j;
}

}  // namespace docingest::incremental
