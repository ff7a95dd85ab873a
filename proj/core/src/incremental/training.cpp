#include "docingest/incremental/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "docingest/evaluation.hpp"
#include "docingest/incremental/losses.hpp"
#include "docingest/rng.hpp"

namespace docingest::incremental {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig.batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("TrainConfig.learning_rate must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("TrainConfig.momentum must lie in [0, 1)");
  }
  if (!(new_data_rate > 0.0 && new_data_rate <= 1.0)) {
    throw std::invalid_argument("TrainConfig.new_data_rate p must lie in (0, 1]");
  }
  if (!(distillation_weight >= 0.0) || !std::isfinite(distillation_weight)) {
    throw std::invalid_argument("TrainConfig.distillation_weight alpha must be >= 0");
  }
  if (!(task_weight >= 0.0) || !std::isfinite(task_weight)) {
    throw std::invalid_argument("TrainConfig.task_weight lambda must be >= 0");
  }
  if (patience < 1) throw std::invalid_argument("TrainConfig.patience must be >= 1");
  if (!(min_improvement >= 0.0) || !std::isfinite(min_improvement)) {
    throw std::invalid_argument("TrainConfig.min_improvement must be >= 0");
  }
  if (eval_interval < 1) throw std::invalid_argument("TrainConfig.eval_interval must be >= 1");
  if (max_steps < 0) throw std::invalid_argument("TrainConfig.max_steps must be >= 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("TrainConfig.holdout_fraction must lie in [0, 1)");
  }
  for (double v : {margin_blend_start, margin_blend_decay, margin_blend_min}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("TrainConfig.margin_blend_* values must be >= 0");
    }
  }
}

double TrainConfig::margin_blend_at(int step) const {
  return std::max(margin_blend_min, margin_blend_start / (1.0 + margin_blend_decay * step));
}

double sample_task_loss(const GroupedClassifier& model, const LabeledSample& sample, Vector* grad,
                        double margin_blend) {
  const ForwardPass pass = model.forward(sample.features);
  std::vector<Vector> d_out(static_cast<std::size_t>(model.num_groups()));
  if (model.head() == HeadType::softmax) {
    const double loss = softmax_loss(pass.logits(), sample.label,
                                     grad != nullptr ? &d_out.back() : nullptr);
    if (grad != nullptr) *grad = model.backward(pass, d_out);
    return loss;
  }
  HeadGradient head;
  const double loss = asoftmax_loss(model.class_directions(), pass.feature(), sample.label,
                                    model.margin(), grad != nullptr ? &head : nullptr,
                                    margin_blend);
  if (grad != nullptr) *grad = model.backward(pass, d_out, &head);
  return loss;
}

double task_loss(const GroupedClassifier& model, std::span<const LabeledSample> batch,
                 Vector* grad, double margin_blend) {
  if (grad != nullptr) *grad = Vector::Zero(static_cast<Eigen::Index>(model.parameter_count()));
  if (batch.empty()) return 0.0;
  double total = 0.0;
  Vector g;
  for (const LabeledSample& s : batch) {
    total += sample_task_loss(model, s, grad != nullptr ? &g : nullptr, margin_blend);
    if (grad != nullptr) *grad += g;
  }
  const double n = static_cast<double>(batch.size());
  if (grad != nullptr) *grad /= n;
  return total / n;
}

double incremental_objective(const GroupedClassifier& frozen, const GroupedClassifier& student,
                             std::span<const LabeledSample> feedback_batch,
                             std::span<const LabeledSample> original_batch, double alpha,
                             double lambda, Vector* grad, double margin_blend) {
  Vector g_task;
  const double l_task =
      task_loss(student, feedback_batch, grad != nullptr ? &g_task : nullptr, margin_blend);
  std::vector<Vector> inputs;
  inputs.reserve(original_batch.size());
  for (const LabeledSample& s : original_batch) inputs.push_back(s.features);
  Vector g_dist;
  const double l_dist =
      distillation_loss(frozen, student, inputs, grad != nullptr ? &g_dist : nullptr);
  if (grad != nullptr) *grad = lambda * g_task + alpha * g_dist;
  return multitask_loss({l_task, 0.0, 1}, lambda) + alpha * l_dist;
}

namespace {

void check_samples(std::span<const LabeledSample> samples, int dim, const char* what) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.size() != dim) {
      throw std::invalid_argument(std::string(what) + " sample " + std::to_string(i) +
                                  " has dimension " + std::to_string(samples[i].features.size()) +
                                  ", model expects " + std::to_string(dim));
    }
    if (samples[i].label < 0) {
      throw std::invalid_argument(std::string(what) + " sample " + std::to_string(i) +
                                  " has a negative label");
    }
  }
}

std::vector<LabeledSample> pick(std::span<const LabeledSample> from,
                                std::span<const std::size_t> idx) {
  std::vector<LabeledSample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(from[i]);
  return out;
}

struct LoopData {
  const GroupedClassifier* frozen = nullptr;
  std::vector<LabeledSample> feedback_train;
  std::vector<LabeledSample> feedback_val;
  std::vector<LabeledSample> original_pool;
  std::vector<LabeledSample> original_val;
  int n_feedback = 0;
  int n_original = 0;
};

// Splits `labeled` into train/validation using cfg.holdout_fraction. With too
// few samples to hold any out, validation falls back to the training set.
void split_holdout(std::span<const LabeledSample> labeled, const TrainConfig& cfg, Rng& rng,
                   LoopData& data, std::vector<std::string>& warnings) {
  std::vector<std::size_t> idx(labeled.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  const auto n_val = static_cast<std::size_t>(
      std::floor(cfg.holdout_fraction * static_cast<double>(labeled.size())));
  if (n_val == 0 || n_val >= labeled.size()) {
    data.feedback_train = pick(labeled, idx);
    data.feedback_val = data.feedback_train;
    if (cfg.holdout_fraction > 0.0) {
      warnings.emplace_back("too few labeled samples to hold out; early stopping uses the "
                            "training set");
    }
    return;
  }
  const std::span<const std::size_t> all(idx);
  data.feedback_val = pick(labeled, all.first(n_val));
  data.feedback_train = pick(labeled, all.subspan(n_val));
}

TrainingResult run_loop(GroupedClassifier student, LoopData& data, const TrainConfig& cfg,
                        Rng& rng, std::vector<std::string> warnings) {
  const double alpha = cfg.distillation_weight;
  const double lambda = cfg.task_weight;
  const auto objective = [&](const GroupedClassifier& m, std::span<const LabeledSample> f,
                             std::span<const LabeledSample> o, Vector* grad, double blend) {
    if (data.frozen == nullptr) {
      const double l = task_loss(m, f, grad, blend);
      if (grad != nullptr) *grad *= lambda;
      return multitask_loss({l, 0.0, 1}, lambda);
    }
    return incremental_objective(*data.frozen, m, f, o, alpha, lambda, grad, blend);
  };
  const auto heldout = [&](const GroupedClassifier& m) {
    return objective(m, data.feedback_val, data.original_val, nullptr, cfg.margin_blend_min);
  };

  Vector params = student.parameters();
  Vector velocity = Vector::Zero(params.size());
  Vector best_params = params;
  double best_loss = heldout(student);
  int best_step = 0;
  int since_best = 0;
  int step = 0;
  double interval_loss = 0.0;
  std::vector<CurvePoint> curve;

  std::vector<LabeledSample> batch_f(static_cast<std::size_t>(data.n_feedback));
  std::vector<LabeledSample> batch_o(static_cast<std::size_t>(data.n_original));
  Vector grad;
  while (step < cfg.max_steps) {
    for (LabeledSample& s : batch_f) {
      s = data.feedback_train[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(data.feedback_train.size()) - 1))];
    }
    for (LabeledSample& s : batch_o) {
      s = data.original_pool[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(data.original_pool.size()) - 1))];
    }
    const double loss = objective(student, batch_f, batch_o, &grad, cfg.margin_blend_at(step));
    if (!std::isfinite(loss) || !grad.allFinite()) {
      warnings.push_back("training diverged at step " + std::to_string(step + 1) +
                         "; keeping the best earlier parameters");
      break;
    }
    interval_loss += loss;
    velocity = cfg.momentum * velocity - cfg.learning_rate * grad;
    params += velocity;
    student.set_parameters(params);
    student.renormalize_head();
    params = student.parameters();
    ++step;

    if (step % cfg.eval_interval != 0) continue;
    const double h = heldout(student);
    curve.push_back({step, interval_loss / cfg.eval_interval, h});
    interval_loss = 0.0;
    if (h < best_loss - cfg.min_improvement) {
      best_loss = h;
      best_params = params;
      best_step = step;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  student.set_parameters(best_params);
  return TrainingResult{std::move(student), std::move(curve), step, best_step,
                        std::move(warnings)};
}

}  // namespace

TrainingResult train_classifier(GroupedClassifier model, std::span<const LabeledSample> data,
                                const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train_classifier: training set is empty");
  check_samples(data, model.input_dim(), "training");
  for (const LabeledSample& s : data) {
    if (s.label >= model.num_classes()) {
      throw std::invalid_argument("train_classifier: label " + std::to_string(s.label) +
                                  " exceeds the model's class count");
    }
  }
  Rng rng(cfg.seed);
  std::vector<std::string> warnings;
  LoopData loop;
  split_holdout(data, cfg, rng, loop, warnings);
  loop.n_feedback = cfg.batch_size;
  return run_loop(std::move(model), loop, cfg, rng, std::move(warnings));
}

TrainingResult incremental_train(const GroupedClassifier& frozen,
                                 std::span<const LabeledSample> original,
                                 std::span<const LabeledSample> feedback, const TrainConfig& cfg) {
  cfg.validate();
  if (feedback.empty()) throw std::invalid_argument("incremental_train: feedback set D_f is empty");
  check_samples(feedback, frozen.input_dim(), "feedback");
  check_samples(original, frozen.input_dim(), "original");

  GroupedClassifier student = frozen;
  int max_label = 0;
  for (const LabeledSample& s : feedback) max_label = std::max(max_label, s.label);
  if (max_label >= student.num_classes()) {
    student = student.expand_output_layer(max_label + 1 - student.num_classes());
  }

  Rng rng(cfg.seed);
  std::vector<std::string> warnings;
  LoopData loop;
  loop.frozen = &frozen;
  split_holdout(feedback, cfg, rng, loop, warnings);

  const double p = cfg.new_data_rate;
  loop.n_feedback = std::clamp(static_cast<int>(std::lround(cfg.batch_size * p)), 1,
                               cfg.batch_size);
  loop.n_original = cfg.batch_size - loop.n_feedback;
  if (loop.n_original == 0 && cfg.distillation_weight > 0.0) {
    warnings.emplace_back("distillation term is 0: new_data_rate p leaves no original samples "
                          "in a batch");
  }
  if (loop.n_original > 0) {
    if (original.empty()) {
      throw std::invalid_argument("incremental_train: original set D is empty but p < 1");
    }
    std::vector<std::size_t> idx(original.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx);
    if (cfg.replay_cap > 0 && idx.size() > cfg.replay_cap) idx.resize(cfg.replay_cap);
    loop.original_pool = pick(original, idx);
    // Distillation is monitored on a fixed sample of the replay pool.
    const std::size_t n_val = std::min<std::size_t>(loop.original_pool.size(), 256);
    loop.original_val.assign(loop.original_pool.begin(),
                             loop.original_pool.begin() + static_cast<std::ptrdiff_t>(n_val));
  }
  return run_loop(std::move(student), loop, cfg, rng, std::move(warnings));
}

TrainingResult fine_tune(const GroupedClassifier& frozen, std::span<const LabeledSample> feedback,
                         TrainConfig cfg) {
  cfg.distillation_weight = 0.0;
  cfg.new_data_rate = 1.0;
  return incremental_train(frozen, {}, feedback, cfg);
}

double topk_error(const GroupedClassifier& model, std::span<const LabeledSample> samples,
                  std::size_t k, int label_lo, int label_hi) {
  std::vector<std::vector<int>> ranked;
  std::vector<int> truths;
  for (const LabeledSample& s : samples) {
    if (s.label < label_lo || (label_hi >= 0 && s.label >= label_hi)) continue;
    ranked.push_back(model.ranked_classes(s.features));
    truths.push_back(s.label);
  }
  if (ranked.empty()) throw std::invalid_argument("topk_error: no samples in the label range");
  return eval::topk_error(ranked, truths, k);
}

}  // namespace docingest::incremental
