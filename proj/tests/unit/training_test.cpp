#include <gtest/gtest.h>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "docingest/errors.hpp"
#include "docingest/incremental/classifier.hpp"
#include "docingest/incremental/experiment.hpp"
#include "docingest/incremental/snapshot.hpp"
#include "docingest/incremental/training.hpp"
#include "docingest/json_io.hpp"
#include "docingest/rng.hpp"

namespace docingest::incremental {
namespace {

struct Fixture {
  GroupedClassifier model;
  std::vector<LabeledSample> old_data;
  std::vector<LabeledSample> new_data;
};

Fixture make_fixture(HeadType head = HeadType::softmax) {
  Rng rng(21);
  const ClusterTask task = make_cluster_task(4, 6, 2.0, 0.3, rng);
  Architecture arch;
  arch.input_dim = 6;
  arch.hidden_widths = {12, 8};
  arch.num_classes = 3;
  arch.head = head;
  arch.margin = 2;
  return {GroupedClassifier::initialize(arch, rng), sample_clusters(task, 0, 3, 40, rng),
          sample_clusters(task, 3, 4, 30, rng)};
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.max_steps = 200;
  cfg.eval_interval = 20;
  cfg.seed = 4;
  return cfg;
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.new_data_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.distillation_weight = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.task_weight = -0.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.margin_blend_min = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(TrainConfig, MarginBlendSchedule) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.margin_blend_at(0), 0.0);
  cfg.margin_blend_start = 100.0;
  cfg.margin_blend_decay = 0.5;
  cfg.margin_blend_min = 2.0;
  EXPECT_DOUBLE_EQ(cfg.margin_blend_at(0), 100.0);
  EXPECT_DOUBLE_EQ(cfg.margin_blend_at(2), 50.0);
  EXPECT_DOUBLE_EQ(cfg.margin_blend_at(1000), 2.0);
}

TEST(Training, LearnsSeparableClusters) {
  Fixture f = make_fixture();
  const double before = topk_error(f.model, f.old_data);
  const auto result = train_classifier(f.model, f.old_data, quick_config());
  EXPECT_LT(topk_error(result.model, f.old_data), before);
  EXPECT_LT(topk_error(result.model, f.old_data), 0.1);
  EXPECT_FALSE(result.curve.empty());
}

TEST(Training, SameSeedSameParameters) {
  Fixture f = make_fixture();
  const auto a = train_classifier(f.model, f.old_data, quick_config());
  const auto b = train_classifier(f.model, f.old_data, quick_config());
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
  const auto c = incremental_train(a.model, f.old_data, f.new_data, quick_config());
  const auto d = incremental_train(a.model, f.old_data, f.new_data, quick_config());
  EXPECT_EQ(c.model.parameters(), d.model.parameters());
}

TEST(Training, EmptyDataRejected) {
  Fixture f = make_fixture();
  EXPECT_THROW(train_classifier(f.model, {}, quick_config()), std::invalid_argument);
  EXPECT_THROW(incremental_train(f.model, f.old_data, {}, quick_config()), std::invalid_argument);
  std::vector<LabeledSample> bad{{Vector::Ones(3), 0}};
  EXPECT_THROW(train_classifier(f.model, bad, quick_config()), std::invalid_argument);
}

TEST(IncrementalTrain, ZeroStepsReturnsCopy) {
  Fixture f = make_fixture();
  TrainConfig cfg = quick_config();
  cfg.max_steps = 0;
  std::vector<LabeledSample> known(f.old_data.begin(), f.old_data.begin() + 10);
  const auto r = incremental_train(f.model, f.old_data, known, cfg);
  EXPECT_EQ(r.steps_run, 0);
  EXPECT_EQ(r.model.parameters(), f.model.parameters());
}

TEST(IncrementalTrain, NoDistillationFullFeedbackEqualsPlainTraining) {
  Fixture f = make_fixture();
  TrainConfig cfg = quick_config();
  cfg.distillation_weight = 0.0;
  cfg.new_data_rate = 1.0;
  const auto incr = incremental_train(f.model, f.old_data, f.old_data, cfg);
  const auto plain = train_classifier(f.model, f.old_data, cfg);
  EXPECT_EQ(incr.model.parameters(), plain.model.parameters());
  EXPECT_EQ(incr.steps_run, plain.steps_run);
  const auto tuned = fine_tune(f.model, f.old_data, quick_config());
  EXPECT_EQ(tuned.model.parameters(), plain.model.parameters());
}

TEST(IncrementalTrain, FullFeedbackRateWarnsThatDistillationVanishes) {
  Fixture f = make_fixture();
  TrainConfig cfg = quick_config();
  cfg.new_data_rate = 1.0;
  cfg.max_steps = 5;
  const auto r = incremental_train(f.model, f.old_data, f.new_data, cfg);
  const bool warned = std::any_of(r.warnings.begin(), r.warnings.end(), [](const std::string& w) {
    return w.find("distillation") != std::string::npos;
  });
  EXPECT_TRUE(warned);
}

TEST(IncrementalTrain, NewClassExpandsHeadAndLeavesFrozenAlone) {
  Fixture f = make_fixture();
  const auto base = train_classifier(f.model, f.old_data, quick_config());
  const Vector frozen_params = base.model.parameters();
  TrainConfig cfg = quick_config();
  cfg.new_data_rate = 0.25;
  const auto r = incremental_train(base.model, f.old_data, f.new_data, cfg);
  EXPECT_EQ(r.model.num_classes(), 4);
  EXPECT_EQ(base.model.parameters(), frozen_params);
  EXPECT_LT(topk_error(r.model, f.new_data), 0.5);
}

TEST(IncrementalTrain, OriginalSetRequiredWhenPBelowOne) {
  Fixture f = make_fixture();
  TrainConfig cfg = quick_config();
  cfg.new_data_rate = 0.5;
  EXPECT_THROW(incremental_train(f.model, {}, f.new_data, cfg), std::invalid_argument);
}

TEST(TopkErrorOnModel, RangeSelection) {
  Fixture f = make_fixture();
  EXPECT_THROW(topk_error(f.model, f.old_data, 1, 10, 11), std::invalid_argument);
  EXPECT_DOUBLE_EQ(topk_error(f.model, f.old_data, 3), 0.0);
}

TEST(Snapshot, RoundTripIsBitExact) {
  for (HeadType head : {HeadType::softmax, HeadType::a_softmax}) {
    Fixture f = make_fixture(head);
    const std::string text = dump_json(model_to_json(f.model));
    const GroupedClassifier back = model_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back.parameters(), f.model.parameters());
    EXPECT_EQ(back.head(), head);
    EXPECT_EQ(back.margin(), f.model.margin());
    EXPECT_EQ(dump_json(model_to_json(back)), text);
  }
}

TEST(Snapshot, RejectsMalformedModels) {
  EXPECT_THROW(model_from_json(nlohmann::json::parse(R"({"format_version": 1})")),
               ValidationError);
  auto j = nlohmann::json::parse(dump_json(model_to_json(make_fixture().model)));
  j["groups"][0]["weight"].erase(0);
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = nlohmann::json::parse(dump_json(model_to_json(make_fixture().model)));
  j["format_version"] = 99;
  EXPECT_THROW(model_from_json(j), ValidationError);
}

TEST(Experiments, TaskSamplersAreSeeded) {
  Rng a(3);
  Rng b(3);
  const auto ta = make_angular_task(5, 4, 0.3, 0.5, 2.0, a);
  const auto tb = make_angular_task(5, 4, 0.3, 0.5, 2.0, b);
  const auto sa = sample_angular(ta, 3, a);
  const auto sb = sample_angular(tb, 3, b);
  ASSERT_EQ(sa.size(), 15u);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(sa[i].features, sb[i].features);
    EXPECT_EQ(sa[i].label, sb[i].label);
    const double r = sa[i].features.norm();
    EXPECT_GE(r, 0.5 - 1e-12);
    EXPECT_LE(r, 2.0 + 1e-12);
  }
}

}  // namespace
}  // namespace docingest::incremental
