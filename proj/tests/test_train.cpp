#include <gtest/gtest.h>

#include <cmath>

#include "sagnn/dataset.hpp"
#include "sagnn/error.hpp"
#include "sagnn/experiment.hpp"
#include "sagnn/synth.hpp"
#include "sagnn/train.hpp"
#include "test_support.hpp"

using namespace sagnn;
using namespace testing_support;

namespace {

Dataset separable_data() {
  SynthConfig sc;
  sc.num_users = 200;
  sc.epsilon = 0.0;
  sc.class_separation = 10.0;
  sc.noise_sigma = 1.0;
  sc.feature_dim = 8;
  sc.seed = 21;
  return make_dataset(generate(sc));
}

ExperimentConfig small_config(ModelKind kind) {
  ExperimentConfig cfg;
  cfg.model = kind;
  cfg.sagnn.num_layers = cfg.baseline.num_layers = 2;
  cfg.sagnn.hidden_dim = cfg.baseline.hidden_dim = 16;
  cfg.train.batch_size = 32;
  cfg.train.optimizer.learning_rate = 1e-2;
  return cfg;
}

double accuracy_on(const Model& model, const Dataset& data, std::span<const std::uint32_t> tweets) {
  auto pred = predict(model, tweets, 0);
  std::vector<int> truth;
  for (auto t : tweets) truth.push_back(data.labels[t]);
  return evaluate_predictions(pred.probabilities, truth).accuracy;
}

}  // namespace

TEST(Train, AllModelKindsFitSeparableData) {
  const auto data = separable_data();
  for (auto kind : {ModelKind::SaGnn, ModelKind::SaGnnNoEdgeType, ModelKind::Baseline, ModelKind::ContentOnly}) {
    auto cfg = small_config(kind);
    auto split = make_split(data, cfg, 1);
    auto model = make_model(data, cfg, 1);
    train(*model, data.labels, split, cfg.train);
    EXPECT_GE(accuracy_on(*model, data, split.train), 0.99) << to_string(kind);
  }
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  const auto data = separable_data();
  for (auto kind : {ModelKind::SaGnn, ModelKind::ContentOnly}) {
    auto cfg = small_config(kind);
    cfg.train.optimizer.learning_rate = 0.0;
    cfg.train.epochs = 2;
    auto split = make_split(data, cfg, 2);
    auto model = make_model(data, cfg, 2);
    const auto before = model->params().snapshot();
    auto result = train(*model, data.labels, split, cfg.train);
    EXPECT_EQ(model->params().snapshot(), before);
    for (const auto& h : result.history) EXPECT_EQ(h.lr, 0.0);
  }
}

TEST(Train, ZeroLearningRateGivesFlatFullBatchLoss) {
  const auto data = separable_data();
  auto cfg = small_config(ModelKind::ContentOnly);
  cfg.train.optimizer.learning_rate = 0.0;
  cfg.train.epochs = 4;
  cfg.train.batch_size = 100000;
  auto split = make_split(data, cfg, 3);
  auto model = make_model(data, cfg, 3);
  auto result = train(*model, data.labels, split, cfg.train);
  ASSERT_EQ(result.history.size(), 4u);
  // Each epoch reshuffles the rows, so only summation order differs.
  for (const auto& h : result.history) EXPECT_NEAR(h.train_loss, result.history.front().train_loss, 1e-12);
}

TEST(Train, SameSeedSameHistory) {
  const auto data = separable_data();
  auto cfg = small_config(ModelKind::SaGnn);
  cfg.train.epochs = 2;
  cfg.train.eval_every = 5;
  auto run = [&] {
    auto split = make_split(data, cfg, 4);
    auto model = make_model(data, cfg, 4);
    auto r = train(*model, data.labels, split, cfg.train);
    return std::make_pair(r.history, model->params().snapshot());
  };
  auto a = run();
  auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_GT(a.first.size(), 2u);
}

TEST(Train, KeepsBestValidationCheckpoint) {
  const auto data = separable_data();
  auto cfg = small_config(ModelKind::Baseline);
  cfg.train.epochs = 3;
  cfg.train.eval_every = 3;
  auto split = make_split(data, cfg, 5);
  auto model = make_model(data, cfg, 5);
  auto result = train(*model, data.labels, split, cfg.train);
  double best = -1.0;
  for (const auto& h : result.history) best = std::max(best, h.val_accuracy);
  EXPECT_EQ(result.best_val_accuracy, best);
  auto pred = predict(*model, split.val, cfg.train.seed, cfg.train.batch_size);
  std::vector<int> truth;
  for (auto t : split.val) truth.push_back(data.labels[t]);
  EXPECT_EQ(evaluate_predictions(pred.probabilities, truth).accuracy, best);
}

TEST(Train, RejectsEmptySplitsAndBadConfig) {
  const auto data = separable_data();
  auto cfg = small_config(ModelKind::ContentOnly);
  auto model = make_model(data, cfg, 0);
  Split empty;
  EXPECT_THROW(train(*model, data.labels, empty, cfg.train), ValidationError);
  auto split = make_split(data, cfg, 0);
  auto bad = cfg.train;
  bad.epochs = 0;
  EXPECT_THROW(train(*model, data.labels, split, bad), ValidationError);
}

TEST(Train, NonFiniteStateAbortsWithDiagnostics) {
  const auto data = separable_data();
  auto cfg = small_config(ModelKind::ContentOnly);
  auto split = make_split(data, cfg, 0);
  auto model = make_model(data, cfg, 0);
  model->params().all()[0]->value(0, 0) = std::nan("");
  try {
    train(*model, data.labels, split, cfg.train);
    FAIL() << "expected a runtime failure";
  } catch (const RuntimeFailure& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
}

TEST(Predict, RowsFollowRequestOrderAndBatchSizeDoesNotMatter) {
  const auto data = separable_data();
  auto cfg = small_config(ModelKind::ContentOnly);
  auto model = make_model(data, cfg, 0);
  std::vector<std::uint32_t> tweets{9, 3, 27, 1, 14};
  auto a = predict(*model, tweets, 1, 2);
  auto b = predict(*model, tweets, 1, 512);
  EXPECT_EQ(a.tweets, tweets);
  // Batch shape changes the BLAS blocking, hence rounding, but nothing else.
  for (std::size_t i = 0; i < tweets.size(); ++i) EXPECT_NEAR(a.probabilities[i], b.probabilities[i], 1e-12);
  std::vector<std::uint32_t> one{27};
  EXPECT_NEAR(predict(*model, one, 1).probabilities[0], a.probabilities[2], 1e-12);
}

TEST(Predict, RepeatedCallsAgree) {
  const auto data = separable_data();
  auto cfg = small_config(ModelKind::SaGnn);
  auto model = make_model(data, cfg, 0);
  std::vector<std::uint32_t> tweets{0, 1, 2, 3, 4, 5, 6};
  EXPECT_EQ(predict(*model, tweets, 3).probabilities, predict(*model, tweets, 3).probabilities);
}

TEST(History, JsonlHasOneRecordPerEvaluation) {
  std::vector<HistoryRecord> h(3);
  h[1].val_auc = 0.75;
  TempDir dir;
  write_history_jsonl(h, dir / "h.jsonl");
  std::ifstream in(dir / "h.jsonl");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_NE(lines[0].find("\"val_auc\":null"), std::string::npos);
  EXPECT_NE(lines[1].find("\"val_auc\":0.75"), std::string::npos);
}
