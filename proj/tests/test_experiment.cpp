#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "sagnn/dataset.hpp"
#include "sagnn/error.hpp"
#include "sagnn/experiment.hpp"
#include "sagnn/synth.hpp"
#include "test_support.hpp"

using namespace sagnn;
using namespace testing_support;

namespace {

Dataset synth_data(std::size_t users, double separation, double rho, std::uint64_t seed, double noise = 1.0) {
  SynthConfig sc;
  sc.num_users = users;
  sc.epsilon = 0.0;
  sc.class_separation = separation;
  sc.noise_sigma = noise;
  sc.low_signal_fraction = rho;
  sc.feature_dim = 8;
  sc.seed = seed;
  return make_dataset(generate(sc));
}

ExperimentConfig quick_config(ModelKind kind) {
  ExperimentConfig cfg;
  cfg.model = kind;
  cfg.sagnn.num_layers = cfg.baseline.num_layers = 2;
  cfg.sagnn.hidden_dim = cfg.baseline.hidden_dim = 16;
  cfg.train.epochs = 3;
  cfg.train.batch_size = 64;
  cfg.train.optimizer.learning_rate = 1e-2;
  return cfg;
}

std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST(ExperimentConfig, JsonRoundTrip) {
  ExperimentConfig cfg;
  cfg.model = ModelKind::SaGnnNoEdgeType;
  cfg.sagnn.aggregator = Aggregator::Max;
  cfg.sagnn.num_layers = 4;
  cfg.sagnn.hidden_dim = 24;
  cfg.sagnn.walk.num_walks = 77;
  cfg.sagnn.walk.top_k = 6;
  cfg.train.epochs = 9;
  cfg.train.optimizer.learning_rate = 0.0025;
  cfg.train.seed = 123;
  cfg.train.threshold = 0.4;
  cfg.degree_edges = {3, 9, 30};
  cfg.buckets = {BucketKind::SecondOrderDegree};
  const auto j = to_json(cfg);
  ExperimentConfig back;
  apply_json(back, nlohmann::json::parse(j.dump()));
  EXPECT_EQ(to_json(back), j);

  TempDir dir;
  std::ofstream(dir / "cfg.json") << j.dump(2);
  EXPECT_EQ(to_json(load_experiment_config(dir / "cfg.json")), j);
}

TEST(ExperimentConfig, PartialDocumentsKeepOtherValues) {
  ExperimentConfig cfg;
  cfg.train.epochs = 11;
  apply_json(cfg, nlohmann::json::parse(R"({"lr": 0.5})"));
  EXPECT_EQ(cfg.train.optimizer.learning_rate, 0.5);
  EXPECT_EQ(cfg.train.epochs, 11u);
}

TEST(ExperimentConfig, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig cfg;
  EXPECT_THROW(apply_json(cfg, nlohmann::json::parse(R"({"learning_rate": 0.1})")), ValidationError);
  EXPECT_THROW(apply_json(cfg, nlohmann::json::parse(R"({"epochs": "many"})")), ValidationError);
  EXPECT_THROW(apply_json(cfg, nlohmann::json::parse(R"({"model": "transformer"})")), ValidationError);
  EXPECT_THROW(apply_json(cfg, nlohmann::json::parse(R"([1, 2])")), ValidationError);
  TempDir dir;
  std::ofstream(dir / "broken.json") << "{ \"lr\": ";
  EXPECT_THROW(load_experiment_config(dir / "broken.json"), ValidationError);
}

TEST(RunTrials, EmitsOneReportPerSeedAndRecomputableAggregate) {
  const auto data = synth_data(400, 1.0, 0.3, 5);
  auto cfg = quick_config(ModelKind::ContentOnly);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  auto summary = run_trials(data, cfg, seeds);
  ASSERT_EQ(summary.reports.size(), 5u);
  EXPECT_EQ(summary.seeds, seeds);

  // Recompute from the emitted JSON, two-pass.
  const auto j = nlohmann::json::parse(to_json(summary).dump());
  ASSERT_EQ(j["reports"].size(), 5u);
  for (const char* metric : {"accuracy", "f1", "auc"}) {
    std::vector<double> v;
    for (const auto& r : j["reports"]) v.push_back(r["test"][metric].get<double>());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= 5.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    EXPECT_NEAR(j["aggregate"][metric]["mean"].get<double>(), mean, 1e-12) << metric;
    EXPECT_NEAR(j["aggregate"][metric]["std"].get<double>(), std::sqrt(ss / 4.0), 1e-12) << metric;
  }
  for (const auto& r : summary.reports) EXPECT_EQ(r.test.n, make_split(data, cfg, r.seed).test.size());
}

TEST(RunTrials, DuplicateSeedAddsNoVariance) {
  const auto data = synth_data(200, 2.0, 0.0, 6);
  auto cfg = quick_config(ModelKind::SaGnn);
  cfg.train.epochs = 1;
  const std::vector<std::uint64_t> seeds{7, 7};
  auto summary = run_trials(data, cfg, seeds);
  ASSERT_EQ(summary.reports.size(), 2u);
  EXPECT_EQ(to_json(summary.reports[0]).dump(), to_json(summary.reports[1]).dump());
  EXPECT_EQ(summary.test.accuracy.std, 0.0);
  EXPECT_EQ(summary.test.f1.std, 0.0);
}

TEST(RunTrials, ConcurrencyDoesNotChangeReports) {
  const auto data = synth_data(200, 2.0, 0.0, 7);
  auto cfg = quick_config(ModelKind::SaGnn);
  cfg.train.epochs = 1;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  auto serial = run_trials(data, cfg, seeds, 1);
  auto parallel = run_trials(data, cfg, seeds, 3);
  EXPECT_EQ(to_json(serial).dump(), to_json(parallel).dump());
}

TEST(RunTrials, FailureKeepsPartialResults) {
  auto data = synth_data(200, 2.0, 0.0, 8);
  data.features(0, 0) = std::nan("");
  auto cfg = quick_config(ModelKind::ContentOnly);
  const std::vector<std::uint64_t> seeds{1, 2};
  bool called = false;
  EXPECT_THROW(run_trials(data, cfg, seeds, 1, [&](const TrialSummary& s) {
                 called = true;
                 EXPECT_LT(s.reports.size(), 2u);
               }),
               ValidationError);
  EXPECT_TRUE(called);
  EXPECT_THROW(run_trials(data, cfg, std::vector<std::uint64_t>{}), ValidationError);
}

TEST(RunTrials, PerfectlySeparatedDataScoresOne) {
  const auto data = synth_data(300, 10.0, 0.0, 9, 0.5);
  for (auto kind : {ModelKind::ContentOnly, ModelKind::SaGnn}) {
    auto cfg = quick_config(kind);
    cfg.train.epochs = 20;
    auto summary = run_trials(data, cfg, std::vector<std::uint64_t>{1, 2});
    EXPECT_EQ(summary.test.accuracy.mean, 1.0) << to_string(kind);
    EXPECT_EQ(summary.test.f1.mean, 1.0) << to_string(kind);
    EXPECT_EQ(summary.test.auc->mean, 1.0) << to_string(kind);
  }
}

TEST(RunTrials, ShuffledLabelsScoreChance) {
  auto data = synth_data(2000, 2.0, 0.0, 10);
  std::mt19937_64 rng(10);
  std::shuffle(data.labels.begin(), data.labels.end(), rng);
  auto cfg = quick_config(ModelKind::ContentOnly);
  auto summary = run_trials(data, cfg, std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  EXPECT_NEAR(summary.test.accuracy.mean, 0.5, 0.05);
  EXPECT_NEAR(summary.test.f1.mean, 0.5, 0.05);
  EXPECT_NEAR(summary.test.auc->mean, 0.5, 0.05);
}

TEST(Buckets, LowSignalBucketSizesTrackRho) {
  const auto data = synth_data(2000, 1.0, 0.3, 11);
  ExperimentConfig cfg;
  std::vector<std::uint32_t> all(data.labels.size());
  std::iota(all.begin(), all.end(), 0u);
  std::vector<double> probs(all.size(), 0.7);
  auto groups = evaluate_buckets(data, all, probs, cfg);
  ASSERT_EQ(groups.size(), 3u);
  const double n = static_cast<double>(all.size());
  for (const auto& g : groups) {
    std::size_t total = 0;
    for (const auto& b : g.buckets) total += b.size;
    EXPECT_EQ(total, all.size());
  }
  ASSERT_EQ(groups[0].kind, BucketKind::FeatureSignal);
  EXPECT_EQ(groups[0].buckets[1].label, "low_signal");
  EXPECT_NEAR(groups[0].buckets[1].size / n, 0.3, 4.0 * std::sqrt(0.21 / n));
  ASSERT_EQ(groups[2].kind, BucketKind::SecondOrderDegree);
  EXPECT_EQ(groups[2].buckets[0].label, "0-5");
  EXPECT_FALSE(groups[2].buckets[0].note.empty());

  auto no_flags = data;
  no_flags.low_signal.reset();
  EXPECT_EQ(evaluate_buckets(no_flags, all, probs, cfg).size(), 2u);
}

TEST(ExportLogits, PerfectClassifierWritesNothing) {
  const auto data = synth_data(300, 10.0, 0.0, 12, 0.5);
  auto cfg = quick_config(ModelKind::ContentOnly);
  cfg.train.epochs = 20;
  auto run = run_trial(data, cfg, 1);
  ASSERT_EQ(run.report.test.accuracy, 1.0);
  auto pred = predict(*run.model, run.split.test, 1);
  TempDir dir;
  EXPECT_EQ(export_misclassified_logits(data.graph, pred, data.labels, 0.5, dir / "l.tsv"), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "l.tsv"));
  EXPECT_EQ(std::filesystem::file_size(dir / "l.tsv"), 0u);
}

TEST(ExportLogits, RowsAreExactlyTheMistakes) {
  const auto data = synth_data(1000, 1.0, 0.5, 13);
  auto cfg = quick_config(ModelKind::ContentOnly);
  auto run = run_trial(data, cfg, 2);
  auto pred = predict(*run.model, run.split.test, 2, cfg.train.batch_size);
  TempDir dir;
  const auto rows = export_misclassified_logits(data.graph, pred, data.labels, 0.5, dir / "l.tsv");
  const auto n = static_cast<double>(run.report.test.n);
  EXPECT_EQ(rows, static_cast<std::size_t>(std::llround((1.0 - run.report.test.accuracy) * n)));
  EXPECT_GT(rows, 0u);
  auto table = read_tsv(dir / "l.tsv");
  ASSERT_EQ(table.size(), rows);
  for (const auto& r : table) {
    ASSERT_EQ(r.size(), 3u);
    const double logit = std::stod(r[1]);
    const int label = std::stoi(r[2]);
    EXPECT_EQ(data.labels[*data.graph.find_tweet(r[0])], label);
    const double p = 1.0 / (1.0 + std::exp(-logit));
    // Wrong side of the threshold for the true label.
    if (label == 1) {
      EXPECT_LT(p, 0.5);
    } else {
      EXPECT_GE(p, 0.5);
    }
  }
}

TEST(ExportEmbeddings, FullFractionUnitNormsAndStratification) {
  const auto data = synth_data(400, 1.0, 0.0, 14);
  auto cfg = quick_config(ModelKind::SaGnn);
  cfg.train.epochs = 1;
  auto run = run_trial(data, cfg, 3);
  auto pred = predict(*run.model, run.split.test, 3);
  TempDir dir;
  const auto rows = export_embeddings(data.graph, pred, data.labels, 1.0, 3, dir / "e.tsv");
  ASSERT_EQ(rows, run.split.test.size());
  auto table = read_tsv(dir / "e.tsv");
  std::set<std::string> ids;
  for (const auto& r : table) {
    ids.insert(r[0]);
    ASSERT_EQ(r.size(), 2 + cfg.sagnn.hidden_dim);
    double sq = 0.0;
    for (std::size_t k = 2; k < r.size(); ++k) sq += std::stod(r[k]) * std::stod(r[k]);
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-6);
  }
  EXPECT_EQ(ids.size(), run.split.test.size());

  for (double fraction : {0.01, 0.1, 0.37}) {
    const auto count = export_embeddings(data.graph, pred, data.labels, fraction, 4, dir / "s.tsv");
    auto sample = read_tsv(dir / "s.tsv");
    ASSERT_EQ(sample.size(), count);
    std::map<int, double> population, picked;
    for (auto t : run.split.test) population[data.labels[t]] += 1.0;
    for (const auto& r : sample) picked[std::stoi(r[1])] += 1.0;
    for (const auto& [c, size] : population) EXPECT_LE(std::abs(picked[c] - size * fraction), 1.0) << fraction;
  }
  EXPECT_THROW(export_embeddings(data.graph, pred, data.labels, 0.0, 1, dir / "x.tsv"), ValidationError);
  EXPECT_THROW(export_embeddings(data.graph, pred, data.labels, 1.5, 1, dir / "x.tsv"), ValidationError);
}
