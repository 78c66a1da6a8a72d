#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sagnn/dataset.hpp"
#include "sagnn/metrics.hpp"
#include "sagnn/model.hpp"
#include "sagnn/train.hpp"

namespace sagnn {

enum class BucketKind : std::uint8_t { FeatureSignal, FirstOrderDegree, SecondOrderDegree };

std::string_view to_string(BucketKind kind);
BucketKind parse_bucket_kind(std::string_view text);

// Everything one training run needs besides the data. The JSON form uses the
// CLI flag names (model, agg, layers, dim, epochs, lr, seed, ...).
struct ExperimentConfig {
  ModelKind model = ModelKind::SaGnn;
  SAGNNConfig sagnn;
  BaselineConfig baseline;
  TrainConfig train;
  SplitFractions split;
  std::vector<std::size_t> degree_edges{5, 20};
  std::vector<BucketKind> buckets{BucketKind::FeatureSignal, BucketKind::FirstOrderDegree,
                                  BucketKind::SecondOrderDegree};

  void validate() const;
};

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
// Keys absent from `j` keep the values already in `cfg`; unknown keys are an
// error.
void apply_json(ExperimentConfig& cfg, const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Split and model for one seed. The split, initialization, shuffling and
// sampling streams all derive from `seed`.
Split make_split(const Dataset& data, const ExperimentConfig& cfg, std::uint64_t seed);
std::unique_ptr<Model> make_model(const Dataset& data, const ExperimentConfig& cfg, std::uint64_t seed);

struct BucketGroup {
  BucketKind kind;
  std::vector<Bucket> buckets;
};

struct TrialReport {
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::SaGnn;
  std::uint64_t best_step = 0;
  double best_val_accuracy = 0.0;
  MetricsReport test;
  std::vector<BucketGroup> buckets;
  std::vector<HistoryRecord> history;
};

std::vector<BucketGroup> evaluate_buckets(const Dataset& data, std::span<const std::uint32_t> tweets,
                                          std::span<const double> probabilities, const ExperimentConfig& cfg);

struct TrialRun {
  TrialReport report;
  std::unique_ptr<Model> model;
  Split split;
};

TrialRun run_trial(const Dataset& data, const ExperimentConfig& cfg, std::uint64_t seed);

struct MetricSummary {
  MeanStd accuracy;
  MeanStd f1;
  std::optional<MeanStd> auc;  // over the seeds where AUC is defined
};

struct TrialSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<TrialReport> reports;
  MetricSummary test;
};

MetricSummary summarize(std::span<const TrialReport> reports);

// Runs one trial per seed, up to `jobs` at a time. If a trial fails, the
// reports of the trials that finished are passed to `on_partial` before the
// error propagates.
TrialSummary run_trials(const Dataset& data, const ExperimentConfig& cfg, std::span<const std::uint64_t> seeds,
                        std::size_t jobs = 1,
                        const std::function<void(const TrialSummary&)>& on_partial = nullptr);

nlohmann::ordered_json to_json(const MetricsReport& report);
nlohmann::ordered_json to_json(const TrialReport& report);
nlohmann::ordered_json to_json(const TrialSummary& summary);
void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path);

// Rows (id, logit, true label) for items whose thresholded prediction is
// wrong, in input order.
std::size_t export_misclassified_logits(const BipartiteGraph& graph, const Predictions& pred,
                                        std::span<const int> labels, double threshold,
                                        const std::filesystem::path& path);

// Stratified sample of round(n_c * fraction) items per class, written as
// (id, label, z_1..z_d) in input order. Returns the number of rows.
std::size_t export_embeddings(const BipartiteGraph& graph, const Predictions& pred, std::span<const int> labels,
                              double fraction, std::uint64_t seed, const std::filesystem::path& path);

std::vector<std::size_t> stratified_sample(std::span<const int> classes, double fraction, std::uint64_t seed);

}  // namespace sagnn
