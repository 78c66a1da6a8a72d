#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sagnn {

double accuracy(std::span<const int> predicted, std::span<const int> truth);

// F1 of class 1. No predicted and no actual positives -> 1.0; otherwise a
// zero precision or recall gives 0.0.
double f1_score(std::span<const int> predicted, std::span<const int> truth);

// Area under the ROC curve from the Mann-Whitney U statistic with midranks
// for tied scores. Absent when only one class is present.
std::optional<double> auc(std::span<const double> scores, std::span<const int> truth);

struct MetricsReport {
  double accuracy = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;
  std::size_t n = 0;

  bool operator==(const MetricsReport&) const = default;
};

// Thresholds probabilities at `threshold` (>= threshold predicts class 1).
MetricsReport evaluate_predictions(std::span<const double> probabilities, std::span<const int> truth,
                                   double threshold = 0.5);

struct Split {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

// Per-class shuffle and partition of item indices [0, labels.size()).
// Each class contributes round(n_c * train) / round(n_c * val) / rest.
// Parts are sorted ascending.
Split stratified_split(std::span<const int> labels, SplitFractions fractions, std::uint64_t seed,
                       std::size_t min_per_class = 10);

struct Bucket {
  std::string label;
  std::size_t size = 0;
  std::optional<MetricsReport> metrics;  // absent for empty buckets
  std::string note;
};

// Groups items by `bucket_of[i]` (an index into `labels`) and evaluates
// each group separately.
std::vector<Bucket> bucket_metrics(std::span<const double> probabilities, std::span<const int> truth,
                                   std::span<const std::size_t> bucket_of,
                                   std::span<const std::string> labels, double threshold = 0.5);

// Degree bucket edges such as {5, 20} give "0-5", "6-20", "21+".
std::vector<std::string> degree_bucket_labels(std::span<const std::size_t> upper_edges);
std::size_t degree_bucket(std::size_t degree, std::span<const std::size_t> upper_edges);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 with fewer than 2 values
};

MeanStd mean_std(std::span<const double> values);

}  // namespace sagnn
