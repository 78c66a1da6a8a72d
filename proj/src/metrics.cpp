#include "sagnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sagnn/error.hpp"
#include "sagnn/rng.hpp"

namespace sagnn {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("metric inputs differ in length");
  if (a == 0) throw ValidationError("metric inputs are empty");
}

void check_label(int y) {
  if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
}

}  // namespace

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  check_lengths(predicted.size(), truth.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double f1_score(std::span<const int> predicted, std::span<const int> truth) {
  check_lengths(predicted.size(), truth.size());
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    check_label(truth[i]);
    if (predicted[i] == 1 && truth[i] == 1) ++tp;
    if (predicted[i] == 1 && truth[i] == 0) ++fp;
    if (predicted[i] == 0 && truth[i] == 1) ++fn;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

std::optional<double> auc(std::span<const double> scores, std::span<const int> truth) {
  check_lengths(scores.size(), truth.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Ranks doubled so midranks of tied groups stay integral.
  std::vector<std::uint64_t> rank2(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = i + j + 1;  // 2 * mean of ranks i+1..j
    i = j;
  }
  std::uint64_t pos = 0, rank_sum2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    check_label(truth[i]);
    if (truth[i] == 1) {
      ++pos;
      rank_sum2 += rank2[i];
    }
  }
  const std::uint64_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  // 2U = 2R - n1(n1+1); AUC = U / (n1 n0)
  const double u2 = static_cast<double>(rank_sum2) - static_cast<double>(pos * (pos + 1));
  return u2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

MetricsReport evaluate_predictions(std::span<const double> probabilities, std::span<const int> truth,
                                   double threshold) {
  check_lengths(probabilities.size(), truth.size());
  std::vector<int> predicted(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) predicted[i] = probabilities[i] >= threshold ? 1 : 0;
  MetricsReport r;
  r.accuracy = accuracy(predicted, truth);
  r.f1 = f1_score(predicted, truth);
  r.auc = auc(probabilities, truth);
  r.n = truth.size();
  return r;
}

Split stratified_split(std::span<const int> labels, SplitFractions fractions, std::uint64_t seed,
                       std::size_t min_per_class) {
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 ||
      std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw ValidationError("split fractions must be nonnegative and sum to 1");
  }
  std::vector<std::uint32_t> by_class[2];
  for (std::uint32_t i = 0; i < labels.size(); ++i) {
    check_label(labels[i]);
    by_class[labels[i]].push_back(i);
  }
  Split split;
  for (int c = 0; c < 2; ++c) {
    auto& items = by_class[c];
    if (items.size() < min_per_class) {
      throw ValidationError("class " + std::to_string(c) + " has " + std::to_string(items.size()) +
                            " items; stratified split needs at least " + std::to_string(min_per_class));
    }
    Rng rng(substream(seed, StreamTag::Split, static_cast<std::uint64_t>(c)));
    std::shuffle(items.begin(), items.end(), rng);
    const auto n = static_cast<double>(items.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * fractions.train));
    const auto n_val = std::min(items.size() - n_train, static_cast<std::size_t>(std::llround(n * fractions.val)));
    split.train.insert(split.train.end(), items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.insert(split.val.end(), items.begin() + static_cast<std::ptrdiff_t>(n_train),
                     items.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.insert(split.test.end(), items.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), items.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<Bucket> bucket_metrics(std::span<const double> probabilities, std::span<const int> truth,
                                   std::span<const std::size_t> bucket_of, std::span<const std::string> labels,
                                   double threshold) {
  if (probabilities.size() != truth.size() || truth.size() != bucket_of.size()) {
    throw ValidationError("bucket inputs differ in length");
  }
  std::vector<Bucket> buckets(labels.size());
  std::vector<std::vector<double>> probs(labels.size());
  std::vector<std::vector<int>> ys(labels.size());
  for (std::size_t b = 0; b < labels.size(); ++b) buckets[b].label = labels[b];
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (bucket_of[i] >= labels.size()) throw ValidationError("bucket index out of range");
    probs[bucket_of[i]].push_back(probabilities[i]);
    ys[bucket_of[i]].push_back(truth[i]);
  }
  for (std::size_t b = 0; b < labels.size(); ++b) {
    buckets[b].size = ys[b].size();
    if (!ys[b].empty()) buckets[b].metrics = evaluate_predictions(probs[b], ys[b], threshold);
  }
  return buckets;
}

std::vector<std::string> degree_bucket_labels(std::span<const std::size_t> upper_edges) {
  std::vector<std::string> labels;
  std::size_t lo = 0;
  for (auto hi : upper_edges) {
    labels.push_back(std::to_string(lo) + "-" + std::to_string(hi));
    lo = hi + 1;
  }
  labels.push_back(std::to_string(lo) + "+");
  return labels;
}

std::size_t degree_bucket(std::size_t degree, std::span<const std::size_t> upper_edges) {
  for (std::size_t b = 0; b < upper_edges.size(); ++b) {
    if (degree <= upper_edges[b]) return b;
  }
  return upper_edges.size();
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  // Welford updates: identical inputs reproduce the input mean and zero spread exactly.
  double m2 = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    const double delta = v - r.mean;
    r.mean += delta / static_cast<double>(k);
    m2 += delta * (v - r.mean);
  }
  if (values.size() < 2) return r;
  r.std = std::sqrt(m2 / static_cast<double>(values.size() - 1));
  return r;
}

}  // namespace sagnn
