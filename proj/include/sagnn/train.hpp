#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sagnn/autodiff.hpp"
#include "sagnn/metrics.hpp"
#include "sagnn/model.hpp"

namespace sagnn {

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 512;
  std::uint64_t seed = 0;
  OptimConfig optimizer;  // total_steps is filled in by train()
  // Validate every this many steps; 0 means once per epoch. The end of each
  // epoch is always evaluated.
  std::size_t eval_every = 0;
  double threshold = 0.5;

  void validate() const;
};

struct HistoryRecord {
  std::uint64_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean batch loss since the previous record
  double val_accuracy = 0.0;
  double val_f1 = 0.0;
  std::optional<double> val_auc;

  bool operator==(const HistoryRecord&) const = default;
};

struct TrainResult {
  std::vector<HistoryRecord> history;
  std::uint64_t best_step = 0;
  double best_val_accuracy = -1.0;
};

// Mini-batch training with AdamW and the warm-up linear schedule. The model
// is left holding the parameters of the best validation accuracy.
TrainResult train(Model& model, std::span<const int> labels, const Split& split, TrainConfig cfg);

struct Predictions {
  std::vector<std::uint32_t> tweets;
  std::vector<double> logits;
  std::vector<double> probabilities;
  Matrix embeddings;
};

// Forward-only inference in batches; sampling uses fixed substreams of
// `seed` so repeated calls agree. Rows follow the order of `tweets`.
Predictions predict(const Model& model, std::span<const std::uint32_t> tweets, std::uint64_t seed,
                    std::size_t batch_size = 512);

void write_history_jsonl(std::span<const HistoryRecord> history, const std::filesystem::path& path);

}  // namespace sagnn
