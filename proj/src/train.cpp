#include "sagnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "json.hpp"
#include "sagnn/error.hpp"
#include "sagnn/rng.hpp"
#include "text_util.hpp"

namespace sagnn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (threshold <= 0.0 || threshold >= 1.0) throw ValidationError("threshold must be in (0, 1)");
}

Predictions predict(const Model& model, std::span<const std::uint32_t> tweets, std::uint64_t seed,
                    std::size_t batch_size) {
  Predictions out;
  out.tweets.assign(tweets.begin(), tweets.end());
  out.logits.resize(tweets.size());
  out.probabilities.resize(tweets.size());
  for (std::size_t lo = 0, b = 0; lo < tweets.size(); lo += batch_size, ++b) {
    const std::size_t hi = std::min(tweets.size(), lo + batch_size);
    Tape tape;
    auto res = model.forward(tape, tweets.subspan(lo, hi - lo), substream(seed, StreamTag::Eval, b));
    const auto& z = tape.value(res.embeddings);
    const auto& logits = tape.value(res.logits);
    const auto& probs = tape.value(res.probabilities);
    if (out.embeddings.empty()) out.embeddings = Matrix(tweets.size(), z.cols());
    std::unordered_map<std::uint32_t, std::size_t> row_in_batch;
    for (std::size_t r = 0; r < res.tweets.size(); ++r) row_in_batch.emplace(res.tweets[r], r);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto r = row_in_batch.at(tweets[i]);
      out.logits[i] = logits(r, 0);
      out.probabilities[i] = probs(r, 0);
      std::copy(z.row(r).begin(), z.row(r).end(), out.embeddings.row(i).begin());
    }
  }
  return out;
}

TrainResult train(Model& model, std::span<const int> labels, const Split& split, TrainConfig cfg) {
  cfg.validate();
  if (split.train.empty()) throw ValidationError("training split is empty");
  if (split.val.empty()) throw ValidationError("validation split is empty");
  for (auto part : {&split.train, &split.val}) {
    for (auto t : *part) {
      if (t >= labels.size()) throw ValidationError("split references an unlabeled tweet");
    }
  }
  const std::size_t steps_per_epoch = (split.train.size() + cfg.batch_size - 1) / cfg.batch_size;
  cfg.optimizer.total_steps = cfg.epochs * steps_per_epoch;
  cfg.optimizer.validate();

  auto params = model.params().all();
  for (auto* p : params) p->zero_grad();

  std::vector<int> val_truth;
  for (auto t : split.val) val_truth.push_back(labels[t]);

  TrainResult result;
  std::vector<Matrix> best = model.params().snapshot();
  std::uint64_t step = 0;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  double last_lr = 0.0;

  auto validate_now = [&]() {
    auto pred = predict(model, split.val, cfg.seed, cfg.batch_size);
    auto report = evaluate_predictions(pred.probabilities, val_truth, cfg.threshold);
    HistoryRecord rec;
    rec.step = step;
    rec.lr = last_lr;
    rec.train_loss = loss_count == 0 ? 0.0 : loss_sum / static_cast<double>(loss_count);
    rec.val_accuracy = report.accuracy;
    rec.val_f1 = report.f1;
    rec.val_auc = report.auc;
    result.history.push_back(rec);
    loss_sum = 0.0;
    loss_count = 0;
    // Ties go to the later checkpoint, which has seen more training.
    if (report.accuracy >= result.best_val_accuracy) {
      result.best_val_accuracy = report.accuracy;
      result.best_step = step;
      best = model.params().snapshot();
    }
  };

  std::vector<std::uint32_t> order = split.train;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(substream(cfg.seed, StreamTag::Shuffle, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      std::span<const std::uint32_t> batch(order.data() + lo, hi - lo);
      Tape tape;
      try {
        auto out = model.forward(tape, batch, substream(cfg.seed, StreamTag::Sample, step));
        std::vector<double> y;
        y.reserve(out.tweets.size());
        for (auto t : out.tweets) y.push_back(static_cast<double>(labels[t]));
        auto loss = tape.bce_loss(out.probabilities, std::move(y));
        loss_sum += tape.value(loss)(0, 0);
        ++loss_count;
        tape.backward(loss);
      } catch (const RuntimeFailure& e) {
        throw RuntimeFailure("training aborted at epoch " + std::to_string(epoch + 1) + ", step " +
                             std::to_string(step) + ": " + e.what());
      }
      last_lr = adamw_step(params, cfg.optimizer, step);
      ++step;
      if (cfg.eval_every > 0 && step % cfg.eval_every == 0 && hi < order.size()) validate_now();
    }
    validate_now();
  }
  model.params().restore(best);
  return result;
}

void write_history_jsonl(std::span<const HistoryRecord> history, const std::filesystem::path& path) {
  auto out = text::open_out(path.string());
  for (const auto& rec : history) {
    nlohmann::ordered_json j;
    j["step"] = rec.step;
    j["lr"] = rec.lr;
    j["train_loss"] = rec.train_loss;
    j["val_accuracy"] = rec.val_accuracy;
    j["val_f1"] = rec.val_f1;
    j["val_auc"] = rec.val_auc ? nlohmann::ordered_json(*rec.val_auc) : nlohmann::ordered_json(nullptr);
    out << j.dump() << '\n';
  }
}

}  // namespace sagnn
