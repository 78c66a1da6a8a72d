#include "sagnn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "sagnn/error.hpp"
#include "sagnn/rng.hpp"
#include "sagnn/synth.hpp"
#include "text_util.hpp"

namespace sagnn {

using ojson = nlohmann::ordered_json;

std::string_view to_string(BucketKind kind) {
  switch (kind) {
    case BucketKind::FeatureSignal: return "feature_signal";
    case BucketKind::FirstOrderDegree: return "first_order_degree";
    case BucketKind::SecondOrderDegree: return "second_order_degree";
  }
  return "?";
}

BucketKind parse_bucket_kind(std::string_view text) {
  if (text == "feature_signal") return BucketKind::FeatureSignal;
  if (text == "first_order_degree") return BucketKind::FirstOrderDegree;
  if (text == "second_order_degree") return BucketKind::SecondOrderDegree;
  throw ValidationError("unknown bucketing '" + std::string(text) +
                        "' (expected feature_signal|first_order_degree|second_order_degree)");
}

void ExperimentConfig::validate() const {
  train.validate();
  train.optimizer.validate();
  const double total = split.train + split.val + split.test;
  if (split.train <= 0.0 || split.val <= 0.0 || split.test <= 0.0 || std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("split fractions must be positive and sum to 1");
  }
  if (!std::is_sorted(degree_edges.begin(), degree_edges.end()) ||
      std::adjacent_find(degree_edges.begin(), degree_edges.end()) != degree_edges.end()) {
    throw ValidationError("degree bucket edges must be strictly increasing");
  }
}

ojson to_json(const ExperimentConfig& cfg) {
  ojson j;
  j["model"] = to_string(cfg.model);
  j["agg"] = to_string(cfg.sagnn.aggregator);
  j["layers"] = cfg.model == ModelKind::Baseline ? cfg.baseline.num_layers : cfg.sagnn.num_layers;
  j["dim"] = cfg.model == ModelKind::Baseline ? cfg.baseline.hidden_dim : cfg.sagnn.hidden_dim;
  j["activation"] = to_string(cfg.sagnn.activation);
  j["output_bias"] = cfg.sagnn.output_bias;
  j["walks"] = cfg.sagnn.walk.num_walks;
  j["top_k"] = cfg.sagnn.walk.top_k;
  j["exclude_self"] = cfg.sagnn.walk.exclude_self;
  j["init"] = to_string(cfg.baseline.init_strategy);
  j["fanout"] = cfg.baseline.fanout;
  j["epochs"] = cfg.train.epochs;
  j["batch_size"] = cfg.train.batch_size;
  j["lr"] = cfg.train.optimizer.learning_rate;
  j["weight_decay"] = cfg.train.optimizer.weight_decay;
  j["beta1"] = cfg.train.optimizer.beta1;
  j["beta2"] = cfg.train.optimizer.beta2;
  j["adam_eps"] = cfg.train.optimizer.epsilon;
  j["warmup_fraction"] = cfg.train.optimizer.warmup_fraction;
  j["eval_every"] = cfg.train.eval_every;
  j["threshold"] = cfg.train.threshold;
  j["seed"] = cfg.train.seed;
  j["split"] = {cfg.split.train, cfg.split.val, cfg.split.test};
  j["degree_edges"] = cfg.degree_edges;
  ojson buckets = ojson::array();
  for (auto b : cfg.buckets) buckets.push_back(to_string(b));
  j["buckets"] = buckets;
  return j;
}

void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("experiment config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "model") {
        cfg.model = parse_model_kind(v.get<std::string>());
      } else if (key == "agg") {
        cfg.sagnn.aggregator = parse_aggregator(v.get<std::string>());
      } else if (key == "layers") {
        cfg.sagnn.num_layers = cfg.baseline.num_layers = v.get<std::size_t>();
      } else if (key == "dim") {
        cfg.sagnn.hidden_dim = cfg.baseline.hidden_dim = v.get<std::size_t>();
      } else if (key == "activation") {
        cfg.sagnn.activation = cfg.baseline.activation = parse_activation(v.get<std::string>());
      } else if (key == "output_bias") {
        cfg.sagnn.output_bias = cfg.baseline.output_bias = v.get<bool>();
      } else if (key == "walks") {
        cfg.sagnn.walk.num_walks = v.get<std::uint32_t>();
      } else if (key == "top_k") {
        cfg.sagnn.walk.top_k = v.get<std::uint32_t>();
      } else if (key == "exclude_self") {
        cfg.sagnn.walk.exclude_self = v.get<bool>();
      } else if (key == "init") {
        cfg.baseline.init_strategy = parse_user_init(v.get<std::string>());
      } else if (key == "fanout") {
        cfg.baseline.fanout = v.get<std::uint32_t>();
      } else if (key == "epochs") {
        cfg.train.epochs = v.get<std::size_t>();
      } else if (key == "batch_size") {
        cfg.train.batch_size = v.get<std::size_t>();
      } else if (key == "lr") {
        cfg.train.optimizer.learning_rate = v.get<double>();
      } else if (key == "weight_decay") {
        cfg.train.optimizer.weight_decay = v.get<double>();
      } else if (key == "beta1") {
        cfg.train.optimizer.beta1 = v.get<double>();
      } else if (key == "beta2") {
        cfg.train.optimizer.beta2 = v.get<double>();
      } else if (key == "adam_eps") {
        cfg.train.optimizer.epsilon = v.get<double>();
      } else if (key == "warmup_fraction") {
        cfg.train.optimizer.warmup_fraction = v.get<double>();
      } else if (key == "eval_every") {
        cfg.train.eval_every = v.get<std::size_t>();
      } else if (key == "threshold") {
        cfg.train.threshold = v.get<double>();
      } else if (key == "seed") {
        cfg.train.seed = v.get<std::uint64_t>();
      } else if (key == "split") {
        auto f = v.get<std::vector<double>>();
        if (f.size() != 3) throw ValidationError("split needs three fractions");
        cfg.split = {f[0], f[1], f[2]};
      } else if (key == "degree_edges") {
        cfg.degree_edges = v.get<std::vector<std::size_t>>();
      } else if (key == "buckets") {
        cfg.buckets.clear();
        for (const auto& name : v.get<std::vector<std::string>>()) cfg.buckets.push_back(parse_bucket_kind(name));
      } else {
        throw ValidationError("unknown experiment config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad experiment config value: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  auto in = text::open_in(path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  ExperimentConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

Split make_split(const Dataset& data, const ExperimentConfig& cfg, std::uint64_t seed) {
  return stratified_split(data.labels, cfg.split, substream(seed, StreamTag::Split));
}

std::unique_ptr<Model> make_model(const Dataset& data, const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.model) {
    case ModelKind::SaGnn:
    case ModelKind::SaGnnNoEdgeType: {
      auto c = cfg.sagnn;
      c.input_dim = data.features.cols();
      c.edge_type_aware = cfg.model == ModelKind::SaGnn;
      c.walk.rng_seed = substream(seed, StreamTag::Sample);
      return std::make_unique<SaGnn>(data.graph, data.features, c, seed);
    }
    case ModelKind::Baseline: {
      auto c = cfg.baseline;
      c.input_dim = data.features.cols();
      Rng rng(substream(seed, StreamTag::UserInit));
      auto users = init_user_features(data.graph, data.features, c.init_strategy, rng);
      return std::make_unique<FirstOrderBaseline>(data.graph, data.features, std::move(users), c, seed);
    }
    case ModelKind::ContentOnly:
      return std::make_unique<ContentOnly>(data.features, seed);
  }
  throw ValidationError("unknown model kind");
}

std::vector<BucketGroup> evaluate_buckets(const Dataset& data, std::span<const std::uint32_t> tweets,
                                          std::span<const double> probabilities, const ExperimentConfig& cfg) {
  std::vector<int> truth;
  truth.reserve(tweets.size());
  for (auto t : tweets) truth.push_back(data.labels[t]);

  std::optional<DegreeReport> degrees;
  std::vector<BucketGroup> groups;
  for (auto kind : cfg.buckets) {
    std::vector<std::string> labels;
    std::vector<std::size_t> bucket_of(tweets.size());
    if (kind == BucketKind::FeatureSignal) {
      if (!data.low_signal) continue;  // real corpora carry no ground-truth flag
      labels = {"normal", "low_signal"};
      for (std::size_t i = 0; i < tweets.size(); ++i) bucket_of[i] = (*data.low_signal)[tweets[i]] ? 1 : 0;
    } else {
      if (!degrees) degrees = degree_report(data.graph);
      const auto& deg = kind == BucketKind::FirstOrderDegree ? degrees->first_order : degrees->second_order;
      labels = degree_bucket_labels(cfg.degree_edges);
      for (std::size_t i = 0; i < tweets.size(); ++i) bucket_of[i] = degree_bucket(deg[tweets[i]], cfg.degree_edges);
    }
    BucketGroup g{kind, bucket_metrics(probabilities, truth, bucket_of, labels, cfg.train.threshold)};
    if (kind == BucketKind::SecondOrderDegree && !g.buckets.empty()) {
      g.buckets.front().note = "known weak spot: tweets with few second-order neighbors";
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

TrialRun run_trial(const Dataset& data, const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TrialRun run;
  run.split = make_split(data, cfg, seed);
  run.model = make_model(data, cfg, seed);
  auto tc = cfg.train;
  tc.seed = seed;
  auto result = train(*run.model, data.labels, run.split, tc);

  auto pred = predict(*run.model, run.split.test, seed, tc.batch_size);
  std::vector<int> truth;
  for (auto t : run.split.test) truth.push_back(data.labels[t]);

  auto& r = run.report;
  r.seed = seed;
  r.model = cfg.model;
  r.best_step = result.best_step;
  r.best_val_accuracy = result.best_val_accuracy;
  r.test = evaluate_predictions(pred.probabilities, truth, tc.threshold);
  r.buckets = evaluate_buckets(data, run.split.test, pred.probabilities, cfg);
  r.history = std::move(result.history);
  return run;
}

MetricSummary summarize(std::span<const TrialReport> reports) {
  std::vector<double> acc, f1, auc;
  for (const auto& r : reports) {
    acc.push_back(r.test.accuracy);
    f1.push_back(r.test.f1);
    if (r.test.auc) auc.push_back(*r.test.auc);
  }
  MetricSummary s;
  s.accuracy = mean_std(acc);
  s.f1 = mean_std(f1);
  if (!auc.empty()) s.auc = mean_std(auc);
  return s;
}

TrialSummary run_trials(const Dataset& data, const ExperimentConfig& cfg, std::span<const std::uint64_t> seeds,
                        std::size_t jobs, const std::function<void(const TrialSummary&)>& on_partial) {
  if (seeds.empty()) throw ValidationError("at least one seed is required");
  cfg.validate();
  jobs = std::clamp<std::size_t>(jobs, 1, seeds.size());

  std::vector<std::optional<TrialReport>> done(seeds.size());
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      {
        std::lock_guard lock(failure_mu);
        if (failure) return;
      }
      try {
        done[i] = run_trial(data, cfg, seeds[i]).report;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  TrialSummary summary;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!done[i]) continue;
    summary.seeds.push_back(seeds[i]);
    summary.reports.push_back(std::move(*done[i]));
  }
  summary.test = summarize(summary.reports);
  if (failure) {
    if (on_partial) on_partial(summary);
    std::rethrow_exception(failure);
  }
  return summary;
}

namespace {

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson to_json(const MeanStd& m) {
  ojson j;
  j["mean"] = m.mean;
  j["std"] = m.std;
  return j;
}

}  // namespace

ojson to_json(const MetricsReport& report) {
  ojson j;
  j["accuracy"] = report.accuracy;
  j["f1"] = report.f1;
  j["auc"] = optional_number(report.auc);
  j["n"] = report.n;
  return j;
}

ojson to_json(const TrialReport& report) {
  ojson j;
  j["seed"] = report.seed;
  j["model"] = to_string(report.model);
  j["best_step"] = report.best_step;
  j["best_val_accuracy"] = report.best_val_accuracy;
  j["test"] = to_json(report.test);
  ojson buckets = ojson::object();
  for (const auto& g : report.buckets) {
    ojson arr = ojson::array();
    for (const auto& b : g.buckets) {
      ojson e;
      e["bucket"] = b.label;
      e["size"] = b.size;
      e["metrics"] = b.metrics ? to_json(*b.metrics) : ojson(nullptr);
      if (!b.note.empty()) e["note"] = b.note;
      arr.push_back(std::move(e));
    }
    buckets[std::string(to_string(g.kind))] = std::move(arr);
  }
  j["buckets"] = std::move(buckets);
  ojson history = ojson::array();
  for (const auto& h : report.history) {
    ojson e;
    e["step"] = h.step;
    e["lr"] = h.lr;
    e["train_loss"] = h.train_loss;
    e["val_accuracy"] = h.val_accuracy;
    e["val_f1"] = h.val_f1;
    e["val_auc"] = optional_number(h.val_auc);
    history.push_back(std::move(e));
  }
  j["history"] = std::move(history);
  return j;
}

ojson to_json(const TrialSummary& summary) {
  ojson j;
  j["seeds"] = summary.seeds;
  ojson reports = ojson::array();
  for (const auto& r : summary.reports) reports.push_back(to_json(r));
  j["reports"] = std::move(reports);
  ojson agg;
  agg["accuracy"] = to_json(summary.test.accuracy);
  agg["f1"] = to_json(summary.test.f1);
  agg["auc"] = summary.test.auc ? to_json(*summary.test.auc) : ojson(nullptr);
  j["aggregate"] = std::move(agg);
  return j;
}

void write_json(const ojson& j, const std::filesystem::path& path) {
  auto out = text::open_out(path.string());
  out << j.dump(2) << '\n';
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

std::size_t export_misclassified_logits(const BipartiteGraph& graph, const Predictions& pred,
                                        std::span<const int> labels, double threshold,
                                        const std::filesystem::path& path) {
  auto out = text::open_out(path.string());
  std::size_t rows = 0;
  for (std::size_t i = 0; i < pred.tweets.size(); ++i) {
    const auto t = pred.tweets[i];
    const int predicted = pred.probabilities[i] >= threshold ? 1 : 0;
    if (predicted == labels[t]) continue;
    out << graph.tweet_ids()[t] << '\t' << text::format_double(pred.logits[i]) << '\t' << labels[t] << '\n';
    ++rows;
  }
  return rows;
}

std::vector<std::size_t> stratified_sample(std::span<const int> classes, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("sample fraction must be in (0, 1]");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < classes.size(); ++i) by_class[classes[i]].push_back(i);
  std::vector<std::size_t> picked;
  for (auto& [c, members] : by_class) {
    Rng rng(substream(seed, StreamTag::Export, static_cast<std::uint64_t>(c)));
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * fraction));
    picked.insert(picked.end(), members.begin(), members.begin() + std::min(take, members.size()));
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::size_t export_embeddings(const BipartiteGraph& graph, const Predictions& pred, std::span<const int> labels,
                              double fraction, std::uint64_t seed, const std::filesystem::path& path) {
  std::vector<int> classes;
  for (auto t : pred.tweets) classes.push_back(labels[t]);
  const auto picked = stratified_sample(classes, fraction, seed);
  auto out = text::open_out(path.string());
  for (auto i : picked) {
    const auto t = pred.tweets[i];
    out << graph.tweet_ids()[t] << '\t' << labels[t];
    for (double v : pred.embeddings.row(i)) out << '\t' << text::format_double(v);
    out << '\n';
  }
  return picked.size();
}

}  // namespace sagnn
