// Command-line front end: corpus annotation, graph building, synthetic data,
// training, evaluation, multi-seed trials and exports.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <malloc.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "sagnn/dataset.hpp"
#include "sagnn/error.hpp"
#include "sagnn/experiment.hpp"
#include "sagnn/graph.hpp"
#include "sagnn/pipeline.hpp"
#include "sagnn/synth.hpp"
#include "sagnn/train.hpp"

namespace fs = std::filesystem;
using namespace sagnn;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kConfigFile = "config.json";
constexpr const char* kWeightsFile = "weights.bin";

struct ExperimentFlags {
  std::string config;
  std::optional<std::string> model, agg, activation, init, buckets;
  std::optional<std::size_t> layers, dim, epochs, batch_size, eval_every;
  std::optional<std::uint32_t> walks, top_k, fanout;
  std::optional<double> lr, weight_decay, warmup, threshold;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "experiment config JSON (flags override it)")->check(CLI::ExistingFile);
    cmd->add_option("--model", model, "sagnn|sagnn-noet|baseline|content-only");
    cmd->add_option("--agg", agg, "mean|max|sum|wsum");
    cmd->add_option("--layers", layers);
    cmd->add_option("--dim", dim, "hidden dimension");
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch-size", batch_size);
    cmd->add_option("--lr", lr, "peak learning rate");
    cmd->add_option("--weight-decay", weight_decay);
    cmd->add_option("--warmup", warmup, "warm-up fraction of total steps");
    cmd->add_option("--eval-every", eval_every, "validation interval in steps (0: per epoch)");
    cmd->add_option("--walks", walks, "random walks per center");
    cmd->add_option("--top-k", top_k, "second-order neighbors kept");
    cmd->add_option("--activation", activation, "relu|identity");
    cmd->add_option("--init", init, "baseline user init: random|centroid|medoid");
    cmd->add_option("--fanout", fanout, "baseline neighbors per node");
    cmd->add_option("--threshold", threshold, "decision threshold on the sigmoid output");
    cmd->add_option("--buckets", buckets, "comma list of feature_signal,first_order_degree,second_order_degree");
    cmd->add_option("--seed", seed);
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_experiment_config(config);
    nlohmann::json j = nlohmann::json::object();
    if (model) j["model"] = *model;
    if (agg) j["agg"] = *agg;
    if (activation) j["activation"] = *activation;
    if (init) j["init"] = *init;
    if (layers) j["layers"] = *layers;
    if (dim) j["dim"] = *dim;
    if (epochs) j["epochs"] = *epochs;
    if (batch_size) j["batch_size"] = *batch_size;
    if (eval_every) j["eval_every"] = *eval_every;
    if (walks) j["walks"] = *walks;
    if (top_k) j["top_k"] = *top_k;
    if (fanout) j["fanout"] = *fanout;
    if (lr) j["lr"] = *lr;
    if (weight_decay) j["weight_decay"] = *weight_decay;
    if (warmup) j["warmup_fraction"] = *warmup;
    if (threshold) j["threshold"] = *threshold;
    if (seed) j["seed"] = *seed;
    if (buckets) {
      std::vector<std::string> names;
      std::stringstream ss(*buckets);
      for (std::string name; std::getline(ss, name, ',');) {
        if (!name.empty()) names.push_back(name);
      }
      j["buckets"] = names;
    }
    apply_json(cfg, j);
    cfg.validate();
    return cfg;
  }
};

Dataset load_dataset(const fs::path& dir, bool lenient) { return make_dataset(read_corpus(dir), !lenient); }

// "1,1,3" is an explicit list; a bare "N" means N consecutive seeds from
// `base`.
std::vector<std::uint64_t> parse_seeds(const std::string& text, std::uint64_t base) {
  std::vector<std::uint64_t> seeds;
  auto parse_one = [&](const std::string& s) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || s.front() == '-') throw ValidationError("bad seed '" + s + "'");
    return v;
  };
  if (text.find(',') == std::string::npos) {
    const auto n = parse_one(text);
    if (n == 0) throw ValidationError("--seeds needs at least one seed");
    for (std::uint64_t i = 0; i < n; ++i) seeds.push_back(base + i);
    return seeds;
  }
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) seeds.push_back(parse_one(item));
  return seeds;
}

const std::vector<std::uint32_t>& split_part(const Split& split, const std::string& part) {
  if (part == "train") return split.train;
  if (part == "val") return split.val;
  if (part == "test") return split.test;
  throw ValidationError("unknown split part '" + part + "' (expected train|val|test)");
}

struct LoadedModel {
  ExperimentConfig cfg;
  std::unique_ptr<Model> model;
  Split split;
};

LoadedModel load_trained(const Dataset& data, const fs::path& model_dir) {
  LoadedModel out;
  out.cfg = load_experiment_config(model_dir / kConfigFile);
  const auto seed = out.cfg.train.seed;
  out.model = make_model(data, out.cfg, seed);
  load_parameters(out.model->params().all(), model_dir / kWeightsFile);
  out.split = make_split(data, out.cfg, seed);
  return out;
}

void print_json(const ojson& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  // Training allocates and frees the same large tape buffers every step;
  // keeping them on the heap avoids an mmap/munmap round trip each time.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"Skip-aggregation graph neural network toolkit for polarized tweet classification"};
  app.require_subcommand(1);

  // annotate
  auto* annotate = app.add_subcommand("annotate", "weak-label a JSONL corpus with a hashtag lexicon");
  fs::path corpus_path, lexicon_path, out_dir, embeddings_in;
  bool expand = false;
  ExpansionConfig expansion;
  std::string positive = "proB";
  std::size_t feature_dim = 256;
  annotate->add_option("--corpus", corpus_path, "posts JSONL")->required()->check(CLI::ExistingFile);
  annotate->add_option("--lexicon", lexicon_path, "seed lexicon TSV")->required()->check(CLI::ExistingFile);
  annotate->add_option("--out", out_dir, "output directory")->required();
  annotate->add_flag("--expand", expand, "expand the lexicon by co-occurrence first");
  annotate->add_option("--min-cooccur", expansion.min_cooccur, "minimum co-occurrence count")->capture_default_str();
  annotate->add_option("--purity", expansion.purity, "minimum polarity purity")->capture_default_str();
  annotate->add_option("--rounds", expansion.rounds, "expansion rounds")->capture_default_str();
  annotate->add_option("--positive", positive, "polarity mapped to label 1")->check(CLI::IsMember({"proA", "proB"}))
      ->capture_default_str();
  annotate->add_option("--feature-dim", feature_dim, "hashed feature dimension")->capture_default_str();
  annotate->add_option("--embeddings", embeddings_in, "precomputed features file instead of hashing")
      ->check(CLI::ExistingFile);

  // build-graph
  auto* build = app.add_subcommand("build-graph", "build and save the bipartite graph of a corpus directory");
  fs::path data_dir, graph_out, degree_out;
  bool lenient = false;
  build->add_option("--data", data_dir, "corpus directory")->required()->check(CLI::ExistingDirectory);
  build->add_option("--out", graph_out, "binary graph file")->required();
  build->add_option("--degree-report", degree_out, "write first/second-order degree histograms (TSV)");
  build->add_flag("--lenient", lenient, "allow tweets without exactly one post edge");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic polarized corpus");
  SynthConfig sc;
  fs::path synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--users", sc.num_users)->capture_default_str();
  synth->add_option("--tweets-per-user", sc.mean_tweets_per_user, "geometric mean")->capture_default_str();
  synth->add_option("--epsilon", sc.epsilon, "cross-camp retweet probability")->capture_default_str();
  synth->add_option("--retweet-rate", sc.retweet_rate, "expected retweets per tweet")->capture_default_str();
  synth->add_option("--exponent", sc.powerlaw_exponent, "retweet count power-law exponent")->capture_default_str();
  synth->add_option("--cap", sc.retweet_cap, "retweet count cap")->capture_default_str();
  synth->add_option("--feature-dim", sc.feature_dim)->capture_default_str();
  synth->add_option("--separation", sc.class_separation, "distance between class means")->capture_default_str();
  synth->add_option("--noise", sc.noise_sigma)->capture_default_str();
  synth->add_option("--low-signal", sc.low_signal_fraction, "fraction of pure-noise tweets")->capture_default_str();
  synth->add_option("--seed", sc.seed)->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "train one model and save it");
  ExperimentFlags train_flags;
  fs::path model_out;
  train_cmd->add_option("--data", data_dir, "corpus directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", model_out, "model directory")->required();
  train_cmd->add_flag("--lenient", lenient);
  train_flags.attach(train_cmd);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained model, optionally by bucket");
  fs::path model_dir, report_out;
  std::string part = "test";
  std::optional<std::string> eval_buckets;
  evaluate->add_option("--data", data_dir, "corpus directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--model-dir", model_dir)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--part", part, "train|val|test")->capture_default_str();
  evaluate->add_option("--buckets", eval_buckets, "comma list of feature_signal,first_order_degree,second_order_degree");
  evaluate->add_option("--out", report_out, "report JSON (default: stdout)");
  evaluate->add_flag("--lenient", lenient);

  // trials
  auto* trials = app.add_subcommand("trials", "train and evaluate one model per seed");
  ExperimentFlags trial_flags;
  std::string seeds_text = "5";
  std::size_t jobs = 1;
  fs::path trials_out;
  trials->add_option("--data", data_dir, "corpus directory")->required()->check(CLI::ExistingDirectory);
  trials->add_option("--out", trials_out, "report directory")->required();
  trials->add_option("--seeds", seeds_text, "seed list (1,2,3) or a count of consecutive seeds from --seed")
      ->capture_default_str();
  trials->add_option("--jobs", jobs, "concurrent trials")->capture_default_str();
  trials->add_flag("--lenient", lenient);
  trial_flags.attach(trials);

  // export
  auto* export_cmd = app.add_subcommand("export", "export embeddings or misclassified logits");
  fs::path embeddings_out, logits_out;
  double fraction = 0.01;
  export_cmd->add_option("--data", data_dir, "corpus directory")->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("--model-dir", model_dir)->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("--part", part, "train|val|test")->capture_default_str();
  auto* emb_opt = export_cmd->add_option("--embeddings", embeddings_out, "TSV of id, label, z");
  auto* logit_opt = export_cmd->add_option("--logits", logits_out, "TSV of id, logit, label for misclassified items");
  export_cmd->add_option("--fraction", fraction, "stratified embedding sample fraction")->capture_default_str();
  export_cmd->add_flag("--lenient", lenient);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*annotate) {
      auto posts = read_posts_jsonl(corpus_path);
      auto lexicon = read_lexicon_tsv(lexicon_path);
      if (expand) lexicon = expand_lexicon(lexicon, posts, expansion);
      auto labeled = label_and_clean(posts, lexicon, positive == "proA" ? Polarity::ProA : Polarity::ProB);
      if (labeled.posts.empty()) throw ValidationError("no post survived labeling");
      FeaturizeConfig fc;
      fc.dim = feature_dim;
      if (!embeddings_in.empty()) {
        fc.mode = FeatureMode::ExternalFile;
        fc.external_path = embeddings_in;
      }
      write_corpus(to_corpus_files(labeled, fc), out_dir);
      write_lexicon_tsv(lexicon, out_dir / "lexicon.tsv");
      ojson report;
      report["posts_in"] = posts.size();
      report["labeled"] = labeled.posts.size();
      report["retweets_folded"] = labeled.drops.retweets_folded;
      report["retweets_orphaned"] = labeled.drops.retweets_orphaned;
      report["dropped_no_lexicon_tag"] = labeled.drops.no_lexicon_tag;
      report["dropped_mixed_polarity"] = labeled.drops.mixed_polarity;
      report["lexicon_size"] = lexicon.size();
      write_json(report, out_dir / "annotate_report.json");
      print_json(report);
    } else if (*build) {
      auto corpus = read_corpus(data_dir);
      auto graph = build_graph(corpus.edges, !lenient);
      save_graph(graph, graph_out);
      const auto s = stats(graph);
      ojson j;
      j["tweets"] = s.num_tweets;
      j["users"] = s.num_users;
      j["post_edges"] = s.num_post_edges;
      j["retweet_edges"] = s.num_retweet_edges;
      j["tweet_degree_histogram"] = s.tweet_degree_histogram;
      j["user_degree_histogram"] = s.user_degree_histogram;
      if (!degree_out.empty()) {
        auto deg = degree_report(graph);
        std::ofstream out(degree_out);
        if (!out) throw RuntimeFailure("cannot write " + degree_out.string());
        out << "order\tdegree\tcount\n";
        for (auto [d, c] : deg.first_order_histogram) out << "first\t" << d << '\t' << c << '\n';
        for (auto [d, c] : deg.second_order_histogram) out << "second\t" << d << '\t' << c << '\n';
      }
      print_json(j);
    } else if (*synth) {
      auto corpus = generate(sc);
      write_corpus(corpus, synth_out);
      ojson j;
      j["tweets"] = corpus.ids.size();
      j["edges"] = corpus.edges.size();
      print_json(j);
    } else if (*train_cmd) {
      auto cfg = train_flags.resolve();
      auto data = load_dataset(data_dir, lenient);
      auto run = run_trial(data, cfg, cfg.train.seed);
      fs::create_directories(model_out);
      write_json(to_json(cfg), model_out / kConfigFile);
      save_parameters(std::as_const(*run.model).params().all(), model_out / kWeightsFile);
      write_history_jsonl(run.report.history, model_out / "history.jsonl");
      write_json(to_json(run.report), model_out / "report.json");
      print_json(to_json(run.report.test));
    } else if (*evaluate) {
      auto data = load_dataset(data_dir, lenient);
      auto loaded = load_trained(data, model_dir);
      if (eval_buckets) {
        ExperimentFlags f;
        f.buckets = eval_buckets;
        auto overrides = f.resolve();
        loaded.cfg.buckets = overrides.buckets;
      }
      const auto& tweets = split_part(loaded.split, part);
      auto pred = predict(*loaded.model, tweets, loaded.cfg.train.seed, loaded.cfg.train.batch_size);
      std::vector<int> truth;
      for (auto t : tweets) truth.push_back(data.labels[t]);
      TrialReport r;
      r.seed = loaded.cfg.train.seed;
      r.model = loaded.cfg.model;
      r.test = evaluate_predictions(pred.probabilities, truth, loaded.cfg.train.threshold);
      if (eval_buckets) r.buckets = evaluate_buckets(data, tweets, pred.probabilities, loaded.cfg);
      auto j = to_json(r);
      j.erase("history");
      j.erase("best_step");
      j.erase("best_val_accuracy");
      j["part"] = part;
      if (report_out.empty()) {
        print_json(j);
      } else {
        write_json(j, report_out);
      }
    } else if (*trials) {
      auto cfg = trial_flags.resolve();
      auto seeds = parse_seeds(seeds_text, cfg.train.seed);
      auto data = load_dataset(data_dir, lenient);
      fs::create_directories(trials_out);
      auto write_all = [&](const TrialSummary& summary) {
        for (std::size_t i = 0; i < summary.reports.size(); ++i) {
          const auto name = "trial_" + std::to_string(i) + "_seed_" + std::to_string(summary.reports[i].seed) + ".json";
          write_json(to_json(summary.reports[i]), trials_out / name);
        }
        write_json(to_json(summary), trials_out / "summary.json");
      };
      auto summary = run_trials(data, cfg, seeds, jobs, write_all);
      write_all(summary);
      write_json(to_json(cfg), trials_out / kConfigFile);
      auto j = to_json(summary);
      j.erase("reports");
      print_json(j);
    } else if (*export_cmd) {
      if (emb_opt->count() == 0 && logit_opt->count() == 0) {
        throw ValidationError("export needs --embeddings and/or --logits");
      }
      auto data = load_dataset(data_dir, lenient);
      auto loaded = load_trained(data, model_dir);
      const auto& tweets = split_part(loaded.split, part);
      auto pred = predict(*loaded.model, tweets, loaded.cfg.train.seed, loaded.cfg.train.batch_size);
      ojson j;
      if (logit_opt->count() > 0) {
        j["misclassified"] =
            export_misclassified_logits(data.graph, pred, data.labels, loaded.cfg.train.threshold, logits_out);
      }
      if (emb_opt->count() > 0) {
        j["embeddings"] =
            export_embeddings(data.graph, pred, data.labels, fraction, loaded.cfg.train.seed, embeddings_out);
      }
      print_json(j);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const RuntimeFailure& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
