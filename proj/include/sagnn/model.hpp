#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sagnn/autodiff.hpp"
#include "sagnn/graph.hpp"
#include "sagnn/rng.hpp"
#include "sagnn/sampler.hpp"

namespace sagnn {

enum class ModelKind : std::uint8_t { SaGnn, SaGnnNoEdgeType, Baseline, ContentOnly };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);  // sagnn|sagnn-noet|baseline|content-only

enum class Activation : std::uint8_t { Relu, Identity };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view text);

enum class UserInit : std::uint8_t { Random, Centroid, Medoid };

std::string_view to_string(UserInit init);
UserInit parse_user_init(std::string_view text);

struct SAGNNConfig {
  std::size_t num_layers = 3;
  std::size_t hidden_dim = 64;
  std::size_t input_dim = 0;
  Aggregator aggregator = Aggregator::Max;
  // When false, W_cen[Post]/W_cen[Retweet] (and the W_nei pair) are one
  // shared parameter.
  bool edge_type_aware = true;
  Activation activation = Activation::Relu;
  bool output_bias = false;
  WalkConfig walk;

  void validate() const;
};

struct BaselineConfig {
  UserInit init_strategy = UserInit::Medoid;
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 64;
  std::size_t input_dim = 0;
  std::uint32_t fanout = 10;
  Activation activation = Activation::Relu;
  bool output_bias = false;

  void validate() const;
};

// Owns parameters at stable addresses so layers can share one.
class ParameterStore {
 public:
  Parameter& add(std::string name, Matrix value);
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);
  std::size_t size() const { return params_.size(); }

 private:
  std::deque<Parameter> params_;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Transforms of one skip-aggregation layer, indexed by EdgeType code.
struct SALayerParams {
  Parameter* center[kNumEdgeTypes] = {nullptr, nullptr};
  Parameter* neighbor[kNumEdgeTypes] = {nullptr, nullptr};
  Parameter* combine = nullptr;  // 2d x d
};

// Center-neighbor pairs of one layer resolved to rows of the previous
// layer's output. Pairs of center i occupy [offsets[i], offsets[i+1]).
struct PairIndex {
  std::vector<std::uint32_t> center_rows;
  std::vector<std::uint32_t> neighbor_rows;
  std::vector<EdgeType> center_edges;
  std::vector<EdgeType> neighbor_edges;
  std::vector<double> weights;
  std::vector<std::size_t> offsets;
};

// `prev_nodes` lists the tweet held by each row of the previous layer's
// output. Every center and neighbor must appear there.
PairIndex index_pairs(std::span<const SampledNeighborhood> neighborhoods,
                      std::span<const std::uint32_t> prev_nodes);

// a_v = AGG{ act([h_v W_cen[e_v] || h_u W_nei[e_u]]) }, h'_v = act(a_v W_c).
// Row i of the result belongs to the i-th center in `pairs`.
Var sa_layer_forward(Tape& tape, Var prev, const PairIndex& pairs, const SALayerParams& params,
                     Aggregator aggregator, Activation activation);

struct BatchOutput {
  std::vector<std::uint32_t> tweets;  // tweet index of each output row
  Var embeddings;
  Var logits;
  Var probabilities;
};

// Common interface the trainer drives.
class Model {
 public:
  virtual ~Model() = default;
  virtual ModelKind kind() const = 0;
  // Forward pass for `batch`. All sampling randomness derives from
  // `stream_seed`.
  virtual BatchOutput forward(Tape& tape, std::span<const std::uint32_t> batch,
                              std::uint64_t stream_seed) const = 0;
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

 protected:
  ParameterStore params_;
};

class SaGnn : public Model {
 public:
  SaGnn(const BipartiteGraph& graph, const Matrix& features, SAGNNConfig cfg, std::uint64_t seed);

  ModelKind kind() const override {
    return cfg_.edge_type_aware ? ModelKind::SaGnn : ModelKind::SaGnnNoEdgeType;
  }
  BatchOutput forward(Tape& tape, std::span<const std::uint32_t> batch,
                      std::uint64_t stream_seed) const override;
  // Runs the stacked layers over pre-sampled blocks (mini-batch mode).
  BatchOutput forward_blocks(Tape& tape, const SampledBlocks& blocks) const;
  // Every tweet, every layer, with one fixed neighborhood per tweet.
  BatchOutput forward_full(Tape& tape, std::span<const SampledNeighborhood> fixed) const;

  const SAGNNConfig& config() const { return cfg_; }
  std::vector<SALayerParams>& layers() { return layers_; }
  const std::vector<SALayerParams>& layers() const { return layers_; }
  Parameter& output() { return *output_; }
  Parameter* output_bias() { return output_bias_; }

 private:
  BatchOutput head(Tape& tape, Var z, std::vector<std::uint32_t> tweets) const;

  const BipartiteGraph& graph_;
  const Matrix& features_;
  SAGNNConfig cfg_;
  std::vector<SALayerParams> layers_;
  Parameter* output_ = nullptr;
  Parameter* output_bias_ = nullptr;
};

// Assigns each user a feature row derived from its adjacent tweets:
// Random draws N(0,1)/sqrt(dim); Centroid averages; Medoid picks the tweet
// row with the least sum of squared distances to the others (ties -> lower
// tweet index).
Matrix init_user_features(const BipartiteGraph& graph, const Matrix& tweet_features, UserInit strategy,
                          Rng& rng);

struct FirstOrderLayer {
  std::vector<std::uint32_t> centers;                  // node ids, see FirstOrderBaseline
  std::vector<std::vector<std::uint32_t>> neighbors;   // aligned with centers
};

struct FirstOrderBlocks {
  std::vector<std::uint32_t> inputs;
  std::vector<FirstOrderLayer> layers;  // layers[0] is layer 1
};

// First-order GraphSAGE-style expansion over both node kinds, `fanout`
// uniform draws (with replacement, deduplicated) per node and layer.
FirstOrderBlocks expand_first_order(const BipartiteGraph& graph, std::span<const std::uint32_t> batch,
                                    std::uint32_t fanout, std::size_t num_layers,
                                    std::uint64_t stream_seed);

// Mean-aggregation message passing over the user-tweet graph:
// h'_v = act(h_v W_self + mean_{u in S(v)} h_u W_nei), rows L2-normalized.
// Node ids: tweets are [0, T), user j is T + j.
class FirstOrderBaseline : public Model {
 public:
  FirstOrderBaseline(const BipartiteGraph& graph, const Matrix& tweet_features, Matrix user_features,
                     BaselineConfig cfg, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::Baseline; }
  BatchOutput forward(Tape& tape, std::span<const std::uint32_t> batch,
                      std::uint64_t stream_seed) const override;
  BatchOutput forward_blocks(Tape& tape, const FirstOrderBlocks& blocks) const;

  const BaselineConfig& config() const { return cfg_; }
  const Matrix& user_features() const { return user_features_; }
  Parameter& self_transform(std::size_t layer) { return *self_[layer]; }
  Parameter& neighbor_transform(std::size_t layer) { return *neighbor_[layer]; }
  Parameter& output() { return *output_; }

 private:
  const BipartiteGraph& graph_;
  const Matrix& tweet_features_;
  Matrix user_features_;
  BaselineConfig cfg_;
  std::vector<Parameter*> self_;
  std::vector<Parameter*> neighbor_;
  Parameter* output_ = nullptr;
  Parameter* output_bias_ = nullptr;
};

// Logistic regression on the tweet's own feature row.
class ContentOnly : public Model {
 public:
  ContentOnly(const Matrix& features, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::ContentOnly; }
  BatchOutput forward(Tape& tape, std::span<const std::uint32_t> batch,
                      std::uint64_t stream_seed) const override;

 private:
  const Matrix& features_;
  Parameter* weights_ = nullptr;
  Parameter* bias_ = nullptr;
};

Matrix gather_feature_rows(const Matrix& features, std::span<const std::uint32_t> rows);

}  // namespace sagnn
