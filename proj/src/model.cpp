#include "sagnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "sagnn/error.hpp"

namespace sagnn {

namespace {

Var activate(Tape& tape, Var x, Activation act) {
  return act == Activation::Relu ? tape.relu(x) : x;
}

std::unordered_map<std::uint32_t, std::uint32_t> row_lookup(std::span<const std::uint32_t> nodes) {
  std::unordered_map<std::uint32_t, std::uint32_t> rows;
  rows.reserve(nodes.size());
  for (std::uint32_t i = 0; i < nodes.size(); ++i) rows.emplace(nodes[i], i);
  return rows;
}

// Gathers the per-pair transformed rows, choosing the transform by edge type.
// Shared transforms (no edge-type variant) are applied once.
Var typed_transform(Tape& tape, Var prev, std::size_t prev_rows, Parameter* const (&weights)[kNumEdgeTypes],
                    const std::vector<std::uint32_t>& rows, const std::vector<EdgeType>& types) {
  if (weights[0] == weights[1]) {
    auto transformed = tape.matmul(prev, tape.param(*weights[0]));
    return tape.gather_rows(transformed, rows);
  }
  auto post = tape.matmul(prev, tape.param(*weights[0]));
  auto retweet = tape.matmul(prev, tape.param(*weights[1]));
  auto stacked = tape.concat_rows(post, retweet);
  std::vector<std::uint32_t> picks(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    picks[i] = rows[i] + (types[i] == EdgeType::Retweet ? static_cast<std::uint32_t>(prev_rows) : 0u);
  }
  return tape.gather_rows(stacked, std::move(picks));
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::SaGnn: return "sagnn";
    case ModelKind::SaGnnNoEdgeType: return "sagnn-noet";
    case ModelKind::Baseline: return "baseline";
    case ModelKind::ContentOnly: return "content-only";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "sagnn") return ModelKind::SaGnn;
  if (text == "sagnn-noet") return ModelKind::SaGnnNoEdgeType;
  if (text == "baseline") return ModelKind::Baseline;
  if (text == "content-only") return ModelKind::ContentOnly;
  throw ValidationError("unknown model '" + std::string(text) + "'");
}

std::string_view to_string(Activation act) { return act == Activation::Relu ? "relu" : "identity"; }

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::Relu;
  if (text == "identity") return Activation::Identity;
  throw ValidationError("unknown activation '" + std::string(text) + "'");
}

std::string_view to_string(UserInit init) {
  switch (init) {
    case UserInit::Random: return "random";
    case UserInit::Centroid: return "centroid";
    case UserInit::Medoid: return "medoid";
  }
  return "?";
}

UserInit parse_user_init(std::string_view text) {
  if (text == "random") return UserInit::Random;
  if (text == "centroid") return UserInit::Centroid;
  if (text == "medoid") return UserInit::Medoid;
  throw ValidationError("unknown user init strategy '" + std::string(text) + "'");
}

void SAGNNConfig::validate() const {
  if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
  if (hidden_dim < 1) throw ValidationError("hidden_dim must be >= 1");
  if (input_dim < 1) throw ValidationError("input_dim must be >= 1");
  walk.validate();
}

void BaselineConfig::validate() const {
  if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
  if (hidden_dim < 1) throw ValidationError("hidden_dim must be >= 1");
  if (input_dim < 1) throw ValidationError("input_dim must be >= 1");
  if (fanout < 1) throw ValidationError("fanout must be >= 1");
}

// ---------------------------------------------------------------- ParameterStore

Parameter& ParameterStore::add(std::string name, Matrix value) {
  params_.emplace_back(std::move(name), std::move(value));
  return params_.back();
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<Matrix> ParameterStore::snapshot() const {
  std::vector<Matrix> out;
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterStore::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw ValidationError("snapshot does not match parameter store");
  for (std::size_t i = 0; i < values.size(); ++i) params_[i].value = values[i];
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(fan_in, fan_out);
  for (auto& v : m.data()) v = dist(rng);
  return m;
}

Matrix gather_feature_rows(const Matrix& features, std::span<const std::uint32_t> rows) {
  Matrix out(rows.size(), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= features.rows()) throw ValidationError("feature row out of range");
    std::copy(features.row(rows[i]).begin(), features.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------- SA layer

PairIndex index_pairs(std::span<const SampledNeighborhood> neighborhoods,
                      std::span<const std::uint32_t> prev_nodes) {
  auto rows = row_lookup(prev_nodes);
  auto row_of = [&](std::uint32_t tweet) {
    auto it = rows.find(tweet);
    if (it == rows.end()) throw ValidationError("neighborhood references a tweet missing from the previous layer");
    return it->second;
  };
  PairIndex idx;
  idx.offsets.push_back(0);
  for (const auto& nb : neighborhoods) {
    if (nb.entries.empty()) throw ValidationError("empty neighborhood (apply the self fallback first)");
    const auto center_row = row_of(nb.center);
    for (const auto& e : nb.entries) {
      idx.center_rows.push_back(center_row);
      idx.neighbor_rows.push_back(row_of(e.neighbor));
      idx.center_edges.push_back(e.center_edge);
      idx.neighbor_edges.push_back(e.neighbor_edge);
      idx.weights.push_back(e.weight);
    }
    idx.offsets.push_back(idx.center_rows.size());
  }
  return idx;
}

Var sa_layer_forward(Tape& tape, Var prev, const PairIndex& pairs, const SALayerParams& params,
                     Aggregator aggregator, Activation activation) {
  for (std::size_t t = 0; t < kNumEdgeTypes; ++t) {
    if (params.center[t] == nullptr || params.neighbor[t] == nullptr) {
      throw ValidationError("SA layer is missing a transform");
    }
  }
  const auto& prev_value = tape.value(prev);
  const std::size_t in_dim = prev_value.cols();
  const std::size_t out_dim = params.center[0]->value.cols();
  for (std::size_t t = 0; t < kNumEdgeTypes; ++t) {
    if (params.center[t]->value.rows() != in_dim || params.neighbor[t]->value.rows() != in_dim) {
      throw ValidationError("SA layer input dimension mismatch");
    }
  }
  if (params.combine->value.rows() != 2 * out_dim) throw ValidationError("combine transform must be 2d x d");

  const std::size_t n = prev_value.rows();
  auto centers = typed_transform(tape, prev, n, params.center, pairs.center_rows, pairs.center_edges);
  auto neighbors = typed_transform(tape, prev, n, params.neighbor, pairs.neighbor_rows, pairs.neighbor_edges);
  auto pair_rows = activate(tape, tape.concat_cols(centers, neighbors), activation);
  auto aggregated = tape.segment_aggregate(pair_rows, pairs.offsets,
                                           aggregator == Aggregator::WeightedSum ? pairs.weights
                                                                                 : std::vector<double>{},
                                           aggregator);
  return activate(tape, tape.matmul(aggregated, tape.param(*params.combine)), activation);
}

// ---------------------------------------------------------------- SaGnn

SaGnn::SaGnn(const BipartiteGraph& graph, const Matrix& features, SAGNNConfig cfg, std::uint64_t seed)
    : graph_(graph), features_(features), cfg_(std::move(cfg)) {
  if (cfg_.input_dim == 0) cfg_.input_dim = features.cols();
  cfg_.validate();
  if (features.cols() != cfg_.input_dim) throw ValidationError("feature dimension does not match input_dim");
  if (features.rows() != graph.num_tweets()) throw ValidationError("feature rows do not match tweet count");
  Rng rng(substream(seed, StreamTag::Init));
  const std::size_t d = cfg_.hidden_dim;
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const std::size_t in = l == 0 ? cfg_.input_dim : d;
    const std::string prefix = "layer" + std::to_string(l + 1) + ".";
    SALayerParams p;
    if (cfg_.edge_type_aware) {
      p.center[0] = &params_.add(prefix + "center.post", glorot_uniform(in, d, rng));
      p.center[1] = &params_.add(prefix + "center.retweet", glorot_uniform(in, d, rng));
      p.neighbor[0] = &params_.add(prefix + "neighbor.post", glorot_uniform(in, d, rng));
      p.neighbor[1] = &params_.add(prefix + "neighbor.retweet", glorot_uniform(in, d, rng));
    } else {
      p.center[0] = p.center[1] = &params_.add(prefix + "center", glorot_uniform(in, d, rng));
      p.neighbor[0] = p.neighbor[1] = &params_.add(prefix + "neighbor", glorot_uniform(in, d, rng));
    }
    p.combine = &params_.add(prefix + "combine", glorot_uniform(2 * d, d, rng));
    layers_.push_back(p);
  }
  output_ = &params_.add("output", glorot_uniform(d, 1, rng));
  if (cfg_.output_bias) output_bias_ = &params_.add("output.bias", Matrix(1, 1));
}

BatchOutput SaGnn::head(Tape& tape, Var z, std::vector<std::uint32_t> tweets) const {
  BatchOutput out;
  out.tweets = std::move(tweets);
  out.embeddings = z;
  out.logits = tape.matmul(z, tape.param(*output_));
  if (output_bias_ != nullptr) out.logits = tape.add_row(out.logits, tape.param(*output_bias_));
  out.probabilities = tape.sigmoid(out.logits);
  return out;
}

BatchOutput SaGnn::forward_blocks(Tape& tape, const SampledBlocks& blocks) const {
  if (blocks.layers.size() != cfg_.num_layers) {
    throw ValidationError("sampled blocks have " + std::to_string(blocks.layers.size()) + " layers, model has " +
                          std::to_string(cfg_.num_layers));
  }
  Var h = tape.constant(gather_feature_rows(features_, blocks.inputs));
  std::span<const std::uint32_t> prev_nodes = blocks.inputs;
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const auto& block = blocks.layers[l];
    auto pairs = index_pairs(block.neighborhoods, prev_nodes);
    h = sa_layer_forward(tape, h, pairs, layers_[l], cfg_.aggregator, cfg_.activation);
    h = tape.row_l2_normalize(h);
    prev_nodes = block.centers;
  }
  return head(tape, h, blocks.layers.back().centers);
}

BatchOutput SaGnn::forward(Tape& tape, std::span<const std::uint32_t> batch, std::uint64_t stream_seed) const {
  return forward_blocks(tape, expand_batch(graph_, batch, cfg_.walk, cfg_.num_layers, stream_seed));
}

BatchOutput SaGnn::forward_full(Tape& tape, std::span<const SampledNeighborhood> fixed) const {
  if (fixed.size() != graph_.num_tweets()) throw ValidationError("need one fixed neighborhood per tweet");
  SampledBlocks blocks;
  blocks.inputs.resize(graph_.num_tweets());
  std::iota(blocks.inputs.begin(), blocks.inputs.end(), 0u);
  LayerBlock block;
  block.centers = blocks.inputs;
  block.neighborhoods.assign(fixed.begin(), fixed.end());
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (block.neighborhoods[i].center != i) throw ValidationError("fixed neighborhoods must be in tweet order");
  }
  blocks.layers.assign(cfg_.num_layers, block);
  return forward_blocks(tape, blocks);
}

// ---------------------------------------------------------------- Baseline

Matrix init_user_features(const BipartiteGraph& graph, const Matrix& tweet_features, UserInit strategy,
                          Rng& rng) {
  if (tweet_features.rows() != graph.num_tweets()) throw ValidationError("feature rows do not match tweet count");
  const std::size_t d = tweet_features.cols();
  Matrix users(graph.num_users(), d);
  if (strategy == UserInit::Random) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (auto& v : users.data()) v = normal(rng) * scale;
    return users;
  }
  std::vector<std::uint32_t> members;
  for (std::uint32_t u = 0; u < graph.num_users(); ++u) {
    members.clear();
    for (const auto& a : graph.tweets_of(u)) members.push_back(a.index);
    members.erase(std::unique(members.begin(), members.end()), members.end());  // rows are sorted
    if (members.empty()) throw ValidationError("user '" + graph.user_ids()[u] + "' has no adjacent tweets");
    auto out = users.row(u);
    if (strategy == UserInit::Centroid) {
      for (auto t : members) {
        auto row = tweet_features.row(t);
        for (std::size_t c = 0; c < d; ++c) out[c] += row[c];
      }
      for (auto& v : out) v /= static_cast<double>(members.size());
      continue;
    }
    std::uint32_t best = members.front();
    double best_cost = std::numeric_limits<double>::infinity();
    for (auto i : members) {
      double cost = 0.0;
      for (auto j : members) {
        auto a = tweet_features.row(i);
        auto b = tweet_features.row(j);
        for (std::size_t c = 0; c < d; ++c) cost += (a[c] - b[c]) * (a[c] - b[c]);
      }
      if (cost < best_cost) {  // members ascend, so ties keep the lower index
        best_cost = cost;
        best = i;
      }
    }
    std::copy(tweet_features.row(best).begin(), tweet_features.row(best).end(), out.begin());
  }
  return users;
}

FirstOrderBlocks expand_first_order(const BipartiteGraph& graph, std::span<const std::uint32_t> batch,
                                    std::uint32_t fanout, std::size_t num_layers, std::uint64_t stream_seed) {
  if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
  const auto num_tweets = static_cast<std::uint32_t>(graph.num_tweets());
  FirstOrderBlocks blocks;
  blocks.layers.resize(num_layers);
  std::vector<std::uint32_t> frontier;
  std::unordered_set<std::uint32_t> seen;
  for (auto t : batch) {
    if (t >= num_tweets) throw ValidationError("batch tweet index out of range");
    if (seen.insert(t).second) frontier.push_back(t);
  }
  for (std::size_t layer = num_layers; layer >= 1; --layer) {
    auto& block = blocks.layers[layer - 1];
    block.centers = frontier;
    for (auto node : block.centers) {
      Rng rng(substream(stream_seed, layer, node));
      const bool is_tweet = node < num_tweets;
      auto sample = is_tweet ? sample_first_order(graph, Side::Tweet, node, fanout, rng)
                             : sample_first_order(graph, Side::User, node - num_tweets, fanout, rng);
      if (sample.empty_adjacency) throw ValidationError("baseline sampled a node with no neighbors");
      std::vector<std::uint32_t> ids;
      for (const auto& a : sample.neighbors) {
        const auto id = is_tweet ? a.index + num_tweets : a.index;
        if (!ids.empty() && ids.back() == id) continue;  // same node via both edge types
        ids.push_back(id);
        if (seen.insert(id).second) frontier.push_back(id);
      }
      block.neighbors.push_back(std::move(ids));
    }
  }
  blocks.inputs = std::move(frontier);
  return blocks;
}

FirstOrderBaseline::FirstOrderBaseline(const BipartiteGraph& graph, const Matrix& tweet_features,
                                       Matrix user_features, BaselineConfig cfg, std::uint64_t seed)
    : graph_(graph), tweet_features_(tweet_features), user_features_(std::move(user_features)), cfg_(cfg) {
  if (cfg_.input_dim == 0) cfg_.input_dim = tweet_features.cols();
  cfg_.validate();
  if (user_features_.rows() != graph.num_users() || user_features_.cols() != tweet_features.cols()) {
    throw ValidationError("user features are not initialized for this graph");
  }
  if (tweet_features.rows() != graph.num_tweets()) throw ValidationError("feature rows do not match tweet count");
  Rng rng(substream(seed, StreamTag::Init));
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const std::size_t in = l == 0 ? cfg_.input_dim : cfg_.hidden_dim;
    const std::string prefix = "layer" + std::to_string(l + 1) + ".";
    self_.push_back(&params_.add(prefix + "self", glorot_uniform(in, cfg_.hidden_dim, rng)));
    neighbor_.push_back(&params_.add(prefix + "neighbor", glorot_uniform(in, cfg_.hidden_dim, rng)));
  }
  output_ = &params_.add("output", glorot_uniform(cfg_.hidden_dim, 1, rng));
  if (cfg_.output_bias) output_bias_ = &params_.add("output.bias", Matrix(1, 1));
}

BatchOutput FirstOrderBaseline::forward_blocks(Tape& tape, const FirstOrderBlocks& blocks) const {
  if (blocks.layers.size() != cfg_.num_layers) throw ValidationError("block/layer count mismatch");
  const auto num_tweets = static_cast<std::uint32_t>(graph_.num_tweets());
  Matrix input(blocks.inputs.size(), tweet_features_.cols());
  for (std::size_t i = 0; i < blocks.inputs.size(); ++i) {
    const auto id = blocks.inputs[i];
    auto src = id < num_tweets ? tweet_features_.row(id) : user_features_.row(id - num_tweets);
    std::copy(src.begin(), src.end(), input.row(i).begin());
  }
  Var h = tape.constant(std::move(input));
  std::span<const std::uint32_t> prev_nodes = blocks.inputs;
  for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
    const auto& block = blocks.layers[l];
    auto rows = row_lookup(prev_nodes);
    std::vector<std::uint32_t> self_rows, neighbor_rows;
    std::vector<std::size_t> offsets{0};
    for (std::size_t i = 0; i < block.centers.size(); ++i) {
      self_rows.push_back(rows.at(block.centers[i]));
      for (auto n : block.neighbors[i]) neighbor_rows.push_back(rows.at(n));
      offsets.push_back(neighbor_rows.size());
    }
    auto self = tape.matmul(tape.gather_rows(h, std::move(self_rows)), tape.param(*self_[l]));
    auto mean = tape.segment_aggregate(tape.gather_rows(h, std::move(neighbor_rows)), std::move(offsets), {},
                                       Aggregator::Mean);
    auto nbr = tape.matmul(mean, tape.param(*neighbor_[l]));
    h = tape.row_l2_normalize(activate(tape, tape.add(self, nbr), cfg_.activation));
    prev_nodes = block.centers;
  }
  BatchOutput out;
  out.tweets = blocks.layers.back().centers;
  out.embeddings = h;
  out.logits = tape.matmul(h, tape.param(*output_));
  if (output_bias_ != nullptr) out.logits = tape.add_row(out.logits, tape.param(*output_bias_));
  out.probabilities = tape.sigmoid(out.logits);
  return out;
}

BatchOutput FirstOrderBaseline::forward(Tape& tape, std::span<const std::uint32_t> batch,
                                        std::uint64_t stream_seed) const {
  return forward_blocks(tape, expand_first_order(graph_, batch, cfg_.fanout, cfg_.num_layers, stream_seed));
}

// ---------------------------------------------------------------- ContentOnly

ContentOnly::ContentOnly(const Matrix& features, std::uint64_t seed) : features_(features) {
  if (features.cols() == 0) throw ValidationError("content-only model needs features");
  Rng rng(substream(seed, StreamTag::Init));
  weights_ = &params_.add("weights", glorot_uniform(features.cols(), 1, rng));
  bias_ = &params_.add("bias", Matrix(1, 1));
}

BatchOutput ContentOnly::forward(Tape& tape, std::span<const std::uint32_t> batch, std::uint64_t) const {
  BatchOutput out;
  std::unordered_set<std::uint32_t> seen;
  for (auto t : batch) {
    if (seen.insert(t).second) out.tweets.push_back(t);
  }
  out.embeddings = tape.constant(gather_feature_rows(features_, out.tweets));
  out.logits = tape.add_row(tape.matmul(out.embeddings, tape.param(*weights_)), tape.param(*bias_));
  out.probabilities = tape.sigmoid(out.logits);
  return out;
}

}  // namespace sagnn
