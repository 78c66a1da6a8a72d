#include "sagnn/sampler.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_set>

#include "sagnn/error.hpp"
#include "text_util.hpp"

namespace sagnn {

namespace {

struct Visit {
  std::uint32_t neighbor;
  EdgeType center_edge;
  std::uint32_t user;
  EdgeType neighbor_edge;

  auto key() const { return std::tie(neighbor, center_edge, user, neighbor_edge); }
};

}  // namespace

void WalkConfig::validate() const {
  if (num_walks < 1) throw ValidationError("num_walks must be >= 1");
  if (top_k < 1) throw ValidationError("top_k must be >= 1");
}

SampledNeighborhood sample_neighborhood(const BipartiteGraph& graph, std::uint32_t center,
                                        const WalkConfig& cfg, Rng& rng) {
  if (center >= graph.num_tweets()) throw ValidationError("center tweet index out of range");
  cfg.validate();
  SampledNeighborhood nb;
  nb.center = center;
  auto users = graph.users_of(center);
  if (users.empty()) {
    nb.isolated = true;
    return nb;
  }

  std::vector<Visit> visits;
  visits.reserve(cfg.num_walks);
  for (std::uint32_t w = 0; w < cfg.num_walks; ++w) {
    const auto& bridge = users[uniform_index(rng, users.size())];
    auto tweets = graph.tweets_of(bridge.index);
    const auto& hop = tweets[uniform_index(rng, tweets.size())];
    if (cfg.exclude_self && hop.index == center) continue;
    visits.push_back({hop.index, bridge.type, bridge.index, hop.type});
  }
  // Sorting by (neighbor, center_edge, user, neighbor_edge) puts each
  // neighbor's bridges together in tie-break order.
  std::sort(visits.begin(), visits.end(),
            [](const Visit& a, const Visit& b) { return a.key() < b.key(); });

  std::vector<NeighborEntry> all;
  for (std::size_t i = 0; i < visits.size();) {
    std::size_t j = i;
    NeighborEntry entry{visits[i].neighbor, visits[i].center_edge, visits[i].neighbor_edge, 0, 0.0};
    std::uint32_t best_bridge = 0;
    while (j < visits.size() && visits[j].neighbor == visits[i].neighbor) {
      std::size_t k = j;
      while (k < visits.size() && visits[k].key() == visits[j].key()) ++k;
      auto count = static_cast<std::uint32_t>(k - j);
      // Strict '>' keeps the first (preferred) bridge among equals.
      if (count > best_bridge) {
        best_bridge = count;
        entry.center_edge = visits[j].center_edge;
        entry.neighbor_edge = visits[j].neighbor_edge;
      }
      entry.visit_count += count;
      j = k;
    }
    all.push_back(entry);
    i = j;
  }

  std::sort(all.begin(), all.end(), [](const NeighborEntry& a, const NeighborEntry& b) {
    if (a.visit_count != b.visit_count) return a.visit_count > b.visit_count;
    return a.neighbor < b.neighbor;
  });
  if (all.size() > cfg.top_k) all.resize(cfg.top_k);
  double total = 0.0;
  for (const auto& e : all) total += e.visit_count;
  for (auto& e : all) e.weight = e.visit_count / total;
  nb.entries = std::move(all);
  return nb;
}

SampledNeighborhood sample_neighborhood(const BipartiteGraph& graph, std::uint32_t center,
                                        const WalkConfig& cfg) {
  Rng rng(substream(cfg.rng_seed, center));
  return sample_neighborhood(graph, center, cfg, rng);
}

SampledNeighborhood with_self_fallback(SampledNeighborhood nb) {
  if (nb.entries.empty()) {
    nb.entries.push_back({nb.center, EdgeType::Post, EdgeType::Post, 0, 1.0});
    nb.self_fallback = true;
  }
  return nb;
}

std::map<std::uint32_t, double> exact_two_step_distribution(const BipartiteGraph& graph,
                                                            std::uint32_t center,
                                                            bool exclude_self) {
  if (center >= graph.num_tweets()) throw ValidationError("center tweet index out of range");
  std::map<std::uint32_t, double> dist;
  auto users = graph.users_of(center);
  if (users.empty()) return dist;
  const double p_first = 1.0 / static_cast<double>(users.size());
  for (const auto& bridge : users) {
    auto tweets = graph.tweets_of(bridge.index);
    const double p_second = p_first / static_cast<double>(tweets.size());
    for (const auto& hop : tweets) dist[hop.index] += p_second;
  }
  if (exclude_self) {
    dist.erase(center);
    double total = 0.0;
    for (const auto& [t, p] : dist) total += p;
    if (total <= 0.0) return {};
    for (auto& [t, p] : dist) p /= total;
  }
  return dist;
}

FirstOrderSample sample_first_order(const BipartiteGraph& graph, Side side, std::uint32_t node,
                                    std::uint32_t k, Rng& rng) {
  std::span<const Adjacent> row;
  if (side == Side::Tweet) {
    if (node >= graph.num_tweets()) throw ValidationError("tweet index out of range");
    row = graph.users_of(node);
  } else {
    if (node >= graph.num_users()) throw ValidationError("user index out of range");
    row = graph.tweets_of(node);
  }
  FirstOrderSample out;
  if (row.empty()) {
    out.empty_adjacency = true;
    return out;
  }
  out.neighbors.reserve(k);
  for (std::uint32_t i = 0; i < k; ++i) out.neighbors.push_back(row[uniform_index(rng, row.size())]);
  std::sort(out.neighbors.begin(), out.neighbors.end());
  out.neighbors.erase(std::unique(out.neighbors.begin(), out.neighbors.end()), out.neighbors.end());
  return out;
}

SampledBlocks expand_batch(const BipartiteGraph& graph, std::span<const std::uint32_t> batch,
                           const WalkConfig& cfg, std::size_t num_layers,
                           std::uint64_t stream_seed) {
  if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
  cfg.validate();
  SampledBlocks blocks;
  blocks.layers.resize(num_layers);

  std::vector<std::uint32_t> frontier;
  std::unordered_set<std::uint32_t> seen;
  for (auto t : batch) {
    if (t >= graph.num_tweets()) throw ValidationError("batch tweet index out of range");
    if (seen.insert(t).second) frontier.push_back(t);
  }

  for (std::size_t layer = num_layers; layer >= 1; --layer) {
    auto& block = blocks.layers[layer - 1];
    block.centers = frontier;
    block.neighborhoods.reserve(frontier.size());
    for (auto center : block.centers) {
      Rng rng(substream(stream_seed, layer, center));
      block.neighborhoods.push_back(with_self_fallback(sample_neighborhood(graph, center, cfg, rng)));
      for (const auto& e : block.neighborhoods.back().entries) {
        if (seen.insert(e.neighbor).second) frontier.push_back(e.neighbor);
      }
    }
    // `seen` already equals the set of `frontier`, so the next layer's
    // centers extend this one as a prefix.
  }
  blocks.inputs = std::move(frontier);
  return blocks;
}

std::vector<SampledNeighborhood> sample_all(const BipartiteGraph& graph, const WalkConfig& cfg) {
  cfg.validate();
  std::vector<SampledNeighborhood> out;
  out.reserve(graph.num_tweets());
  for (std::uint32_t t = 0; t < graph.num_tweets(); ++t) {
    out.push_back(with_self_fallback(sample_neighborhood(graph, t, cfg)));
  }
  return out;
}

void write_neighborhood_tsv(const BipartiteGraph& graph,
                            std::span<const SampledNeighborhood> neighborhoods,
                            const std::filesystem::path& path) {
  auto out = text::open_out(path.string());
  const auto& ids = graph.tweet_ids();
  for (const auto& nb : neighborhoods) {
    for (const auto& e : nb.entries) {
      out << ids.at(nb.center) << '\t' << ids.at(e.neighbor) << '\t' << to_string(e.center_edge)
          << '\t' << to_string(e.neighbor_edge) << '\t' << e.visit_count << '\t'
          << text::format_double(e.weight) << '\n';
    }
  }
}

}  // namespace sagnn
