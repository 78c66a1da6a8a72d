#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "sagnn/graph.hpp"
#include "sagnn/rng.hpp"

namespace sagnn {

// Length-2 random walk settings. The walk length itself is fixed.
struct WalkConfig {
  std::uint32_t num_walks = 20;
  std::uint32_t top_k = 10;
  std::uint64_t rng_seed = 0;
  bool exclude_self = true;

  void validate() const;
};

// One center-neighbor pair: the neighbor tweet, the center's edge to the
// bridge user, and the neighbor's edge to the same bridge user.
struct NeighborEntry {
  std::uint32_t neighbor = 0;
  EdgeType center_edge = EdgeType::Post;
  EdgeType neighbor_edge = EdgeType::Post;
  std::uint32_t visit_count = 0;
  double weight = 0.0;

  bool operator==(const NeighborEntry&) const = default;
};

struct SampledNeighborhood {
  std::uint32_t center = 0;
  // Sorted by descending visit_count, ties by ascending neighbor index.
  std::vector<NeighborEntry> entries;
  // The center has no adjacent users at all.
  bool isolated = false;
  // `entries` holds only the self-pair placeholder (see with_self_fallback).
  bool self_fallback = false;

  bool operator==(const SampledNeighborhood&) const = default;
};

// Runs cfg.num_walks walks tweet -> user -> tweet from `center` and keeps
// the cfg.top_k most visited tweets. Each retained pair is attributed to the
// bridge (user, center edge, neighbor edge) traversed most often on walks that
// reached it; ties prefer a Post center edge, then the smaller user index.
SampledNeighborhood sample_neighborhood(const BipartiteGraph& graph, std::uint32_t center,
                                        const WalkConfig& cfg, Rng& rng);
// Same, on the per-center stream substream(cfg.rng_seed, center).
SampledNeighborhood sample_neighborhood(const BipartiteGraph& graph, std::uint32_t center,
                                        const WalkConfig& cfg);

// Empty neighborhoods become a single self-pair (neighbor = center, both
// edges Post, weight 1) so every center feeds at least one pair downstream.
SampledNeighborhood with_self_fallback(SampledNeighborhood nb);

// Exact law of the walk endpoint: sum over adjacency entries w of the center
// of 1/deg(center) * 1/deg(w) per entry of w. Degrees count adjacency
// entries. With exclude_self the center is removed and the rest rescaled.
std::map<std::uint32_t, double> exact_two_step_distribution(const BipartiteGraph& graph,
                                                            std::uint32_t center,
                                                            bool exclude_self = true);

enum class Side : std::uint8_t { Tweet, User };

struct FirstOrderSample {
  std::vector<Adjacent> neighbors;  // unique, ascending
  bool empty_adjacency = false;
};

// k draws with replacement from the node's adjacency list, deduplicated.
FirstOrderSample sample_first_order(const BipartiteGraph& graph, Side side, std::uint32_t node,
                                    std::uint32_t k, Rng& rng);

struct LayerBlock {
  // Tweets whose output at this layer is required. Each layer's list starts
  // with the next layer's list, so a center keeps its row position.
  std::vector<std::uint32_t> centers;
  std::vector<SampledNeighborhood> neighborhoods;  // aligned with centers; fallback applied
};

struct SampledBlocks {
  // Tweets whose raw features feed layer 1: layer-1 centers first, then
  // their neighbors in first-seen order.
  std::vector<std::uint32_t> inputs;
  // layers[0] is layer 1; layers.back() is layer L whose centers are the batch.
  std::vector<LayerBlock> layers;
};

// Mini-batch frontier expansion. The neighborhood of (layer l, center v) is
// drawn on substream(stream_seed, l, v), so results do not depend on the
// order centers are visited.
SampledBlocks expand_batch(const BipartiteGraph& graph, std::span<const std::uint32_t> batch,
                           const WalkConfig& cfg, std::size_t num_layers,
                           std::uint64_t stream_seed);

// One fixed neighborhood per tweet (fallback applied), for full-graph mode.
std::vector<SampledNeighborhood> sample_all(const BipartiteGraph& graph, const WalkConfig& cfg);

// Debug dump: center, neighbor, center_edge, neighbor_edge, count, weight.
void write_neighborhood_tsv(const BipartiteGraph& graph,
                            std::span<const SampledNeighborhood> neighborhoods,
                            const std::filesystem::path& path);

}  // namespace sagnn
