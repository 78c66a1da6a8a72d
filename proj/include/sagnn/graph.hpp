#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sagnn {

// Stable integer codes; they are written to disk.
enum class EdgeType : std::uint8_t { Post = 0, Retweet = 1 };

inline constexpr std::size_t kNumEdgeTypes = 2;

std::string_view to_string(EdgeType type);
// Accepts "post" / "retweet" (case-sensitive, as written by the edge TSV).
EdgeType parse_edge_type(std::string_view text);

// One behavior record before indexing: user `user_id` posted or retweeted
// tweet `tweet_id`. Tweet and user ids live in separate namespaces, so the
// same string may name a tweet and a user without creating a same-side edge.
struct EdgeRecord {
  std::string tweet_id;
  std::string user_id;
  EdgeType type = EdgeType::Post;

  bool operator==(const EdgeRecord&) const = default;
};

// Entry in one CSR row: the node on the *other* side and the edge type.
struct Adjacent {
  std::uint32_t index = 0;
  EdgeType type = EdgeType::Post;

  auto operator<=>(const Adjacent&) const = default;
};

class Csr {
 public:
  Csr() = default;
  Csr(std::vector<std::uint64_t> offsets, std::vector<Adjacent> entries);

  std::size_t num_rows() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_entries() const { return entries_.size(); }
  std::span<const Adjacent> row(std::size_t r) const {
    return {entries_.data() + offsets_[r], entries_.data() + offsets_[r + 1]};
  }
  const std::vector<std::uint64_t>& offsets() const { return offsets_; }
  const std::vector<Adjacent>& entries() const { return entries_; }

  bool operator==(const Csr&) const = default;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<Adjacent> entries_;
};

// Immutable user-tweet interaction graph. Rows of the tweet side reference
// user indices and rows of the user side reference tweet indices; there is
// no representation for a same-side edge.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;

  std::size_t num_tweets() const { return tweet_ids_.size(); }
  std::size_t num_users() const { return user_ids_.size(); }
  std::size_t num_edges() const { return tweet_to_user_.num_entries(); }
  bool empty() const { return tweet_ids_.empty(); }

  std::span<const Adjacent> users_of(std::uint32_t tweet) const { return tweet_to_user_.row(tweet); }
  std::span<const Adjacent> tweets_of(std::uint32_t user) const { return user_to_tweet_.row(user); }

  const Csr& tweet_to_user() const { return tweet_to_user_; }
  const Csr& user_to_tweet() const { return user_to_tweet_; }
  const std::vector<std::string>& tweet_ids() const { return tweet_ids_; }
  const std::vector<std::string>& user_ids() const { return user_ids_; }

  std::optional<std::uint32_t> find_tweet(std::string_view id) const;
  std::optional<std::uint32_t> find_user(std::string_view id) const;

  // Every (tweet, user, type) triple, in tweet-major order.
  std::vector<EdgeRecord> edge_records() const;

  friend bool operator==(const BipartiteGraph& a, const BipartiteGraph& b) {
    return a.tweet_to_user_ == b.tweet_to_user_ && a.user_to_tweet_ == b.user_to_tweet_ &&
           a.tweet_ids_ == b.tweet_ids_ && a.user_ids_ == b.user_ids_;
  }

  // Assembles a graph from already-indexed parts; validates that the two
  // directions are transposes of each other and rows are sorted and unique.
  static BipartiteGraph from_parts(std::vector<std::string> tweet_ids,
                                   std::vector<std::string> user_ids, Csr tweet_to_user,
                                   Csr user_to_tweet);

 private:
  void index_ids();

  Csr tweet_to_user_;
  Csr user_to_tweet_;
  std::vector<std::string> tweet_ids_;
  std::vector<std::string> user_ids_;
  std::unordered_map<std::string, std::uint32_t> tweet_lookup_;
  std::unordered_map<std::string, std::uint32_t> user_lookup_;
};

struct GraphStats {
  std::size_t num_tweets = 0;
  std::size_t num_users = 0;
  std::size_t num_post_edges = 0;
  std::size_t num_retweet_edges = 0;
  // histogram[d] = number of nodes with exactly d adjacency entries.
  std::vector<std::size_t> tweet_degree_histogram;
  std::vector<std::size_t> user_degree_histogram;

  bool operator==(const GraphStats&) const = default;
};

// Dense indices follow first appearance in `edges`; duplicate triples
// collapse. With strict_author every tweet must have exactly one Post edge.
BipartiteGraph build_graph(std::span<const EdgeRecord> edges, bool strict_author);

GraphStats stats(const BipartiteGraph& graph);

// Binary format: "SAGG", u32 version, counts, CSR arrays, id tables.
void save_graph(const BipartiteGraph& graph, const std::filesystem::path& path);
BipartiteGraph load_graph(const std::filesystem::path& path);

// Edge TSV: tweet_id<TAB>user_id<TAB>{post|retweet}. Blank lines are skipped;
// anything else malformed is reported with its 1-based line number.
std::vector<EdgeRecord> read_edge_tsv(const std::filesystem::path& path);
void write_edge_tsv(std::span<const EdgeRecord> edges, const std::filesystem::path& path);

}  // namespace sagnn
