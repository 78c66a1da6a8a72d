#include "sagnn/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>

#include "binary_io.hpp"
#include "sagnn/error.hpp"
#include "text_util.hpp"

namespace sagnn {

namespace {

constexpr std::uint32_t kGraphFormatVersion = 1;

void check_rows(const Csr& csr, std::size_t other_side, const char* name) {
  for (std::size_t r = 0; r < csr.num_rows(); ++r) {
    auto row = csr.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i].index >= other_side) {
        throw ValidationError(std::string(name) + ": neighbor index out of range");
      }
      if (static_cast<std::uint8_t>(row[i].type) >= kNumEdgeTypes) {
        throw ValidationError(std::string(name) + ": unknown edge type code");
      }
      if (i > 0 && !(row[i - 1] < row[i])) {
        throw ValidationError(std::string(name) + ": row not sorted/unique");
      }
    }
  }
}

// Row-major (row, neighbor, type) triples -> CSR with rows sorted.
Csr make_csr(std::size_t rows, std::vector<std::tuple<std::uint32_t, std::uint32_t, EdgeType>> triples) {
  std::sort(triples.begin(), triples.end());
  std::vector<std::uint64_t> offsets(rows + 1, 0);
  std::vector<Adjacent> entries;
  entries.reserve(triples.size());
  for (const auto& [r, n, t] : triples) {
    ++offsets[r + 1];
    entries.push_back({n, t});
  }
  for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
  return Csr(std::move(offsets), std::move(entries));
}

void put_csr(std::ostream& out, const Csr& csr) {
  binio::put(out, static_cast<std::uint64_t>(csr.num_entries()));
  for (auto o : csr.offsets()) binio::put(out, o);
  for (const auto& e : csr.entries()) {
    binio::put(out, e.index);
    binio::put(out, static_cast<std::uint8_t>(e.type));
  }
}

Csr get_csr(std::istream& in, std::size_t rows) {
  auto nnz = binio::get<std::uint64_t>(in, "csr size");
  if (nnz > (1ULL << 40)) throw ValidationError("corrupt csr size");
  std::vector<std::uint64_t> offsets(rows + 1);
  for (auto& o : offsets) o = binio::get<std::uint64_t>(in, "csr offsets");
  if (offsets.front() != 0 || offsets.back() != nnz ||
      !std::is_sorted(offsets.begin(), offsets.end())) {
    throw ValidationError("corrupt csr offsets");
  }
  std::vector<Adjacent> entries(nnz);
  for (auto& e : entries) {
    e.index = binio::get<std::uint32_t>(in, "csr entries");
    auto code = binio::get<std::uint8_t>(in, "csr entries");
    if (code >= kNumEdgeTypes) throw ValidationError("unknown edge type code in graph file");
    e.type = static_cast<EdgeType>(code);
  }
  return Csr(std::move(offsets), std::move(entries));
}

}  // namespace

std::string_view to_string(EdgeType type) {
  return type == EdgeType::Post ? "post" : "retweet";
}

EdgeType parse_edge_type(std::string_view text) {
  if (text == "post") return EdgeType::Post;
  if (text == "retweet") return EdgeType::Retweet;
  throw ValidationError("unknown edge type '" + std::string(text) + "'");
}

Csr::Csr(std::vector<std::uint64_t> offsets, std::vector<Adjacent> entries)
    : offsets_(std::move(offsets)), entries_(std::move(entries)) {}

std::optional<std::uint32_t> BipartiteGraph::find_tweet(std::string_view id) const {
  auto it = tweet_lookup_.find(std::string(id));
  if (it == tweet_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> BipartiteGraph::find_user(std::string_view id) const {
  auto it = user_lookup_.find(std::string(id));
  if (it == user_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<EdgeRecord> BipartiteGraph::edge_records() const {
  std::vector<EdgeRecord> out;
  out.reserve(num_edges());
  for (std::uint32_t t = 0; t < num_tweets(); ++t) {
    for (const auto& a : users_of(t)) out.push_back({tweet_ids_[t], user_ids_[a.index], a.type});
  }
  return out;
}

void BipartiteGraph::index_ids() {
  tweet_lookup_.clear();
  user_lookup_.clear();
  for (std::uint32_t i = 0; i < tweet_ids_.size(); ++i) {
    if (!tweet_lookup_.emplace(tweet_ids_[i], i).second) {
      throw ValidationError("duplicate tweet id '" + tweet_ids_[i] + "'");
    }
  }
  for (std::uint32_t i = 0; i < user_ids_.size(); ++i) {
    if (!user_lookup_.emplace(user_ids_[i], i).second) {
      throw ValidationError("duplicate user id '" + user_ids_[i] + "'");
    }
  }
}

BipartiteGraph BipartiteGraph::from_parts(std::vector<std::string> tweet_ids,
                                          std::vector<std::string> user_ids, Csr tweet_to_user,
                                          Csr user_to_tweet) {
  if (tweet_to_user.num_rows() != tweet_ids.size() || user_to_tweet.num_rows() != user_ids.size()) {
    throw ValidationError("graph row counts do not match id tables");
  }
  check_rows(tweet_to_user, user_ids.size(), "tweet_to_user");
  check_rows(user_to_tweet, tweet_ids.size(), "user_to_tweet");
  // Transpose check: rebuild one direction from the other.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, EdgeType>> flipped;
  flipped.reserve(tweet_to_user.num_entries());
  for (std::uint32_t t = 0; t < tweet_to_user.num_rows(); ++t) {
    for (const auto& a : tweet_to_user.row(t)) flipped.emplace_back(a.index, t, a.type);
  }
  if (!(make_csr(user_ids.size(), std::move(flipped)) == user_to_tweet)) {
    throw ValidationError("graph directions are not transposes of each other");
  }
  BipartiteGraph g;
  g.tweet_ids_ = std::move(tweet_ids);
  g.user_ids_ = std::move(user_ids);
  g.tweet_to_user_ = std::move(tweet_to_user);
  g.user_to_tweet_ = std::move(user_to_tweet);
  g.index_ids();
  return g;
}

BipartiteGraph build_graph(std::span<const EdgeRecord> edges, bool strict_author) {
  if (edges.empty()) throw ValidationError("edge list is empty");

  std::vector<std::string> tweet_ids, user_ids;
  std::unordered_map<std::string, std::uint32_t> tweet_index, user_index;
  auto intern = [](std::unordered_map<std::string, std::uint32_t>& map,
                   std::vector<std::string>& ids, const std::string& id) {
    auto [it, inserted] = map.emplace(id, static_cast<std::uint32_t>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  };

  std::vector<std::tuple<std::uint32_t, std::uint32_t, EdgeType>> by_tweet;
  by_tweet.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.tweet_id.empty() || e.user_id.empty()) throw ValidationError("edge with empty id");
    auto t = intern(tweet_index, tweet_ids, e.tweet_id);
    auto u = intern(user_index, user_ids, e.user_id);
    by_tweet.emplace_back(t, u, e.type);
  }
  std::sort(by_tweet.begin(), by_tweet.end());
  by_tweet.erase(std::unique(by_tweet.begin(), by_tweet.end()), by_tweet.end());

  if (strict_author) {
    std::vector<std::uint32_t> posts(tweet_ids.size(), 0);
    for (const auto& [t, u, type] : by_tweet) {
      if (type == EdgeType::Post) ++posts[t];
    }
    for (std::size_t t = 0; t < posts.size(); ++t) {
      if (posts[t] != 1) {
        throw ValidationError("tweet '" + tweet_ids[t] + "' has " + std::to_string(posts[t]) +
                              " post edges (strict author mode requires exactly 1)");
      }
    }
  }

  std::vector<std::tuple<std::uint32_t, std::uint32_t, EdgeType>> by_user;
  by_user.reserve(by_tweet.size());
  for (const auto& [t, u, type] : by_tweet) by_user.emplace_back(u, t, type);

  auto t2u = make_csr(tweet_ids.size(), std::move(by_tweet));
  auto u2t = make_csr(user_ids.size(), std::move(by_user));
  return BipartiteGraph::from_parts(std::move(tweet_ids), std::move(user_ids), std::move(t2u),
                                    std::move(u2t));
}

GraphStats stats(const BipartiteGraph& graph) {
  GraphStats s;
  s.num_tweets = graph.num_tweets();
  s.num_users = graph.num_users();
  for (std::uint32_t t = 0; t < graph.num_tweets(); ++t) {
    auto row = graph.users_of(t);
    for (const auto& a : row) {
      if (a.type == EdgeType::Post) {
        ++s.num_post_edges;
      } else {
        ++s.num_retweet_edges;
      }
    }
    if (s.tweet_degree_histogram.size() <= row.size()) s.tweet_degree_histogram.resize(row.size() + 1, 0);
    ++s.tweet_degree_histogram[row.size()];
  }
  for (std::uint32_t u = 0; u < graph.num_users(); ++u) {
    auto deg = graph.tweets_of(u).size();
    if (s.user_degree_histogram.size() <= deg) s.user_degree_histogram.resize(deg + 1, 0);
    ++s.user_degree_histogram[deg];
  }
  return s;
}

void save_graph(const BipartiteGraph& graph, const std::filesystem::path& path) {
  if (graph.empty()) throw ValidationError("refusing to save an empty graph");
  auto out = text::open_out(path.string());
  out.write("SAGG", 4);
  binio::put(out, kGraphFormatVersion);
  binio::put(out, static_cast<std::uint64_t>(graph.num_tweets()));
  binio::put(out, static_cast<std::uint64_t>(graph.num_users()));
  put_csr(out, graph.tweet_to_user());
  put_csr(out, graph.user_to_tweet());
  for (const auto& id : graph.tweet_ids()) binio::put_string(out, id);
  for (const auto& id : graph.user_ids()) binio::put_string(out, id);
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

BipartiteGraph load_graph(const std::filesystem::path& path) {
  auto in = text::open_in(path.string());
  binio::expect_magic(in, "SAGG");
  auto version = binio::get<std::uint32_t>(in, "version");
  if (version != kGraphFormatVersion) {
    throw ValidationError("graph format version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kGraphFormatVersion) + ")");
  }
  auto num_tweets = binio::get<std::uint64_t>(in, "tweet count");
  auto num_users = binio::get<std::uint64_t>(in, "user count");
  if (num_tweets == 0 || num_tweets > (1ULL << 32) || num_users > (1ULL << 32)) {
    throw ValidationError("corrupt node counts in graph file");
  }
  auto t2u = get_csr(in, num_tweets);
  auto u2t = get_csr(in, num_users);
  std::vector<std::string> tweet_ids(num_tweets), user_ids(num_users);
  for (auto& id : tweet_ids) id = binio::get_string(in, "tweet ids");
  for (auto& id : user_ids) id = binio::get_string(in, "user ids");
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError("trailing bytes in graph file");
  return BipartiteGraph::from_parts(std::move(tweet_ids), std::move(user_ids), std::move(t2u),
                                    std::move(u2t));
}

std::vector<EdgeRecord> read_edge_tsv(const std::filesystem::path& path) {
  auto in = text::open_in(path.string());
  std::vector<EdgeRecord> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = text::strip_cr(line);
    if (view.empty()) continue;
    auto fields = text::split(view, '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw ValidationError(text::where(path.string(), line_no) +
                            "expected tweet_id<TAB>user_id<TAB>{post|retweet}");
    }
    EdgeType type;
    try {
      type = parse_edge_type(fields[2]);
    } catch (const ValidationError& e) {
      throw ValidationError(text::where(path.string(), line_no) + e.what());
    }
    edges.push_back({std::string(fields[0]), std::string(fields[1]), type});
  }
  return edges;
}

void write_edge_tsv(std::span<const EdgeRecord> edges, const std::filesystem::path& path) {
  auto out = text::open_out(path.string());
  for (const auto& e : edges) {
    out << e.tweet_id << '\t' << e.user_id << '\t' << to_string(e.type) << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

}  // namespace sagnn
