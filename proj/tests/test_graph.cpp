#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>

#include "sagnn/error.hpp"
#include "sagnn/graph.hpp"
#include "sagnn/synth.hpp"
#include "test_support.hpp"

using namespace sagnn;
using namespace testing_support;

namespace {

using Triple = std::tuple<std::string, std::string, int>;

std::multiset<Triple> triples_from_tweets(const BipartiteGraph& g) {
  std::multiset<Triple> out;
  for (std::uint32_t t = 0; t < g.num_tweets(); ++t) {
    for (const auto& a : g.users_of(t)) out.insert({g.tweet_ids()[t], g.user_ids()[a.index], int(a.type)});
  }
  return out;
}

std::multiset<Triple> triples_from_users(const BipartiteGraph& g) {
  std::multiset<Triple> out;
  for (std::uint32_t u = 0; u < g.num_users(); ++u) {
    for (const auto& a : g.tweets_of(u)) out.insert({g.tweet_ids()[a.index], g.user_ids()[u], int(a.type)});
  }
  return out;
}

std::set<std::uint32_t> two_step_reach(const BipartiteGraph& g, std::uint32_t t) {
  std::set<std::uint32_t> out;
  for (const auto& u : g.users_of(t)) {
    for (const auto& w : g.tweets_of(u.index)) {
      if (w.index != t) out.insert(w.index);
    }
  }
  return out;
}

}  // namespace

TEST(EdgeType, StableCodes) {
  EXPECT_EQ(static_cast<int>(EdgeType::Post), 0);
  EXPECT_EQ(static_cast<int>(EdgeType::Retweet), 1);
  EXPECT_EQ(parse_edge_type("post"), EdgeType::Post);
  EXPECT_EQ(parse_edge_type("retweet"), EdgeType::Retweet);
  EXPECT_THROW(parse_edge_type("like"), ValidationError);
}

TEST(BuildGraph, ToyGraphSecondOrderReach) {
  auto g = toy_graph();
  ASSERT_EQ(g.num_tweets(), 4u);
  ASSERT_EQ(g.num_users(), 2u);
  const auto a = *g.find_tweet("A");
  std::set<std::string> reach;
  for (auto t : two_step_reach(g, a)) reach.insert(g.tweet_ids()[t]);
  EXPECT_EQ(reach, (std::set<std::string>{"B", "C", "D"}));
}

TEST(BuildGraph, FirstAppearanceIndexing) {
  auto g = toy_graph();
  EXPECT_EQ(g.tweet_ids(), (std::vector<std::string>{"A", "B", "C", "D"}));
  EXPECT_EQ(g.user_ids(), (std::vector<std::string>{"uA", "uB"}));
}

TEST(BuildGraph, SingleEdge) {
  std::vector<EdgeRecord> edges{{"t0", "u0", EdgeType::Post}};
  auto g = build_graph(edges, true);
  EXPECT_EQ(g.num_tweets(), 1u);
  EXPECT_EQ(g.num_users(), 1u);
  EXPECT_EQ(triples_from_tweets(g), triples_from_users(g));
}

TEST(BuildGraph, DuplicateTriplesCollapse) {
  std::vector<EdgeRecord> edges{{"t0", "u0", EdgeType::Post},
                                {"t0", "u1", EdgeType::Retweet},
                                {"t0", "u1", EdgeType::Retweet},
                                {"t1", "u1", EdgeType::Post}};
  auto g = build_graph(edges, true);
  std::set<Triple> distinct;
  for (const auto& e : edges) distinct.insert({e.tweet_id, e.user_id, int(e.type)});
  EXPECT_EQ(g.num_edges(), distinct.size());
  auto got = triples_from_tweets(g);
  EXPECT_EQ(std::set<Triple>(got.begin(), got.end()), distinct);
}

TEST(BuildGraph, PostAndRetweetBySameUserKeepsBoth) {
  std::vector<EdgeRecord> edges{{"t0", "u0", EdgeType::Post}, {"t0", "u0", EdgeType::Retweet}};
  auto g = build_graph(edges, true);
  EXPECT_EQ(g.num_edges(), 2u);
  ASSERT_EQ(g.users_of(0).size(), 2u);
  EXPECT_EQ(g.users_of(0)[0].type, EdgeType::Post);
  EXPECT_EQ(g.users_of(0)[1].type, EdgeType::Retweet);
}

TEST(BuildGraph, StrictAuthorRejectsMissingOrDoublePost) {
  EXPECT_THROW(build_graph(toy_edges(), true), ValidationError);  // D has no author
  std::vector<EdgeRecord> two{{"t0", "u0", EdgeType::Post}, {"t0", "u1", EdgeType::Post}};
  EXPECT_THROW(build_graph(two, true), ValidationError);
  EXPECT_NO_THROW(build_graph(two, false));
}

TEST(BuildGraph, EmptyInputRejected) {
  std::vector<EdgeRecord> none;
  EXPECT_THROW(build_graph(none, false), ValidationError);
}

TEST(BuildGraph, RowsSortedAndUnique) {
  auto g = build_graph(random_edges(40, 12, 0.2, 3), true);
  for (std::uint32_t t = 0; t < g.num_tweets(); ++t) {
    auto row = g.users_of(t);
    EXPECT_TRUE(std::is_sorted(row.begin(), row.end()));
    EXPECT_EQ(std::adjacent_find(row.begin(), row.end()), row.end());
  }
  for (std::uint32_t u = 0; u < g.num_users(); ++u) {
    auto row = g.tweets_of(u);
    EXPECT_TRUE(std::is_sorted(row.begin(), row.end()));
  }
}

TEST(BuildGraph, TransposeConsistencyProperty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto g = build_graph(random_edges(30 + seed, 5 + seed % 7, 0.15, seed), true);
    EXPECT_EQ(triples_from_tweets(g), triples_from_users(g)) << "seed " << seed;
  }
}

TEST(BuildGraph, IdempotentUnderRepetition) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto edges = random_edges(25, 8, 0.2, seed);
    auto doubled = edges;
    doubled.insert(doubled.end(), edges.begin(), edges.end());
    EXPECT_TRUE(build_graph(edges, true) == build_graph(doubled, true));
  }
}

TEST(BuildGraph, StrictGraphHasOnePostPerTweet) {
  auto g = build_graph(random_edges(50, 10, 0.3, 9), true);
  for (std::uint32_t t = 0; t < g.num_tweets(); ++t) {
    auto row = g.users_of(t);
    EXPECT_EQ(std::count_if(row.begin(), row.end(), [](const Adjacent& a) { return a.type == EdgeType::Post; }), 1);
  }
}

TEST(BuildGraph, FromPartsRejectsInconsistentTranspose) {
  // Same-side or mismatched entries cannot be expressed through build_graph;
  // hand-built CSR arrays that disagree must be refused.
  Csr t2u({0, 1}, {{0, EdgeType::Post}});
  Csr u2t_wrong_type({0, 1}, {{0, EdgeType::Retweet}});
  EXPECT_THROW(BipartiteGraph::from_parts({"t"}, {"u"}, t2u, u2t_wrong_type), ValidationError);
  Csr u2t_out_of_range({0, 1}, {{3, EdgeType::Post}});
  EXPECT_THROW(BipartiteGraph::from_parts({"t"}, {"u"}, t2u, u2t_out_of_range), ValidationError);
  Csr u2t({0, 1}, {{0, EdgeType::Post}});
  EXPECT_NO_THROW(BipartiteGraph::from_parts({"t"}, {"u"}, t2u, u2t));
}

TEST(Stats, ToyGraphCounts) {
  auto s = stats(toy_graph());
  EXPECT_EQ(s.num_tweets, 4u);
  EXPECT_EQ(s.num_users, 2u);
  EXPECT_EQ(s.num_post_edges, 3u);
  EXPECT_EQ(s.num_retweet_edges, 2u);
}

TEST(Stats, PostsOnlyGraphHasNoRetweets) {
  std::vector<EdgeRecord> edges{{"a", "u", EdgeType::Post}, {"b", "u", EdgeType::Post}, {"c", "v", EdgeType::Post}};
  auto s = stats(build_graph(edges, true));
  EXPECT_EQ(s.num_retweet_edges, 0u);
  EXPECT_EQ(s.num_post_edges, s.num_tweets);
}

TEST(Stats, HistogramsConserveNodeCounts) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto s = stats(build_graph(random_edges(60, 15, 0.1, seed), true));
    EXPECT_EQ(std::accumulate(s.tweet_degree_histogram.begin(), s.tweet_degree_histogram.end(), std::size_t{0}),
              s.num_tweets);
    EXPECT_EQ(std::accumulate(s.user_degree_histogram.begin(), s.user_degree_histogram.end(), std::size_t{0}),
              s.num_users);
    EXPECT_EQ(s.num_post_edges, s.num_tweets);
  }
}

TEST(GraphFile, ToyRoundTrip) {
  TempDir dir;
  auto g = toy_graph();
  save_graph(g, dir / "g.bin");
  EXPECT_TRUE(load_graph(dir / "g.bin") == g);
}

TEST(GraphFile, EmptyGraphRejectedAtSave) {
  TempDir dir;
  EXPECT_THROW(save_graph(BipartiteGraph{}, dir / "g.bin"), ValidationError);
}

TEST(GraphFile, SyntheticTenThousandNodeRoundTripFieldByField) {
  SynthConfig cfg;
  cfg.num_users = 2000;
  cfg.seed = 11;
  auto corpus = generate(cfg);
  auto g = build_graph(corpus.edges, true);
  ASSERT_GE(g.num_tweets() + g.num_users(), 10000u);
  TempDir dir;
  save_graph(g, dir / "g.bin");
  auto h = load_graph(dir / "g.bin");
  EXPECT_EQ(h.num_tweets(), g.num_tweets());
  EXPECT_EQ(h.num_users(), g.num_users());
  EXPECT_EQ(h.tweet_ids(), g.tweet_ids());
  EXPECT_EQ(h.user_ids(), g.user_ids());
  EXPECT_EQ(h.tweet_to_user().offsets(), g.tweet_to_user().offsets());
  EXPECT_EQ(h.tweet_to_user().entries(), g.tweet_to_user().entries());
  EXPECT_EQ(h.user_to_tweet().offsets(), g.user_to_tweet().offsets());
  EXPECT_EQ(h.user_to_tweet().entries(), g.user_to_tweet().entries());
  save_graph(h, dir / "h.bin");
  EXPECT_EQ(read_bytes(dir / "g.bin"), read_bytes(dir / "h.bin"));
}

TEST(GraphFile, CorruptFilesRejected) {
  TempDir dir;
  save_graph(toy_graph(), dir / "g.bin");
  auto bytes = read_bytes(dir / "g.bin");

  auto write = [&](const std::string& name, const std::string& data) {
    std::ofstream(dir / name, std::ios::binary) << data;
    return dir / name;
  };
  EXPECT_THROW(load_graph(write("trunc.bin", bytes.substr(0, bytes.size() - 3))), ValidationError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(load_graph(write("magic.bin", bad_magic)), ValidationError);
  auto bad_version = bytes;
  bad_version[4] = 99;
  EXPECT_THROW(load_graph(write("version.bin", bad_version)), ValidationError);
  EXPECT_THROW(load_graph(write("trailing.bin", bytes + "x")), ValidationError);
  EXPECT_THROW(load_graph(dir / "missing.bin"), ValidationError);
}

TEST(EdgeTsv, RoundTripAndLineNumbers) {
  TempDir dir;
  write_edge_tsv(toy_edges(), dir / "e.tsv");
  EXPECT_EQ(read_edge_tsv(dir / "e.tsv"), toy_edges());

  std::ofstream(dir / "bad.tsv") << "t0\tu0\tpost\n\nt1\tu1\tfollow\n";
  try {
    read_edge_tsv(dir / "bad.tsv");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  std::ofstream(dir / "short.tsv") << "t0\tu0\n";
  EXPECT_THROW(read_edge_tsv(dir / "short.tsv"), ValidationError);
}
