#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "sagnn/dataset.hpp"
#include "sagnn/error.hpp"
#include "sagnn/synth.hpp"
#include "test_support.hpp"

using namespace sagnn;
using namespace testing_support;

namespace {

int user_camp(const std::string& user_id) { return std::stoi(user_id.substr(1)) % 2; }

std::map<std::string, int> label_map(const CorpusFiles& c) {
  std::map<std::string, int> m;
  for (std::size_t i = 0; i < c.ids.size(); ++i) m[c.ids[i]] = c.labels[i];
  return m;
}

std::vector<double> class_mean(const CorpusFiles& c, int label, bool low) {
  std::vector<double> mean(c.features.cols(), 0.0);
  std::size_t n = 0;
  for (std::size_t t = 0; t < c.ids.size(); ++t) {
    if (c.labels[t] != label || ((*c.low_signal)[t] == 1) != low) continue;
    ++n;
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += c.features(t, k);
  }
  for (auto& v : mean) v /= static_cast<double>(n);
  return mean;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST(Generate, LabelsFollowAuthorCamp) {
  SynthConfig cfg;
  cfg.num_users = 300;
  cfg.seed = 4;
  auto c = generate(cfg);
  auto labels = label_map(c);
  std::set<std::string> authored;
  for (const auto& e : c.edges) {
    if (e.type != EdgeType::Post) continue;
    EXPECT_TRUE(authored.insert(e.tweet_id).second) << "second author for " << e.tweet_id;
    EXPECT_EQ(labels.at(e.tweet_id), user_camp(e.user_id));
  }
  EXPECT_EQ(authored.size(), c.ids.size());
  EXPECT_EQ(c.features.rows(), c.ids.size());
  EXPECT_EQ(c.features.cols(), cfg.feature_dim);
  EXPECT_NO_THROW(make_dataset(c, true));
}

TEST(Generate, EpsilonZeroKeepsEveryRetweetInCamp) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SynthConfig cfg;
    cfg.num_users = 500;
    cfg.epsilon = 0.0;
    cfg.seed = seed;
    auto c = generate(cfg);
    auto labels = label_map(c);
    std::size_t retweets = 0;
    for (const auto& e : c.edges) {
      if (e.type != EdgeType::Retweet) continue;
      ++retweets;
      EXPECT_EQ(labels.at(e.tweet_id), user_camp(e.user_id));
    }
    EXPECT_GT(retweets, 1000u);
  }
}

TEST(Generate, CrossCampFractionTracksEpsilon) {
  for (double eps : {0.05, 0.2, 0.4}) {
    SynthConfig cfg;
    cfg.num_users = 5000;
    cfg.epsilon = eps;
    cfg.seed = 11;
    auto c = generate(cfg);
    auto labels = label_map(c);
    std::size_t retweets = 0, cross = 0;
    for (const auto& e : c.edges) {
      if (e.type != EdgeType::Retweet) continue;
      ++retweets;
      cross += labels.at(e.tweet_id) != user_camp(e.user_id);
    }
    ASSERT_GE(retweets, 50000u);
    EXPECT_NEAR(static_cast<double>(cross) / retweets, eps, 0.01);
  }
}

TEST(Generate, VolumesMatchConfiguredMeans) {
  SynthConfig cfg;
  cfg.num_users = 5000;
  cfg.mean_tweets_per_user = 4.0;
  cfg.retweet_rate = 2.5;
  cfg.seed = 12;
  auto c = generate(cfg);
  std::size_t retweets = 0;
  for (const auto& e : c.edges) retweets += e.type == EdgeType::Retweet;
  const double tweets = static_cast<double>(c.ids.size());
  EXPECT_NEAR(tweets / cfg.num_users, 4.0, 0.12);
  EXPECT_NEAR(retweets / tweets, 2.5, 0.1);
}

TEST(Generate, NoSelfOrDuplicateRetweets) {
  SynthConfig cfg;
  cfg.num_users = 60;  // small camps make the cap bind
  cfg.retweet_rate = 20.0;
  cfg.seed = 5;
  auto c = generate(cfg);
  std::map<std::string, std::string> author;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : c.edges) {
    if (e.type == EdgeType::Post) author[e.tweet_id] = e.user_id;
  }
  for (const auto& e : c.edges) {
    if (e.type != EdgeType::Retweet) continue;
    EXPECT_NE(author.at(e.tweet_id), e.user_id);
    EXPECT_TRUE(seen.insert({e.tweet_id, e.user_id}).second);
  }
}

TEST(Generate, LowSignalFractionAndFeatureGeometry) {
  SynthConfig cfg;
  cfg.num_users = 3000;
  cfg.low_signal_fraction = 0.3;
  cfg.class_separation = 4.0;
  cfg.noise_sigma = 0.5;
  cfg.feature_dim = 16;
  cfg.seed = 8;
  auto c = generate(cfg);
  ASSERT_TRUE(c.low_signal.has_value());
  double low = 0.0;
  for (int f : *c.low_signal) low += f;
  const double n = static_cast<double>(c.ids.size());
  // Four binomial standard deviations.
  EXPECT_NEAR(low / n, 0.3, 4.0 * std::sqrt(0.3 * 0.7 / n));
  // Signal rows sit delta apart; low-signal rows share the origin.
  EXPECT_NEAR(distance(class_mean(c, 1, false), class_mean(c, 0, false)), 4.0, 0.1);
  EXPECT_LT(distance(class_mean(c, 1, true), class_mean(c, 0, true)), 0.1);
}

TEST(Generate, LowSignalExtremes) {
  SynthConfig cfg;
  cfg.num_users = 200;
  cfg.low_signal_fraction = 0.0;
  auto none = generate(cfg);
  for (int f : *none.low_signal) EXPECT_EQ(f, 0);
  cfg.low_signal_fraction = 1.0;
  auto all = generate(cfg);
  for (int f : *all.low_signal) EXPECT_EQ(f, 1);
}

TEST(Generate, SeparabilityOracle) {
  SynthConfig cfg;
  cfg.num_users = 1000;
  cfg.epsilon = 0.0;
  cfg.class_separation = 10.0;
  cfg.noise_sigma = 0.5;
  cfg.seed = 2;
  auto c = generate(cfg);
  // Class means are delta apart while noise along any direction has sd sigma,
  // so the classes are separated by ten noise widths on each side.
  EXPECT_NEAR(distance(class_mean(c, 1, false), class_mean(c, 0, false)), 10.0, 0.1);
}

TEST(Generate, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.num_users = 300;
  cfg.low_signal_fraction = 0.2;
  cfg.seed = 99;
  EXPECT_EQ(generate(cfg), generate(cfg));
  auto other = cfg;
  other.seed = 100;
  EXPECT_NE(generate(cfg), generate(other));
}

TEST(Generate, RejectsBadConfigs) {
  auto bad = [](auto mutate) {
    SynthConfig cfg;
    mutate(cfg);
    return cfg;
  };
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.num_users = 0; })), ValidationError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.epsilon = 0.5; })), ValidationError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.epsilon = -0.1; })), ValidationError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.retweet_rate = -1.0; })), ValidationError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.low_signal_fraction = 1.5; })), ValidationError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.class_separation = -1.0; })), ValidationError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.feature_dim = 0; })), ValidationError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.mean_tweets_per_user = 0.5; })), ValidationError);
}

TEST(CappedPowerlaw, HandValues) {
  EXPECT_DOUBLE_EQ(capped_powerlaw_mean(2.0, 1), 1.0);
  EXPECT_NEAR(capped_powerlaw_mean(0.0, 9), 5.0, 1e-12);
  // k^-1 on {1,2}: weights 1 and 1/2, mean (1 + 1) / 1.5.
  EXPECT_NEAR(capped_powerlaw_mean(1.0, 2), 4.0 / 3.0, 1e-15);
}

TEST(DegreeReport, ToyGraph) {
  auto r = degree_report(toy_graph());
  // A reaches B through uA and C, D through uB.
  EXPECT_EQ(r.first_order, (std::vector<std::size_t>{2, 1, 1, 1}));
  EXPECT_EQ(r.second_order, (std::vector<std::size_t>{3, 1, 2, 2}));
  EXPECT_EQ(r.first_order_histogram, (std::map<std::size_t, std::size_t>{{1, 3}, {2, 1}}));
  EXPECT_EQ(r.second_order_histogram, (std::map<std::size_t, std::size_t>{{1, 1}, {2, 2}, {3, 1}}));
}

TEST(DegreeReport, MatchesSetTraversal) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SynthConfig cfg;
    cfg.num_users = 200;
    cfg.seed = seed;
    auto c = generate(cfg);
    auto g = build_graph(c.edges, true);
    ASSERT_GE(g.num_tweets() + g.num_users(), 1000u);
    std::map<std::string, std::set<std::string>> users_of, tweets_of;
    for (const auto& e : c.edges) {
      users_of[e.tweet_id].insert(e.user_id);
      tweets_of[e.user_id].insert(e.tweet_id);
    }
    auto r = degree_report(g);
    for (std::uint32_t t = 0; t < g.num_tweets(); ++t) {
      const auto& id = g.tweet_ids()[t];
      std::set<std::string> second;
      for (const auto& u : users_of[id]) second.insert(tweets_of[u].begin(), tweets_of[u].end());
      second.erase(id);
      EXPECT_EQ(r.first_order[t], users_of[id].size());
      EXPECT_EQ(r.second_order[t], second.size());
    }
  }
}

TEST(DegreeReport, PostsOnlyGraphHasFirstOrderOne) {
  SynthConfig cfg;
  cfg.num_users = 300;
  cfg.retweet_rate = 0.0;
  auto c = generate(cfg);
  for (const auto& e : c.edges) EXPECT_EQ(e.type, EdgeType::Post);
  auto g = build_graph(c.edges, true);
  auto r = degree_report(g);
  for (std::uint32_t t = 0; t < g.num_tweets(); ++t) {
    EXPECT_EQ(r.first_order[t], 1u);
    const auto author = g.users_of(t)[0].index;
    EXPECT_EQ(r.second_order[t], g.tweets_of(author).size() - 1);
  }
}
